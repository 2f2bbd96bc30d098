#ifndef SEQMARKOV_CSV_HPP
#define SEQMARKOV_CSV_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace seqmarkov::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Delimiter guessed from the extension: tab for .tsv/.tab, comma otherwise.
char delimiter_for(const std::filesystem::path& path);

// RFC 4180-style reader: quoted fields, doubled quotes, CRLF tolerant.
// A UTF-8 byte-order mark at the start is skipped, as are leading lines
// that begin with '#'. Blank lines are ignored.
Table read(std::istream& in, char delimiter = ',');
Table read_file(const std::filesystem::path& path);

std::string quote(std::string_view field, char delimiter = ',');
void write_row(std::ostream& out, const std::vector<std::string>& fields,
               char delimiter = ',');

}  // namespace seqmarkov::csv

#endif  // SEQMARKOV_CSV_HPP

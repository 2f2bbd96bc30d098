#include "seqmarkov/csv.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "seqmarkov/error.hpp"

namespace seqmarkov::csv {

char delimiter_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".tsv" || ext == ".tab") ? '\t' : ',';
}

Table read(std::istream& in, char delimiter) {
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  while (!text.empty() && text.front() == '#') {
    const auto eol = text.find('\n');
    text.erase(0, eol == std::string::npos ? text.size() : eol + 1);
  }

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool line_has_content = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (line_has_content) {
      end_field();
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    field_started = false;
    line_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
      line_has_content = true;
    } else if (c == delimiter) {
      line_has_content = true;
      end_field();
    } else if (c == '\r') {
      // ignored; the following \n ends the record
    } else if (c == '\n') {
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
      line_has_content = true;
    }
  }
  if (in_quotes) throw InputError("unterminated quoted field in CSV input");
  end_record();

  if (records.empty()) throw InputError("empty file");
  Table table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read(in, delimiter_for(path));
}

std::string quote(std::string_view field, char delimiter) {
  const bool needs = field.find_first_of(std::string{'"', '\n', '\r', delimiter}) !=
                     std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields,
               char delimiter) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << delimiter;
    out << quote(fields[i], delimiter);
  }
  out << '\n';
}

}  // namespace seqmarkov::csv

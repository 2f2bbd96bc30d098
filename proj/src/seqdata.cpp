#include "seqmarkov/seqdata.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "seqmarkov/csv.hpp"
#include "seqmarkov/error.hpp"

namespace seqmarkov {

Alphabet::Alphabet(std::vector<std::string> symbols,
                   std::vector<std::string> colors)
    : symbols_(std::move(symbols)), colors_(std::move(colors)) {
  if (symbols_.empty()) throw InputError("alphabet must contain at least one symbol");
  std::set<std::string> seen(symbols_.begin(), symbols_.end());
  if (seen.size() != symbols_.size())
    throw InputError("alphabet symbols must be distinct");
  if (!colors_.empty() && colors_.size() != symbols_.size())
    throw InputError("alphabet colors must match the number of symbols");
}

std::optional<std::size_t> Alphabet::index_of(std::string_view token) const {
  const auto it = std::find(symbols_.begin(), symbols_.end(), token);
  if (it == symbols_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - symbols_.begin());
}

SequenceSet::SequenceSet(Alphabet alphabet, CellGrid cells,
                         std::vector<std::string> ids,
                         std::vector<std::string> time_labels)
    : alphabet_(std::move(alphabet)),
      cells_(std::move(cells)),
      ids_(std::move(ids)),
      time_labels_(std::move(time_labels)) {
  if (alphabet_.size() == 0) throw InputError("sequence set needs an alphabet");
  if (cells_.rows() < 1 || cells_.cols() < 1)
    throw InputError("sequence set must have at least one row and one column");
  if (ids_.size() != n_sequences())
    throw InputError("number of ids does not match number of sequences");
  if (time_labels_.empty()) {
    for (std::size_t t = 0; t < n_timepoints(); ++t)
      time_labels_.push_back(std::to_string(t + 1));
  }
  if (time_labels_.size() != n_timepoints())
    throw InputError("number of time labels does not match number of columns");

  const auto m = static_cast<Cell>(alphabet_.size());
  lengths_.resize(n_sequences());
  for (std::size_t i = 0; i < n_sequences(); ++i) {
    const auto r = row(i);
    std::size_t len = r.size();
    for (std::size_t t = 0; t < r.size(); ++t) {
      const Cell c = r[t];
      if (c >= m || (c < 0 && c != kUnknown && c != kPadding))
        throw InputError("cell value out of range in row " + ids_[i]);
      if (c == kPadding && len == r.size()) len = t;
      if (c != kPadding && len != r.size())
        throw InputError("padding must be a suffix (row " + ids_[i] + ")");
    }
    lengths_[i] = len;
  }
}

SequenceSet SequenceSet::subset(std::span<const std::size_t> rows) const {
  CellGrid cells(static_cast<Eigen::Index>(rows.size()), cells_.cols());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= n_sequences()) throw InputError("subset row out of range");
    cells.row(static_cast<Eigen::Index>(k)) =
        cells_.row(static_cast<Eigen::Index>(rows[k]));
    ids.push_back(ids_[rows[k]]);
  }
  return SequenceSet(alphabet_, std::move(cells), std::move(ids), time_labels_);
}

ColumnRange parse_column_range(std::string_view text) {
  auto parse = [&](std::string_view part) {
    std::size_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size() || value == 0)
      throw InputError("invalid column range '" + std::string(text) + "'");
    return value;
  };
  const auto dash = text.find_first_of("-:");
  ColumnRange range;
  if (dash == std::string_view::npos) {
    range.first = range.last = parse(text);
  } else {
    range.first = parse(text.substr(0, dash));
    range.last = parse(text.substr(dash + 1));
  }
  if (range.last < range.first)
    throw InputError("column range '" + std::string(text) + "' is reversed");
  return range;
}

namespace {

SequenceSet build_from_table(const csv::Table& table,
                             const WideCsvOptions& options) {
  const auto& header = table.header;
  const auto& range = options.seq_columns;
  if (range.last > header.size())
    throw InputError("sequence columns " + std::to_string(range.first) + "-" +
                     std::to_string(range.last) + " exceed header width " +
                     std::to_string(header.size()));
  if (table.rows.empty()) throw InputError("empty file: no data rows");

  std::optional<std::size_t> id_index;
  if (options.id_column) {
    const auto it = std::find(header.begin(), header.end(), *options.id_column);
    if (it == header.end())
      throw InputError("id column '" + *options.id_column + "' not found");
    id_index = static_cast<std::size_t>(it - header.begin());
  }

  for (std::size_t r = 0; r < table.rows.size(); ++r)
    if (table.rows[r].size() != header.size())
      throw InputError("ragged row " + std::to_string(r + 2) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(table.rows[r].size()));

  const std::size_t first = range.first - 1;
  const std::size_t width = range.last - range.first + 1;
  const auto is_missing = [&](const std::string& tok) {
    return tok == options.missing_token;
  };

  Alphabet alphabet;
  if (options.alphabet) {
    alphabet = *options.alphabet;
  } else {
    std::set<std::string> tokens;
    for (const auto& row : table.rows)
      for (std::size_t c = 0; c < width; ++c)
        if (!is_missing(row[first + c])) tokens.insert(row[first + c]);
    if (tokens.empty()) throw InputError("no observed symbols in input");
    alphabet = Alphabet({tokens.begin(), tokens.end()});
  }

  CellGrid cells(static_cast<Eigen::Index>(table.rows.size()),
                 static_cast<Eigen::Index>(width));
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::size_t last_observed = 0;  // one past the last non-missing cell
    for (std::size_t c = 0; c < width; ++c)
      if (!is_missing(row[first + c])) last_observed = c + 1;
    for (std::size_t c = 0; c < width; ++c) {
      const auto& tok = row[first + c];
      Cell cell;
      if (c >= last_observed) {
        cell = kPadding;
      } else if (is_missing(tok)) {
        cell = kUnknown;
      } else {
        const auto idx = alphabet.index_of(tok);
        if (!idx)
          throw InputError("unknown symbol '" + tok + "' in row " +
                           std::to_string(r + 2));
        cell = static_cast<Cell>(*idx);
      }
      cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cell;
    }
    ids.push_back(id_index ? row[*id_index] : std::to_string(r + 1));
  }
  std::vector<std::string> time_labels(header.begin() + static_cast<std::ptrdiff_t>(first),
                                       header.begin() + static_cast<std::ptrdiff_t>(first + width));
  return SequenceSet(std::move(alphabet), std::move(cells), std::move(ids),
                     std::move(time_labels));
}

}  // namespace

SequenceSet ingest_wide_csv(const std::filesystem::path& path,
                            const WideCsvOptions& options) {
  return build_from_table(csv::read_file(path), options);
}

SequenceSet ingest_wide_csv(std::istream& in, const WideCsvOptions& options,
                            char delimiter) {
  return build_from_table(csv::read(in, delimiter), options);
}

void write_wide_csv(std::ostream& out, const SequenceSet& s,
                    const std::string& missing_token) {
  std::vector<std::string> fields{"id"};
  fields.insert(fields.end(), s.time_labels().begin(), s.time_labels().end());
  csv::write_row(out, fields);
  for (std::size_t i = 0; i < s.n_sequences(); ++i) {
    fields.assign(1, s.ids()[i]);
    for (Cell c : s.row(i))
      fields.push_back(is_symbol(c) ? s.alphabet().symbol(static_cast<std::size_t>(c))
                                    : missing_token);
    csv::write_row(out, fields);
  }
}

std::vector<std::size_t> sequence_lengths(const SequenceSet& s) {
  std::vector<std::size_t> out(s.n_sequences());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.length(i);
  return out;
}

Eigen::VectorXd first_state_distribution(const SequenceSet& s) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.alphabet().size()));
  for (std::size_t i = 0; i < s.n_sequences(); ++i) {
    const Cell c = s.cell(i, 0);
    if (is_symbol(c)) counts(c) += 1;
  }
  const double total = counts.sum();
  if (total == 0) throw EstimationError("no observed first states");
  return counts / total;
}

std::size_t count_observations(const SequenceSet& s) {
  return static_cast<std::size_t>((s.cells().array() >= 0).count());
}

std::string describe(const SequenceSet& s) {
  const auto lengths = sequence_lengths(s);
  const auto [lo, hi] = std::minmax_element(lengths.begin(), lengths.end());
  std::ostringstream os;
  os << s.n_sequences() << " sequences, min/max length " << *lo << "/" << *hi;
  const auto empty = std::count(lengths.begin(), lengths.end(), 0u);
  if (empty > 0) os << ", " << empty << " empty (excluded from estimation)";
  return os.str();
}

CovariateFrame::CovariateFrame(std::vector<std::string> ids,
                               std::vector<Factor> factors)
    : ids_(std::move(ids)), factors_(std::move(factors)) {
  for (const auto& f : factors_) {
    if (f.codes.size() != ids_.size())
      throw InputError("covariate '" + f.name + "' has wrong number of rows");
    for (int code : f.codes)
      if (code < 0 || static_cast<std::size_t>(code) >= f.levels.size())
        throw InputError("covariate '" + f.name + "' has a value outside its levels");
  }
}

const Factor& CovariateFrame::factor(std::string_view name) const {
  for (const auto& f : factors_)
    if (f.name == name) return f;
  throw InputError("covariate '" + std::string(name) + "' not found");
}

void CovariateFrame::check_aligned(const SequenceSet& s) const {
  if (ids_ != s.ids())
    throw InputError("covariate ids do not match sequence ids in order");
}

CovariateFrame CovariateFrame::subset(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<Factor> factors = factors_;
  for (auto& f : factors) f.codes.clear();
  for (std::size_t r : rows) {
    ids.push_back(ids_.at(r));
    for (std::size_t k = 0; k < factors.size(); ++k)
      factors[k].codes.push_back(factors_[k].codes.at(r));
  }
  return CovariateFrame(std::move(ids), std::move(factors));
}

CovariateFrame load_covariates(
    const std::filesystem::path& path, const std::optional<std::string>& id_column,
    const std::vector<std::string>& columns,
    const std::map<std::string, std::vector<std::string>>& level_order) {
  const auto table = csv::read_file(path);
  auto column_index = [&](const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end())
      throw InputError("column '" + name + "' not found in " + path.string());
    return static_cast<std::size_t>(it - table.header.begin());
  };
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    if (table.rows[r].size() != table.header.size())
      throw InputError("ragged row " + std::to_string(r + 2));

  std::vector<std::string> ids;
  const auto id_idx = id_column ? std::optional(column_index(*id_column)) : std::nullopt;
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    ids.push_back(id_idx ? table.rows[r][*id_idx] : std::to_string(r + 1));

  std::vector<Factor> factors;
  for (const auto& name : columns) {
    const auto idx = column_index(name);
    Factor f;
    f.name = name;
    if (auto it = level_order.find(name); it != level_order.end()) {
      f.levels = it->second;
    } else {
      std::set<std::string> values;
      for (const auto& row : table.rows) values.insert(row[idx]);
      f.levels.assign(values.begin(), values.end());
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& v = table.rows[r][idx];
      const auto it = std::find(f.levels.begin(), f.levels.end(), v);
      if (it == f.levels.end())
        throw InputError("value '" + v + "' of covariate '" + name +
                         "' is not a declared level");
      f.codes.push_back(static_cast<int>(it - f.levels.begin()));
    }
    factors.push_back(std::move(f));
  }
  return CovariateFrame(std::move(ids), std::move(factors));
}

std::vector<std::string> load_column(const std::filesystem::path& path,
                                     const std::string& column) {
  const auto table = csv::read_file(path);
  const auto it = std::find(table.header.begin(), table.header.end(), column);
  if (it == table.header.end())
    throw InputError("column '" + column + "' not found in " + path.string());
  const auto idx = static_cast<std::size_t>(it - table.header.begin());
  std::vector<std::string> out;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw InputError("ragged row in " + path.string());
    out.push_back(row[idx]);
  }
  return out;
}

}  // namespace seqmarkov

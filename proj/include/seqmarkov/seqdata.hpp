#ifndef SEQMARKOV_SEQDATA_HPP
#define SEQMARKOV_SEQDATA_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqmarkov {

// A cell of a sequence grid: a symbol index >= 0, or one of the two missing
// kinds. Unknown is an interior gap whose true state was not observed;
// Padding is the technical right-fill of a shorter sequence.
using Cell = std::int32_t;
inline constexpr Cell kUnknown = -1;
inline constexpr Cell kPadding = -2;

constexpr bool is_symbol(Cell c) { return c >= 0; }

using CellGrid =
    Eigen::Matrix<Cell, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> symbols,
                    std::vector<std::string> colors = {});

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(std::size_t i) const { return symbols_.at(i); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  // Empty when no colors were assigned; otherwise one hex color per symbol.
  const std::vector<std::string>& colors() const { return colors_; }
  std::optional<std::size_t> index_of(std::string_view token) const;

  bool operator==(const Alphabet& other) const {
    return symbols_ == other.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::vector<std::string> colors_;
};

// Rectangular panel of categorical sequences. Immutable once built; the
// constructor enforces the padding-suffix invariant.
class SequenceSet {
 public:
  SequenceSet(Alphabet alphabet, CellGrid cells, std::vector<std::string> ids,
              std::vector<std::string> time_labels);

  const Alphabet& alphabet() const { return alphabet_; }
  const CellGrid& cells() const { return cells_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::string>& time_labels() const { return time_labels_; }

  std::size_t n_sequences() const { return static_cast<std::size_t>(cells_.rows()); }
  std::size_t n_timepoints() const { return static_cast<std::size_t>(cells_.cols()); }

  Cell cell(std::size_t i, std::size_t t) const {
    return cells_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
  }
  // Full row including any trailing padding.
  std::span<const Cell> row(std::size_t i) const {
    return {cells_.data() + i * n_timepoints(), n_timepoints()};
  }
  // Row truncated at its first Padding cell.
  std::span<const Cell> observed_row(std::size_t i) const {
    return row(i).first(length(i));
  }
  std::size_t length(std::size_t i) const { return lengths_[i]; }

  // Rows in the given order; the alphabet and time labels are kept.
  SequenceSet subset(std::span<const std::size_t> rows) const;

 private:
  Alphabet alphabet_;
  CellGrid cells_;
  std::vector<std::string> ids_;
  std::vector<std::string> time_labels_;
  std::vector<std::size_t> lengths_;
};

struct ColumnRange {
  std::size_t first = 1;  // 1-based, inclusive
  std::size_t last = 1;
};

// Parses "3-22" or a single column "5".
ColumnRange parse_column_range(std::string_view text);

struct WideCsvOptions {
  ColumnRange seq_columns;
  std::optional<std::string> id_column;
  std::optional<Alphabet> alphabet;
  std::string missing_token;
};

SequenceSet ingest_wide_csv(const std::filesystem::path& path,
                            const WideCsvOptions& options);
SequenceSet ingest_wide_csv(std::istream& in, const WideCsvOptions& options,
                            char delimiter = ',');

// Writes `id` followed by one column per time point. Unknown cells and
// padding are both written as `missing_token`.
void write_wide_csv(std::ostream& out, const SequenceSet& s,
                    const std::string& missing_token = "");

std::vector<std::size_t> sequence_lengths(const SequenceSet& s);

// Empirical distribution of first-column symbols, skipping Unknown/Padding.
Eigen::VectorXd first_state_distribution(const SequenceSet& s);

// Count of Symbol cells (neither Unknown nor Padding).
std::size_t count_observations(const SequenceSet& s);

// "N sequences, min/max length a/b" plus the number of empty rows, if any.
std::string describe(const SequenceSet& s);

// A named categorical covariate. codes[i] indexes `levels`.
struct Factor {
  std::string name;
  std::vector<std::string> levels;
  std::vector<int> codes;
};

class CovariateFrame {
 public:
  CovariateFrame() = default;
  CovariateFrame(std::vector<std::string> ids, std::vector<Factor> factors);

  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t n_rows() const { return ids_.size(); }
  const Factor& factor(std::string_view name) const;

  // Throws when the ids do not match `s.ids()` position by position.
  void check_aligned(const SequenceSet& s) const;
  CovariateFrame subset(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::string> ids_;
  std::vector<Factor> factors_;
};

// Reads the named columns as factors. Level order comes from `level_order`
// when given for a column, otherwise sorted lexicographically.
CovariateFrame load_covariates(
    const std::filesystem::path& path, const std::optional<std::string>& id_column,
    const std::vector<std::string>& columns,
    const std::map<std::string, std::vector<std::string>>& level_order = {});

// Reads a single categorical column, aligned to the file's row order.
std::vector<std::string> load_column(const std::filesystem::path& path,
                                     const std::string& column);

}  // namespace seqmarkov

#endif  // SEQMARKOV_SEQDATA_HPP

#ifndef SEQMARKOV_PRINTING_HPP
#define SEQMARKOV_PRINTING_HPP

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "seqmarkov/hmm.hpp"
#include "seqmarkov/markov.hpp"
#include "seqmarkov/mixture.hpp"
#include "seqmarkov/modelselect.hpp"

namespace seqmarkov {

// Formats a group of numbers with one shared layout: enough decimals for
// every entry to show `digits` significant digits (trailing zeros dropped),
// switching to scientific notation when that is narrower.
std::vector<std::string> format_common(const std::vector<double>& values, int digits = 3);
// A single number formatted on its own.
std::string format_number(double x, int digits = 7);

// Named vector: names above values, fields right-aligned to a common width,
// wrapped at 80 columns.
void print_named_vector(std::ostream& out, const std::vector<std::string>& names,
                        const Eigen::VectorXd& values, int digits = 3);

// Matrix with row and column names; each column is formatted separately.
// When `row_title` and `col_title` are non-empty they label the two
// dimensions above the row names.
void print_matrix(std::ostream& out, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& row_names,
                  const std::vector<std::string>& col_names, const std::string& row_title = "",
                  const std::string& col_title = "", int digits = 3);

void print_model(std::ostream& out, const MarkovModel& m);
void print_model(std::ostream& out, const HiddenMarkovModel& h);
void print_model(std::ostream& out, const MixtureModel& m);

void print_summary(std::ostream& out, const MixtureSummary& s);

struct NamedScore {
  std::string name;
  std::string type;
  ModelScore score;
};

// Sorted by BIC, lowest first.
void print_bic_table(std::ostream& out, std::vector<NamedScore> scores);

}  // namespace seqmarkov

#endif  // SEQMARKOV_PRINTING_HPP

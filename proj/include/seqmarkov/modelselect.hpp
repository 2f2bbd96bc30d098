#ifndef SEQMARKOV_MODELSELECT_HPP
#define SEQMARKOV_MODELSELECT_HPP

#include <Eigen/Dense>

#include <cstddef>

#include "seqmarkov/hmm.hpp"
#include "seqmarkov/markov.hpp"
#include "seqmarkov/mixture.hpp"

namespace seqmarkov {

struct ModelScore {
  double log_likelihood = 0;
  std::size_t free_parameters = 0;
  std::size_t n_observations = 0;
  double bic = 0;
};

// bic = -2 log L + p ln(n). Throws when n is zero.
ModelScore make_score(double log_likelihood, std::size_t free_parameters,
                      std::size_t n_observations);

// Nonzero entries minus one, summed over probability rows.
template <typename Derived>
std::size_t free_row_parameters(const Eigen::MatrixBase<Derived>& rows) {
  std::size_t total = 0;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const auto nonzero = static_cast<std::size_t>((rows.row(r).array() != 0).count());
    if (nonzero > 0) total += nonzero - 1;
  }
  return total;
}

std::size_t count_free_parameters(const MarkovModel& m);
std::size_t count_free_parameters(const HiddenMarkovModel& h);
// Submodel rows plus D * (K - 1) coefficients.
std::size_t count_free_parameters(const MixtureModel& m);

// n is the number of observed (Symbol) cells.
ModelScore bic(const MarkovModel& m, const SequenceSet& s);
ModelScore bic(const HiddenMarkovModel& h, const SequenceSet& s, unsigned threads = 1);
ModelScore bic(const MixtureModel& m, const CovariateFrame& cov, const SequenceSet& s,
               unsigned threads = 1);

}  // namespace seqmarkov

#endif  // SEQMARKOV_MODELSELECT_HPP

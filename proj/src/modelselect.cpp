#include "seqmarkov/modelselect.hpp"

#include <cmath>

#include "seqmarkov/error.hpp"

namespace seqmarkov {

ModelScore make_score(double log_likelihood, std::size_t free_parameters,
                      std::size_t n_observations) {
  if (n_observations == 0)
    throw EstimationError("BIC needs at least one observed cell");
  ModelScore score{log_likelihood, free_parameters, n_observations, 0};
  score.bic = -2.0 * log_likelihood +
              static_cast<double>(free_parameters) *
                  std::log(static_cast<double>(n_observations));
  return score;
}

std::size_t count_free_parameters(const MarkovModel& m) {
  return free_row_parameters(m.initial.transpose()) +
         free_row_parameters(m.transitions);
}

std::size_t count_free_parameters(const HiddenMarkovModel& h) {
  return free_row_parameters(h.initial.transpose()) +
         free_row_parameters(h.transitions) + free_row_parameters(h.emissions);
}

std::size_t count_free_parameters(const MixtureModel& m) {
  std::size_t total = 0;
  for (const auto& c : m.clusters) total += count_free_parameters(c);
  if (m.n_clusters() > 1) total += m.design.n_columns() * (m.n_clusters() - 1);
  return total;
}

ModelScore bic(const MarkovModel& m, const SequenceSet& s) {
  return make_score(mm_log_likelihood(m, s), count_free_parameters(m),
                    count_observations(s));
}

ModelScore bic(const HiddenMarkovModel& h, const SequenceSet& s, unsigned threads) {
  return make_score(log_likelihood(h, s, threads), count_free_parameters(h),
                    count_observations(s));
}

ModelScore bic(const MixtureModel& m, const CovariateFrame& cov, const SequenceSet& s,
               unsigned threads) {
  return make_score(mixture_log_likelihood(m, cov, s, threads),
                    count_free_parameters(m), count_observations(s));
}

}  // namespace seqmarkov

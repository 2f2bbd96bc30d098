#include "seqmarkov/markov.hpp"

#include <cmath>

#include "seqmarkov/error.hpp"
#include "seqmarkov/logmath.hpp"

namespace seqmarkov {

void MarkovModel::validate() const {
  const auto m = static_cast<Eigen::Index>(alphabet.size());
  if (initial.size() != m || transitions.rows() != m || transitions.cols() != m)
    throw DimensionError("Markov model dimensions do not match its alphabet");
  if (!is_probability_vector(initial))
    throw InputError("initial probabilities must be non-negative and sum to 1");
  if (!is_row_stochastic(transitions))
    throw InputError("transition matrix rows must be non-negative and sum to 1");
}

TransitionCounts::TransitionCounts(std::size_t n_symbols)
    : first(CountVector::Zero(static_cast<Eigen::Index>(n_symbols))),
      pairs(CountMatrix::Zero(static_cast<Eigen::Index>(n_symbols),
                              static_cast<Eigen::Index>(n_symbols))) {}

TransitionCounts& TransitionCounts::operator+=(const TransitionCounts& other) {
  first += other.first;
  pairs += other.pairs;
  return *this;
}

TransitionCounts count_transitions(const SequenceSet& s) {
  TransitionCounts counts(s.alphabet().size());
  for (std::size_t i = 0; i < s.n_sequences(); ++i) {
    const auto row = s.observed_row(i);
    if (row.empty()) continue;
    if (is_symbol(row[0])) counts.first(row[0]) += 1;
    for (std::size_t t = 1; t < row.size(); ++t)
      if (is_symbol(row[t - 1]) && is_symbol(row[t]))
        counts.pairs(row[t - 1], row[t]) += 1;
  }
  return counts;
}

TransitionEstimate normalize_counts(const CountMatrix& pairs) {
  const auto m = pairs.rows();
  TransitionEstimate out;
  out.probabilities.resize(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const std::int64_t total = pairs.row(r).sum();
    if (total == 0) {
      out.probabilities.row(r).setConstant(1.0 / static_cast<double>(m));
      out.fallback_rows.push_back(static_cast<std::size_t>(r));
      continue;
    }
    for (Eigen::Index c = 0; c < m; ++c)
      out.probabilities(r, c) =
          static_cast<double>(pairs(r, c)) / static_cast<double>(total);
  }
  return out;
}

MarkovModel estimate_mm(const SequenceSet& s) {
  const auto counts = count_transitions(s);
  const std::int64_t n_first = counts.first.sum();
  if (n_first == 0 && counts.pairs.sum() == 0)
    throw EstimationError("no observed first states or transitions");
  if (n_first == 0) throw EstimationError("no observed first states");

  MarkovModel m;
  m.alphabet = s.alphabet();
  m.initial = counts.first.cast<double>() / static_cast<double>(n_first);
  auto est = normalize_counts(counts.pairs);
  m.transitions = std::move(est.probabilities);
  m.fallback_rows = std::move(est.fallback_rows);
  return m;
}

double mm_sequence_log_likelihood(const MarkovModel& m, std::span<const Cell> row) {
  double ll = 0;
  for (std::size_t t = 0; t < row.size() && row[t] != kPadding; ++t) {
    if (!is_symbol(row[t])) continue;
    if (t == 0) {
      ll += std::log(m.initial(row[0]));
    } else if (is_symbol(row[t - 1])) {
      ll += std::log(m.transitions(row[t - 1], row[t]));
    }
  }
  return ll;
}

double mm_log_likelihood(const MarkovModel& m, const SequenceSet& s) {
  if (!(m.alphabet == s.alphabet()))
    throw DimensionError("model and data alphabets differ");
  double ll = 0;
  for (std::size_t i = 0; i < s.n_sequences(); ++i)
    ll += mm_sequence_log_likelihood(m, s.row(i));
  return ll;
}

}  // namespace seqmarkov

#ifndef SEQMARKOV_MARKOV_HPP
#define SEQMARKOV_MARKOV_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "seqmarkov/seqdata.hpp"

namespace seqmarkov {

using ProbabilityVector = Eigen::VectorXd;
// Rows are origin states, columns destination states.
using TransitionMatrix = Eigen::MatrixXd;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// First-order, time-homogeneous Markov chain over the observed alphabet.
struct MarkovModel {
  Alphabet alphabet;
  ProbabilityVector initial;
  TransitionMatrix transitions;
  // Origin rows that had no observed transitions and received the uniform
  // fallback during estimation.
  std::vector<std::size_t> fallback_rows;

  void validate() const;
};

// Exact integer tallies. A pair is counted only when both cells are symbols.
struct TransitionCounts {
  CountVector first;
  CountMatrix pairs;

  explicit TransitionCounts(std::size_t n_symbols = 0);
  TransitionCounts& operator+=(const TransitionCounts& other);
};

TransitionCounts count_transitions(const SequenceSet& s);

struct TransitionEstimate {
  TransitionMatrix probabilities;
  std::vector<std::size_t> fallback_rows;
};

// Row-normalized pair counts; zero-count rows become uniform 1/M.
TransitionEstimate normalize_counts(const CountMatrix& pairs);

MarkovModel estimate_mm(const SequenceSet& s);

// Log-probability of one row under the chain. The initial term applies when
// the first cell is a symbol; each consecutive symbol pair adds log a_rs.
double mm_sequence_log_likelihood(const MarkovModel& m, std::span<const Cell> row);
double mm_log_likelihood(const MarkovModel& m, const SequenceSet& s);

}  // namespace seqmarkov

#endif  // SEQMARKOV_MARKOV_HPP

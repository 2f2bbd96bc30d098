#ifndef SEQMARKOV_HMM_HPP
#define SEQMARKOV_HMM_HPP

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "seqmarkov/markov.hpp"
#include "seqmarkov/seqdata.hpp"

namespace seqmarkov {

// Rows are hidden states, columns observed symbols.
using EmissionMatrix = Eigen::MatrixXd;

struct HiddenMarkovModel {
  Alphabet alphabet;
  std::vector<std::string> state_labels;
  ProbabilityVector initial;
  TransitionMatrix transitions;
  EmissionMatrix emissions;

  std::size_t n_states() const { return static_cast<std::size_t>(initial.size()); }
  std::size_t n_symbols() const { return alphabet.size(); }
  void validate() const;
};

// "State 1", "State 2", ...
std::vector<std::string> default_state_labels(std::size_t n_states);

// A Markov chain viewed as an HMM whose hidden states are the symbols and
// whose emission matrix is the identity.
HiddenMarkovModel embed_markov_model(const MarkovModel& m);
bool has_identity_emissions(const HiddenMarkovModel& h);
MarkovModel to_markov_model(const HiddenMarkovModel& h);

// Log-domain copies of the parameters, shared by all recursions.
struct LogParameters {
  Eigen::VectorXd initial;
  Eigen::MatrixXd transitions;
  Eigen::MatrixXd emissions;

  explicit LogParameters(const HiddenMarkovModel& h);
  // log b_s(y); zero (a factor of one) for Unknown cells.
  double emission(Eigen::Index state, Cell y) const {
    return is_symbol(y) ? emissions(state, y) : 0.0;
  }
};

struct ForwardResult {
  double log_likelihood = 0;
  // length x S table of log alpha; rows stop at the first Padding cell.
  Eigen::MatrixXd log_alpha;
};

ForwardResult log_forward(const HiddenMarkovModel& h, std::span<const Cell> row);
ForwardResult log_forward(const LogParameters& lp, std::span<const Cell> row);
Eigen::MatrixXd log_backward(const HiddenMarkovModel& h, std::span<const Cell> row);
Eigen::MatrixXd log_backward(const LogParameters& lp, std::span<const Cell> row);

// Smoothed state probabilities gamma_t(s), one row per observed position.
Eigen::MatrixXd posterior_states(const HiddenMarkovModel& h, std::span<const Cell> row);

std::vector<double> sequence_log_likelihoods(const HiddenMarkovModel& h,
                                             const SequenceSet& s,
                                             unsigned threads = 1);
double log_likelihood(const HiddenMarkovModel& h, const SequenceSet& s,
                      unsigned threads = 1);

struct HiddenPath {
  std::vector<std::size_t> states;
  double log_probability = 0;
};

// Most probable hidden path. Ties go to the smallest state index, both for
// the final state and at every backtrack step; scores within a relative
// 1e-12 of each other are ties. An impossible row gives the all-zero path.
HiddenPath viterbi(const HiddenMarkovModel& h, std::span<const Cell> row);
std::vector<HiddenPath> viterbi(const HiddenMarkovModel& h, const SequenceSet& s,
                                unsigned threads = 1);

// Expected sufficient statistics of Baum-Welch.
struct ExpectedCounts {
  Eigen::VectorXd initial;
  Eigen::MatrixXd transitions;
  Eigen::MatrixXd emissions;
  double log_likelihood = 0;

  ExpectedCounts(std::size_t n_states, std::size_t n_symbols);
  ExpectedCounts& operator+=(const ExpectedCounts& other);
};

// Adds `weight` times the posterior counts of one sequence and returns the
// sequence log-likelihood. Sequences with zero likelihood add nothing.
double accumulate_counts(const LogParameters& lp, std::span<const Cell> row,
                         double weight, ExpectedCounts& counts);
// Same, reusing a forward pass already computed for `row`.
void accumulate_counts(const LogParameters& lp, std::span<const Cell> row,
                       const ForwardResult& fwd, double weight,
                       ExpectedCounts& counts);

// Normalizes expected counts into new parameters. Exact zeros of `h` stay
// zero and rows without expected mass keep their previous values.
HiddenMarkovModel apply_counts(const HiddenMarkovModel& h, const ExpectedCounts& counts);

struct EMStepResult {
  HiddenMarkovModel model;
  double log_likelihood;  // of the input model
};

EMStepResult em_step(const HiddenMarkovModel& h, const SequenceSet& s,
                     unsigned threads = 1);

struct EMControl {
  std::size_t max_iterations = 1000;
  double relative_tolerance = 1e-10;
  unsigned threads = 1;
};

struct EMResult {
  double log_likelihood = 0;
  std::size_t iterations = 0;
  // Relative log-likelihood change at the final iteration.
  double change = 0;
  // Log-likelihood before the first update and after each update.
  std::vector<double> trace;
};

struct HmmFit {
  HiddenMarkovModel model;
  EMResult result;
};

HmmFit em_fit(const HiddenMarkovModel& h, const SequenceSet& s,
              const EMControl& control = {});

double relative_change(double previous, double current);

}  // namespace seqmarkov

#endif  // SEQMARKOV_HMM_HPP

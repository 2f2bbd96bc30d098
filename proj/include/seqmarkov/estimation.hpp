#ifndef SEQMARKOV_ESTIMATION_HPP
#define SEQMARKOV_ESTIMATION_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "seqmarkov/hmm.hpp"
#include "seqmarkov/markov.hpp"
#include "seqmarkov/mixture.hpp"
#include "seqmarkov/seqdata.hpp"

namespace seqmarkov {

using Rng = std::mt19937_64;

// Seed of restart round `round`, derived from the master seed by splitmix64
// mixing.
std::uint64_t round_seed(std::uint64_t master, std::size_t round);

// Uniform draw in [0, 1) from the top 53 bits; identical on every platform.
double uniform01(Rng& rng);
// Index drawn from the (unnormalized, nonnegative) weights.
std::size_t draw_categorical(const Eigen::Ref<const Eigen::VectorXd>& weights, Rng& rng);

ProbabilityVector simulate_initial_probs(std::size_t n_states, std::uint64_t seed);
std::vector<TransitionMatrix> simulate_transition_probs(std::size_t n_states,
                                                        std::size_t n_clusters,
                                                        double diag_boost,
                                                        std::uint64_t seed);
std::vector<EmissionMatrix> simulate_emission_probs(const std::vector<std::size_t>& n_states,
                                                    std::size_t n_symbols,
                                                    std::uint64_t seed);
std::vector<EmissionMatrix> simulate_emission_probs(std::size_t n_states,
                                                    std::size_t n_symbols,
                                                    std::size_t n_clusters,
                                                    std::uint64_t seed);

// Fresh uniform-weight rows over the nonzero entries of every probability
// row; structural zeros stay zero. Mixture coefficients are reset to zero.
HiddenMarkovModel randomize(const HiddenMarkovModel& h, Rng& rng);
MixtureModel randomize(const MixtureModel& m, Rng& rng);

struct RestartControl {
  std::size_t times = 0;
  std::size_t n_optimum = 25;
  std::uint64_t seed = 0;
  // Absolute log-likelihood distance at which two rounds count as reaching
  // the same optimum.
  double same_optimum_tolerance = 1e-4;
  unsigned threads = 1;
  EMControl em;

  void validate() const;
};

struct RoundOutcome {
  std::size_t round = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  double log_likelihood = 0;  // -inf when failed
  std::size_t iterations = 0;
  double change = 0;
  std::string error_kind;
  std::string error;
};

struct FitReport {
  std::string method;  // "em" or "direct"
  double log_likelihood = 0;
  std::size_t best_round = 0;
  // Per-round final log-likelihoods, descending, failed rounds as -inf.
  std::vector<double> best_opt_restart;
  std::size_t n_optimum = 25;
  std::size_t same_optimum_count = 0;
  double same_optimum_tolerance = 1e-4;
  std::vector<RoundOutcome> rounds;
  std::uint64_t master_seed = 0;
  // EM diagnostics of the best round.
  EMResult em;
  double tolerance = 0;
  std::size_t max_iterations = 0;
  // Direct optimization only.
  std::size_t evaluations = 0;
  std::string termination;
  bool wall_clock_budget = false;
  bool wall_clock_budget_hit = false;
};

struct HmmRestartFit {
  HiddenMarkovModel model;
  FitReport report;
};

struct MixtureRestartFit {
  MixtureModel model;
  FitReport report;
};

// Round 0 starts from `start`; rounds 1..times from randomized copies.
HmmRestartFit fit_with_restarts(const HiddenMarkovModel& start, const SequenceSet& s,
                                const RestartControl& control);
MixtureRestartFit fit_with_restarts(const MixtureModel& start, const CovariateFrame& cov,
                                    const SequenceSet& s, const RestartControl& control);

// Unconstrained coordinates of a model: each probability row becomes the
// logits of its nonzero entries relative to the first nonzero entry, and the
// free mixture coefficients follow. Structural zeros have no coordinate.
class SoftmaxMap {
 public:
  explicit SoftmaxMap(const HiddenMarkovModel& pattern);
  explicit SoftmaxMap(const MixtureModel& pattern);

  std::size_t size() const { return size_; }

  Eigen::VectorXd to_parameters(const HiddenMarkovModel& h) const;
  Eigen::VectorXd to_parameters(const MixtureModel& m) const;
  HiddenMarkovModel to_hmm(const Eigen::VectorXd& theta) const;
  MixtureModel to_mixture(const Eigen::VectorXd& theta) const;

  // Gradient of the log-likelihood at `clusters` from their expected counts
  // and, for mixtures, the coefficient score (cluster-major, D per cluster).
  Eigen::VectorXd gradient(const std::vector<HiddenMarkovModel>& clusters,
                           const std::vector<ExpectedCounts>& counts,
                           const Eigen::VectorXd& coefficient_score) const;

 private:
  struct Row {
    std::size_t cluster;
    int part;  // 0 initial, 1 transitions, 2 emissions
    Eigen::Index row;
    std::vector<Eigen::Index> columns;
    std::size_t offset;
  };

  void add_model(const HiddenMarkovModel& h, std::size_t cluster);
  static double& entry(HiddenMarkovModel& h, int part, Eigen::Index row, Eigen::Index col);
  static double entry(const HiddenMarkovModel& h, int part, Eigen::Index row, Eigen::Index col);
  static double count(const ExpectedCounts& c, int part, Eigen::Index row, Eigen::Index col);
  void write_rows(const Eigen::VectorXd& theta, std::vector<HiddenMarkovModel>& models) const;

  std::vector<Row> rows_;
  std::vector<HiddenMarkovModel> templates_;
  std::optional<MixtureModel> mixture_;
  std::size_t coefficient_offset_ = 0;
  std::size_t size_ = 0;
};

struct GlobalControl {
  std::optional<double> maxtime;  // seconds
  std::size_t maxeval = 100000;
  std::size_t multistart = 10;
  std::size_t n_optimum = 25;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

// Multistart quasi-Newton maximization of the log-likelihood followed by a
// polish from the best point. Start 0 is `start`; the rest are randomized.
HmmRestartFit direct_ml_fit(const HiddenMarkovModel& start, const SequenceSet& s,
                            const GlobalControl& control);
MixtureRestartFit direct_ml_fit(const MixtureModel& start, const CovariateFrame& cov,
                                const SequenceSet& s, const GlobalControl& control);

// Sequences of fixed length drawn from the model.
SequenceSet simulate_sequences(const HiddenMarkovModel& h, std::size_t n_sequences,
                               std::size_t length, std::uint64_t seed);

struct MixtureSimulation {
  SequenceSet sequences;
  std::vector<std::size_t> clusters;  // generating cluster of each subject
};

// `design` supplies one row of the model matrix per subject.
MixtureSimulation simulate_sequences(const MixtureModel& m, const Eigen::MatrixXd& design,
                                     std::size_t length, std::uint64_t seed);

}  // namespace seqmarkov

#endif  // SEQMARKOV_ESTIMATION_HPP

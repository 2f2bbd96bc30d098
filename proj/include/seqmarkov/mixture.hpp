#ifndef SEQMARKOV_MIXTURE_HPP
#define SEQMARKOV_MIXTURE_HPP

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqmarkov/hmm.hpp"
#include "seqmarkov/seqdata.hpp"

namespace seqmarkov {

// How covariates become columns of the design matrix. With the intercept
// on, every factor contributes levels-minus-reference indicator columns.
// With it off, the first factor contributes one column per level and any
// further factors drop their reference level.
struct DesignSpec {
  bool intercept = true;
  // Covariate names with their ordered levels, as used at fit time.
  std::vector<std::pair<std::string, std::vector<std::string>>> factors;
  std::vector<std::string> columns;

  std::size_t n_columns() const { return columns.size(); }
  bool has_covariates() const { return !factors.empty(); }
};

DesignSpec make_design(const CovariateFrame& cov,
                       const std::vector<std::string>& covariates, bool intercept);
DesignSpec intercept_only_design();

// N x D model matrix. `cov` may be empty when the design has no covariates,
// in which case `n_rows` sets the number of rows.
Eigen::MatrixXd design_matrix(const DesignSpec& design, const CovariateFrame& cov,
                              std::size_t n_rows);

enum class MixtureKind { mmm, mhmm };

// K cluster submodels with covariate-dependent membership. For mixture
// Markov models each cluster is stored as an identity-emission HMM.
// coefficients is D x K with the first (reference) column fixed at zero.
struct MixtureModel {
  MixtureKind kind = MixtureKind::mhmm;
  std::vector<std::string> cluster_labels;
  std::vector<HiddenMarkovModel> clusters;
  DesignSpec design;
  Eigen::MatrixXd coefficients;

  std::size_t n_clusters() const { return clusters.size(); }
  const Alphabet& alphabet() const { return clusters.front().alphabet; }
  void validate() const;
};

std::vector<std::string> default_cluster_labels(std::size_t k);

// Mixture with zero coefficients (uniform priors) over the given clusters.
MixtureModel make_mixture(MixtureKind kind, std::vector<HiddenMarkovModel> clusters,
                          DesignSpec design);

// Row-wise softmax of X * coefficients.
Eigen::MatrixXd cluster_priors(const Eigen::MatrixXd& coefficients,
                               const Eigen::MatrixXd& design);
Eigen::MatrixXd cluster_priors(const MixtureModel& m, const CovariateFrame& cov,
                               std::size_t n_subjects);

// One subject's view of the mixture as a single HMM over sum(S_k) states:
// block-diagonal transitions, stacked emissions, and initial vector
// prior_k * pi^k.
HiddenMarkovModel joint_block_model(const MixtureModel& m, const Eigen::VectorXd& prior);

struct MembershipResult {
  Eigen::MatrixXd priors;      // N x K
  Eigen::MatrixXd posteriors;  // N x K
  Eigen::MatrixXd log_cluster_likelihoods;  // N x K, log L_k(sequence i)
  std::vector<double> subject_log_likelihoods;
  double log_likelihood = 0;
  // Subjects whose sequence is impossible under every cluster.
  std::vector<std::size_t> impossible;
};

// Shared E-step: memberships and, when `with_counts` is set, the
// posterior-weighted expected counts of every cluster.
struct MixtureEStep {
  MembershipResult membership;
  std::vector<ExpectedCounts> counts;
};

MixtureEStep mixture_e_step(const MixtureModel& m, const Eigen::MatrixXd& design,
                            const SequenceSet& s, bool with_counts,
                            unsigned threads = 1);

MembershipResult posterior_memberships(const MixtureModel& m, const CovariateFrame& cov,
                                       const SequenceSet& s, unsigned threads = 1);

// Weighted multinomial-logistic fit of the coefficient matrix with `weights`
// (N x K soft labels). Runs safeguarded Newton-Raphson from `start` and
// throws SingularHessianError when the information matrix is singular or its
// condition number exceeds 1e12.
Eigen::MatrixXd fit_coefficients(const Eigen::MatrixXd& design, const Eigen::MatrixXd& weights,
                                 const Eigen::MatrixXd& start,
                                 std::size_t max_newton_iterations = 25);

// Negative Hessian of the multinomial log-likelihood with respect to the
// free coefficients, ordered cluster-major: (cluster 2, all columns),
// (cluster 3, all columns), ...
Eigen::MatrixXd coefficient_information(const Eigen::MatrixXd& design,
                                        const Eigen::MatrixXd& coefficients,
                                        const std::vector<bool>& include_row = {});

struct MixtureStepResult {
  MixtureModel model;
  double log_likelihood;  // of the input model
};

MixtureStepResult em_step_mixture(const MixtureModel& m, const CovariateFrame& cov,
                                  const SequenceSet& s, unsigned threads = 1);

struct MixtureFit {
  MixtureModel model;
  EMResult result;
};

MixtureFit em_fit_mixture(const MixtureModel& m, const CovariateFrame& cov,
                          const SequenceSet& s, const EMControl& control = {});

double mixture_log_likelihood(const MixtureModel& m, const CovariateFrame& cov,
                              const SequenceSet& s, unsigned threads = 1);

struct MixtureSummary {
  std::vector<std::string> cluster_labels;
  std::vector<std::string> design_columns;
  Eigen::VectorXd prior_means;
  std::vector<std::size_t> most_probable;  // per subject
  Eigen::VectorXi cluster_counts;
  Eigen::VectorXd cluster_proportions;
  // Row k: mean posterior over subjects whose most probable cluster is k.
  // Rows of empty clusters are NaN and flagged absent.
  Eigen::MatrixXd classification;
  std::vector<bool> classification_present;
  Eigen::MatrixXd priors;
  Eigen::MatrixXd posteriors;
  Eigen::MatrixXd coefficients;
  // Same shape as coefficients; NaN when the information matrix is singular.
  Eigen::MatrixXd standard_errors;
  double log_likelihood = 0;
  double bic = 0;
  std::size_t free_parameters = 0;
  std::size_t n_observations = 0;
};

MixtureSummary summarize(const MixtureModel& m, const CovariateFrame& cov,
                         const SequenceSet& s, unsigned threads = 1);

}  // namespace seqmarkov

#endif  // SEQMARKOV_MIXTURE_HPP

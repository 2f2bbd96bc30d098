#include "seqmarkov/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Eigenvalues>

#include "seqmarkov/error.hpp"
#include "seqmarkov/logmath.hpp"
#include "seqmarkov/modelselect.hpp"
#include "seqmarkov/parallel.hpp"

namespace seqmarkov {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr int kMaxHalvings = 10;

}  // namespace

DesignSpec make_design(const CovariateFrame& cov,
                       const std::vector<std::string>& covariates, bool intercept) {
  DesignSpec d;
  d.intercept = intercept;
  if (intercept) d.columns.push_back("(Intercept)");
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    const auto& f = cov.factor(covariates[j]);
    d.factors.emplace_back(f.name, f.levels);
    const std::size_t skip = (!intercept && j == 0) ? 0 : 1;
    for (std::size_t l = skip; l < f.levels.size(); ++l)
      d.columns.push_back(f.name + f.levels[l]);
  }
  if (d.columns.empty())
    throw InputError("design has no columns: enable the intercept or add covariates");
  std::set<std::string> unique(d.columns.begin(), d.columns.end());
  if (unique.size() != d.columns.size())
    throw InputError("design column labels are not unique");
  return d;
}

DesignSpec intercept_only_design() {
  DesignSpec d;
  d.intercept = true;
  d.columns = {"(Intercept)"};
  return d;
}

Eigen::MatrixXd design_matrix(const DesignSpec& design, const CovariateFrame& cov,
                              std::size_t n_rows) {
  if (design.has_covariates()) n_rows = cov.n_rows();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows),
                                            static_cast<Eigen::Index>(design.n_columns()));
  Eigen::Index col = 0;
  if (design.intercept) x.col(col++).setOnes();
  for (std::size_t j = 0; j < design.factors.size(); ++j) {
    const auto& [name, levels] = design.factors[j];
    const auto& f = cov.factor(name);
    const std::size_t skip = (!design.intercept && j == 0) ? 0 : 1;
    for (std::size_t i = 0; i < n_rows; ++i) {
      const auto& value = f.levels[static_cast<std::size_t>(f.codes[i])];
      const auto it = std::find(levels.begin(), levels.end(), value);
      if (it == levels.end())
        throw InputError("unseen level '" + value + "' of covariate '" + name + "'");
      const auto level = static_cast<std::size_t>(it - levels.begin());
      if (level >= skip) x(static_cast<Eigen::Index>(i), col + static_cast<Eigen::Index>(level - skip)) = 1;
    }
    col += static_cast<Eigen::Index>(levels.size() - skip);
  }
  return x;
}

void MixtureModel::validate() const {
  if (clusters.empty()) throw DimensionError("mixture needs at least one cluster");
  if (cluster_labels.size() != clusters.size())
    throw DimensionError("cluster label count must equal the number of clusters");
  for (const auto& c : clusters) {
    c.validate();
    if (!(c.alphabet == clusters.front().alphabet))
      throw DimensionError("all clusters must share one alphabet");
    if (kind == MixtureKind::mmm && !has_identity_emissions(c))
      throw InputError("mixture Markov clusters must have identity emissions");
  }
  const auto k = static_cast<Eigen::Index>(clusters.size());
  if (coefficients.rows() != static_cast<Eigen::Index>(design.n_columns()) ||
      coefficients.cols() != k)
    throw DimensionError("coefficient matrix must be D x K");
  if (!coefficients.allFinite()) throw InputError("coefficients must be finite");
  if ((coefficients.col(0).array() != 0).any())
    throw InputError("reference cluster coefficients must be zero");
}

std::vector<std::string> default_cluster_labels(std::size_t k) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < k; ++i) labels.push_back("Cluster " + std::to_string(i + 1));
  return labels;
}

MixtureModel make_mixture(MixtureKind kind, std::vector<HiddenMarkovModel> clusters,
                          DesignSpec design) {
  MixtureModel m;
  m.kind = kind;
  m.cluster_labels = default_cluster_labels(clusters.size());
  m.coefficients = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(design.n_columns()),
                                         static_cast<Eigen::Index>(clusters.size()));
  m.clusters = std::move(clusters);
  m.design = std::move(design);
  return m;
}

Eigen::MatrixXd cluster_priors(const Eigen::MatrixXd& coefficients,
                               const Eigen::MatrixXd& design) {
  if (design.cols() != coefficients.rows())
    throw DimensionError("design columns do not match coefficient rows");
  return softmax_rows(design * coefficients);
}

Eigen::MatrixXd cluster_priors(const MixtureModel& m, const CovariateFrame& cov,
                               std::size_t n_subjects) {
  return cluster_priors(m.coefficients, design_matrix(m.design, cov, n_subjects));
}

HiddenMarkovModel joint_block_model(const MixtureModel& m, const Eigen::VectorXd& prior) {
  if (prior.size() != static_cast<Eigen::Index>(m.n_clusters()))
    throw DimensionError("prior length must equal the number of clusters");
  Eigen::Index total = 0;
  for (const auto& c : m.clusters) total += static_cast<Eigen::Index>(c.n_states());
  const auto n_symbols = static_cast<Eigen::Index>(m.alphabet().size());

  HiddenMarkovModel joint;
  joint.alphabet = m.alphabet();
  joint.initial = Eigen::VectorXd::Zero(total);
  joint.transitions = Eigen::MatrixXd::Zero(total, total);
  joint.emissions = Eigen::MatrixXd::Zero(total, n_symbols);
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < m.n_clusters(); ++k) {
    const auto& c = m.clusters[k];
    const auto s = static_cast<Eigen::Index>(c.n_states());
    joint.initial.segment(offset, s) = prior(static_cast<Eigen::Index>(k)) * c.initial;
    joint.transitions.block(offset, offset, s, s) = c.transitions;
    joint.emissions.middleRows(offset, s) = c.emissions;
    for (const auto& label : c.state_labels)
      joint.state_labels.push_back(m.cluster_labels[k] + ": " + label);
    offset += s;
  }
  return joint;
}

MixtureEStep mixture_e_step(const MixtureModel& m, const Eigen::MatrixXd& design,
                            const SequenceSet& s, bool with_counts, unsigned threads) {
  if (!(m.alphabet() == s.alphabet()))
    throw DimensionError("model and data alphabets differ");
  const std::size_t n = s.n_sequences();
  const std::size_t k = m.n_clusters();
  if (static_cast<std::size_t>(design.rows()) != n)
    throw DimensionError("design rows do not match the number of sequences");

  std::vector<LogParameters> lps;
  for (const auto& c : m.clusters) lps.emplace_back(c);

  MixtureEStep out;
  auto& mem = out.membership;
  mem.priors = cluster_priors(m.coefficients, design);
  mem.posteriors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  mem.log_cluster_likelihoods.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  mem.subject_log_likelihoods.assign(n, 0.0);

  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<std::vector<ExpectedCounts>> partial(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    auto& local = partial[b];
    if (with_counts)
      for (const auto& c : m.clusters) local.emplace_back(c.n_states(), c.n_symbols());
    std::vector<ForwardResult> fwd(k);
    const std::size_t end = std::min(n, (b + 1) * kReductionBlock);
    for (std::size_t i = b * kReductionBlock; i < end; ++i) {
      const auto row = s.observed_row(i);
      const auto ii = static_cast<Eigen::Index>(i);
      Eigen::VectorXd joint(static_cast<Eigen::Index>(k));
      for (std::size_t c = 0; c < k; ++c) {
        const auto cc = static_cast<Eigen::Index>(c);
        fwd[c] = log_forward(lps[c], row);
        mem.log_cluster_likelihoods(ii, cc) = fwd[c].log_likelihood;
        joint(cc) = std::log(mem.priors(ii, cc)) + fwd[c].log_likelihood;
      }
      const double total = log_sum_exp(joint);
      mem.subject_log_likelihoods[i] = total;
      if (!std::isfinite(total)) {
        mem.posteriors.row(ii).setZero();
        continue;
      }
      mem.posteriors.row(ii) = (joint.array() - total).exp().matrix().transpose();
      if (with_counts)
        for (std::size_t c = 0; c < k; ++c)
          accumulate_counts(lps[c], row, fwd[c], mem.posteriors(ii, static_cast<Eigen::Index>(c)),
                            local[c]);
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    mem.log_likelihood += mem.subject_log_likelihoods[i];
    if (!std::isfinite(mem.subject_log_likelihoods[i])) mem.impossible.push_back(i);
  }
  if (with_counts) {
    for (const auto& c : m.clusters) out.counts.emplace_back(c.n_states(), c.n_symbols());
    for (const auto& block : partial)
      for (std::size_t c = 0; c < k; ++c) out.counts[c] += block[c];
  }
  return out;
}

MembershipResult posterior_memberships(const MixtureModel& m, const CovariateFrame& cov,
                                       const SequenceSet& s, unsigned threads) {
  if (m.design.has_covariates()) cov.check_aligned(s);
  return mixture_e_step(m, design_matrix(m.design, cov, s.n_sequences()), s, false, threads)
      .membership;
}

double mixture_log_likelihood(const MixtureModel& m, const CovariateFrame& cov,
                              const SequenceSet& s, unsigned threads) {
  return posterior_memberships(m, cov, s, threads).log_likelihood;
}

Eigen::MatrixXd coefficient_information(const Eigen::MatrixXd& design,
                                        const Eigen::MatrixXd& coefficients,
                                        const std::vector<bool>& include_row) {
  const auto n = design.rows();
  const auto d = design.cols();
  const auto k = coefficients.cols();
  const auto priors = cluster_priors(coefficients, design);
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d * (k - 1), d * (k - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!include_row.empty() && !include_row[static_cast<std::size_t>(i)]) continue;
    const Eigen::MatrixXd xx = design.row(i).transpose() * design.row(i);
    for (Eigen::Index a = 1; a < k; ++a)
      for (Eigen::Index b = 1; b < k; ++b) {
        const double w = priors(i, a) * ((a == b ? 1.0 : 0.0) - priors(i, b));
        if (w != 0) info.block((a - 1) * d, (b - 1) * d, d, d) += w * xx;
      }
  }
  return info;
}

namespace {

double weighted_objective(const Eigen::MatrixXd& design, const Eigen::MatrixXd& weights,
                          const Eigen::MatrixXd& coefficients) {
  const Eigen::MatrixXd logits = design * coefficients;
  double q = 0;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const double lse = log_sum_exp(logits.row(i));
    for (Eigen::Index c = 0; c < weights.cols(); ++c)
      if (weights(i, c) > 0) q += weights(i, c) * (logits(i, c) - lse);
  }
  return q;
}

void check_conditioning(const Eigen::MatrixXd& info) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw SingularHessianError();
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0) || hi / lo > kMaxCondition) throw SingularHessianError();
}

}  // namespace

Eigen::MatrixXd fit_coefficients(const Eigen::MatrixXd& design, const Eigen::MatrixXd& weights,
                                 const Eigen::MatrixXd& start,
                                 std::size_t max_newton_iterations) {
  const auto d = design.cols();
  const auto k = start.cols();
  if (k < 2) return start;
  std::vector<bool> include(static_cast<std::size_t>(design.rows()));
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    include[static_cast<std::size_t>(i)] = weights.row(i).sum() > 0;

  Eigen::MatrixXd coef = start;
  double q = weighted_objective(design, weights, coef);
  for (std::size_t it = 0; it < max_newton_iterations; ++it) {
    const Eigen::MatrixXd priors = cluster_priors(coef, design);
    Eigen::VectorXd grad(d * (k - 1));
    for (Eigen::Index c = 1; c < k; ++c) {
      Eigen::VectorXd resid = weights.col(c) - priors.col(c);
      for (Eigen::Index i = 0; i < design.rows(); ++i)
        if (!include[static_cast<std::size_t>(i)]) resid(i) = 0;
      grad.segment((c - 1) * d, d) = design.transpose() * resid;
    }
    const Eigen::MatrixXd info = coefficient_information(design, coef, include);
    check_conditioning(info);
    const Eigen::VectorXd delta = info.ldlt().solve(grad);

    double step = 1.0;
    bool accepted = false;
    Eigen::MatrixXd candidate = coef;
    double q_new = q;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      for (Eigen::Index c = 1; c < k; ++c)
        candidate.col(c) = coef.col(c) + step * delta.segment((c - 1) * d, d);
      q_new = weighted_objective(design, weights, candidate);
      if (q_new >= q) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const double gain = q_new - q;
    coef = candidate;
    q = q_new;
    if (gain <= 1e-12 * (1.0 + std::abs(q))) break;
  }
  return coef;
}

MixtureStepResult em_step_mixture(const MixtureModel& m, const CovariateFrame& cov,
                                  const SequenceSet& s, unsigned threads) {
  if (m.design.has_covariates()) cov.check_aligned(s);
  const Eigen::MatrixXd x = design_matrix(m.design, cov, s.n_sequences());
  auto e = mixture_e_step(m, x, s, true, threads);

  MixtureModel next = m;
  for (std::size_t c = 0; c < m.n_clusters(); ++c)
    next.clusters[c] = apply_counts(m.clusters[c], e.counts[c]);
  if (m.n_clusters() > 1) {
    Eigen::MatrixXd weights = e.membership.posteriors;
    for (std::size_t i = 0; i < s.n_sequences(); ++i)
      if (s.length(i) == 0) weights.row(static_cast<Eigen::Index>(i)).setZero();
    next.coefficients = fit_coefficients(x, weights, m.coefficients);
  }
  return {std::move(next), e.membership.log_likelihood};
}

MixtureFit em_fit_mixture(const MixtureModel& m, const CovariateFrame& cov,
                          const SequenceSet& s, const EMControl& control) {
  m.validate();
  auto step = em_step_mixture(m, cov, s, control.threads);
  if (!std::isfinite(step.log_likelihood))
    throw EstimationError("initial log-likelihood is not finite");

  MixtureFit fit{m, {}};
  fit.result.trace.push_back(step.log_likelihood);
  double current = step.log_likelihood;
  while (fit.result.iterations < control.max_iterations) {
    fit.model = std::move(step.model);
    ++fit.result.iterations;
    step = em_step_mixture(fit.model, cov, s, control.threads);
    fit.result.change = relative_change(current, step.log_likelihood);
    current = step.log_likelihood;
    fit.result.trace.push_back(current);
    if (fit.result.change < control.relative_tolerance) break;
  }
  fit.result.log_likelihood = current;
  return fit;
}

MixtureSummary summarize(const MixtureModel& m, const CovariateFrame& cov,
                         const SequenceSet& s, unsigned threads) {
  const auto mem = posterior_memberships(m, cov, s, threads);
  const auto n = static_cast<Eigen::Index>(s.n_sequences());
  const auto k = static_cast<Eigen::Index>(m.n_clusters());

  MixtureSummary out;
  out.cluster_labels = m.cluster_labels;
  out.design_columns = m.design.columns;
  out.priors = mem.priors;
  out.posteriors = mem.posteriors;
  out.prior_means = mem.priors.colwise().mean().transpose();
  out.cluster_counts = Eigen::VectorXi::Zero(k);
  out.classification = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < k; ++c)
      if (mem.posteriors(i, c) > mem.posteriors(i, best)) best = c;
    out.most_probable.push_back(static_cast<std::size_t>(best));
    out.cluster_counts(best) += 1;
    out.classification.row(best) += mem.posteriors.row(i);
  }
  out.cluster_proportions = out.cluster_counts.cast<double>() / static_cast<double>(n);
  for (Eigen::Index c = 0; c < k; ++c) {
    const bool present = out.cluster_counts(c) > 0;
    out.classification_present.push_back(present);
    if (present)
      out.classification.row(c) /= static_cast<double>(out.cluster_counts(c));
    else
      out.classification.row(c).setConstant(std::numeric_limits<double>::quiet_NaN());
  }

  out.coefficients = m.coefficients;
  const auto d = m.coefficients.rows();
  out.standard_errors = Eigen::MatrixXd::Zero(d, k);
  if (k > 1) {
    const Eigen::MatrixXd x = design_matrix(m.design, cov, s.n_sequences());
    std::vector<bool> include(s.n_sequences());
    for (std::size_t i = 0; i < include.size(); ++i) include[i] = s.length(i) > 0;
    const Eigen::MatrixXd info = coefficient_information(x, m.coefficients, include);
    bool singular = false;
    try {
      check_conditioning(info);
    } catch (const SingularHessianError&) {
      singular = true;
    }
    if (singular) {
      out.standard_errors.rightCols(k - 1).setConstant(std::numeric_limits<double>::quiet_NaN());
    } else {
      const Eigen::MatrixXd cov_matrix = info.ldlt().solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
      for (Eigen::Index c = 1; c < k; ++c)
        for (Eigen::Index j = 0; j < d; ++j)
          out.standard_errors(j, c) = std::sqrt(cov_matrix((c - 1) * d + j, (c - 1) * d + j));
    }
  }

  const auto score = make_score(mem.log_likelihood, count_free_parameters(m),
                                count_observations(s));
  out.log_likelihood = score.log_likelihood;
  out.bic = score.bic;
  out.free_parameters = score.free_parameters;
  out.n_observations = score.n_observations;
  return out;
}

}  // namespace seqmarkov

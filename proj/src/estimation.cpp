#include "seqmarkov/estimation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "seqmarkov/error.hpp"
#include "seqmarkov/lbfgs.hpp"
#include "seqmarkov/logmath.hpp"
#include "seqmarkov/parallel.hpp"

namespace seqmarkov {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double positive_uniform(Rng& rng) {
  double u = 0;
  while (u == 0) u = uniform01(rng);
  return u;
}

Eigen::MatrixXd random_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = positive_uniform(rng);
  return out;
}

template <typename Derived>
void randomize_rows(Eigen::MatrixBase<Derived>& m, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(r, c) != 0) m(r, c) = positive_uniform(rng);
  }
  normalize_rows(m);
}

RoundOutcome failed_round(std::size_t round, std::uint64_t seed, const std::string& kind,
                          const std::string& what) {
  RoundOutcome o;
  o.round = round;
  o.seed = seed;
  o.failed = true;
  o.log_likelihood = neg_inf<double>();
  o.error_kind = kind;
  o.error = what;
  return o;
}

// Fills the ledger, best round and agreement count; throws when every round
// failed.
void finish_report(FitReport& report, std::size_t n_optimum) {
  std::vector<double> values;
  bool any = false;
  for (const auto& r : report.rounds) {
    values.push_back(r.log_likelihood);
    if (r.failed) continue;
    if (!any || r.log_likelihood > report.log_likelihood) {
      report.log_likelihood = r.log_likelihood;
      report.best_round = r.round;
    }
    any = true;
  }
  if (!any) {
    std::string message = "all estimation rounds failed";
    for (const auto& r : report.rounds)
      message += "; round " + std::to_string(r.round) + ": " + r.error_kind + ": " + r.error;
    throw EstimationError(message);
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  if (values.size() > n_optimum) values.resize(n_optimum);
  report.best_opt_restart = std::move(values);
  report.n_optimum = n_optimum;
  report.same_optimum_count = 0;
  for (const auto& r : report.rounds)
    if (!r.failed &&
        std::abs(r.log_likelihood - report.log_likelihood) <= report.same_optimum_tolerance)
      ++report.same_optimum_count;
}

template <typename Model, typename Fit, typename Runner>
std::pair<Model, FitReport> run_rounds(const Model& start, const RestartControl& control,
                                       Runner&& run) {
  control.validate();
  const std::size_t n_rounds = control.times + 1;
  EMControl em = control.em;
  em.threads = n_rounds > 1 ? 1 : control.threads;

  std::vector<RoundOutcome> outcomes(n_rounds);
  std::vector<std::optional<Fit>> fits(n_rounds);
  parallel_for(n_rounds, n_rounds > 1 ? control.threads : 1, [&](std::size_t r) {
    const std::uint64_t seed = round_seed(control.seed, r);
    try {
      Model init = start;
      if (r > 0) {
        Rng rng(seed);
        init = randomize(start, rng);
      }
      Fit fit = run(init, em);
      RoundOutcome& o = outcomes[r];
      o.round = r;
      o.seed = seed;
      o.log_likelihood = fit.result.log_likelihood;
      o.iterations = fit.result.iterations;
      o.change = fit.result.change;
      fits[r] = std::move(fit);
    } catch (const Error& e) {
      outcomes[r] = failed_round(r, seed, e.kind(), e.what());
    } catch (const std::exception& e) {
      outcomes[r] = failed_round(r, seed, "estimation_error", e.what());
    }
  });

  FitReport report;
  report.method = "em";
  report.master_seed = control.seed;
  report.same_optimum_tolerance = control.same_optimum_tolerance;
  report.tolerance = control.em.relative_tolerance;
  report.max_iterations = control.em.max_iterations;
  report.rounds = std::move(outcomes);
  finish_report(report, control.n_optimum);
  auto& best = *fits[report.best_round];
  report.em = best.result;
  return {std::move(best.model), std::move(report)};
}

std::string termination_name(bool budget_hit) { return budget_hit ? "budget" : "converged"; }

}  // namespace

std::uint64_t round_seed(std::uint64_t master, std::size_t round) {
  return splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(round));
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t draw_categorical(const Eigen::Ref<const Eigen::VectorXd>& weights, Rng& rng) {
  const double total = weights.sum();
  if (!(total > 0)) throw InputError("cannot draw from an all-zero distribution");
  const double u = uniform01(rng) * total;
  double acc = 0;
  std::size_t last = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0) continue;
    acc += weights(i);
    last = static_cast<std::size_t>(i);
    if (u < acc) return last;
  }
  return last;
}

ProbabilityVector simulate_initial_probs(std::size_t n_states, std::uint64_t seed) {
  if (n_states == 0) throw DimensionError("number of states must be positive");
  Rng rng(seed);
  Eigen::MatrixXd w = random_rows(1, n_states, rng);
  normalize_rows(w);
  return w.row(0).transpose();
}

std::vector<TransitionMatrix> simulate_transition_probs(std::size_t n_states,
                                                        std::size_t n_clusters,
                                                        double diag_boost,
                                                        std::uint64_t seed) {
  if (n_states == 0 || n_clusters == 0)
    throw DimensionError("numbers of states and clusters must be positive");
  if (!(diag_boost >= 0)) throw InputError("diagonal boost must be nonnegative");
  Rng rng(seed);
  std::vector<TransitionMatrix> out;
  for (std::size_t k = 0; k < n_clusters; ++k) {
    Eigen::MatrixXd a = random_rows(n_states, n_states, rng);
    a.diagonal().array() += diag_boost;
    normalize_rows(a);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<EmissionMatrix> simulate_emission_probs(const std::vector<std::size_t>& n_states,
                                                    std::size_t n_symbols,
                                                    std::uint64_t seed) {
  if (n_states.empty() || n_symbols == 0)
    throw DimensionError("numbers of states and symbols must be positive");
  Rng rng(seed);
  std::vector<EmissionMatrix> out;
  for (const auto s : n_states) {
    if (s == 0) throw DimensionError("number of states must be positive");
    Eigen::MatrixXd b = random_rows(s, n_symbols, rng);
    normalize_rows(b);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<EmissionMatrix> simulate_emission_probs(std::size_t n_states,
                                                    std::size_t n_symbols,
                                                    std::size_t n_clusters,
                                                    std::uint64_t seed) {
  return simulate_emission_probs(std::vector<std::size_t>(n_clusters, n_states), n_symbols,
                                 seed);
}

HiddenMarkovModel randomize(const HiddenMarkovModel& h, Rng& rng) {
  HiddenMarkovModel out = h;
  Eigen::MatrixXd init = out.initial.transpose();
  randomize_rows(init, rng);
  out.initial = init.transpose();
  randomize_rows(out.transitions, rng);
  randomize_rows(out.emissions, rng);
  return out;
}

MixtureModel randomize(const MixtureModel& m, Rng& rng) {
  MixtureModel out = m;
  for (auto& c : out.clusters) c = randomize(c, rng);
  out.coefficients.setZero();
  return out;
}

void RestartControl::validate() const {
  if (n_optimum < 1) throw InputError("n_optimum must be at least 1");
  if (!(same_optimum_tolerance >= 0)) throw InputError("optimum tolerance must be nonnegative");
  if (!(em.relative_tolerance >= 0)) throw InputError("tolerance must be nonnegative");
}

HmmRestartFit fit_with_restarts(const HiddenMarkovModel& start, const SequenceSet& s,
                                const RestartControl& control) {
  start.validate();
  auto [model, report] = run_rounds<HiddenMarkovModel, HmmFit>(
      start, control,
      [&](const HiddenMarkovModel& init, const EMControl& em) { return em_fit(init, s, em); });
  return {std::move(model), std::move(report)};
}

MixtureRestartFit fit_with_restarts(const MixtureModel& start, const CovariateFrame& cov,
                                    const SequenceSet& s, const RestartControl& control) {
  start.validate();
  auto [model, report] = run_rounds<MixtureModel, MixtureFit>(
      start, control, [&](const MixtureModel& init, const EMControl& em) {
        return em_fit_mixture(init, cov, s, em);
      });
  return {std::move(model), std::move(report)};
}

SoftmaxMap::SoftmaxMap(const HiddenMarkovModel& pattern) {
  pattern.validate();
  add_model(pattern, 0);
  templates_.push_back(pattern);
  coefficient_offset_ = size_;
}

SoftmaxMap::SoftmaxMap(const MixtureModel& pattern) {
  pattern.validate();
  for (std::size_t k = 0; k < pattern.n_clusters(); ++k) {
    add_model(pattern.clusters[k], k);
    templates_.push_back(pattern.clusters[k]);
  }
  coefficient_offset_ = size_;
  size_ += static_cast<std::size_t>(pattern.coefficients.rows() *
                                    (pattern.coefficients.cols() - 1));
  mixture_ = pattern;
}

void SoftmaxMap::add_model(const HiddenMarkovModel& h, std::size_t cluster) {
  auto add = [&](int part, Eigen::Index row, Eigen::Index n_cols) {
    Row r{cluster, part, row, {}, size_};
    for (Eigen::Index c = 0; c < n_cols; ++c)
      if (entry(h, part, row, c) != 0) r.columns.push_back(c);
    size_ += r.columns.size() - 1;
    rows_.push_back(std::move(r));
  };
  const auto n = static_cast<Eigen::Index>(h.n_states());
  add(0, 0, n);
  for (Eigen::Index i = 0; i < n; ++i) add(1, i, n);
  for (Eigen::Index i = 0; i < n; ++i) add(2, i, static_cast<Eigen::Index>(h.n_symbols()));
}

double& SoftmaxMap::entry(HiddenMarkovModel& h, int part, Eigen::Index row, Eigen::Index col) {
  if (part == 0) return h.initial(col);
  if (part == 1) return h.transitions(row, col);
  return h.emissions(row, col);
}

double SoftmaxMap::entry(const HiddenMarkovModel& h, int part, Eigen::Index row,
                         Eigen::Index col) {
  if (part == 0) return h.initial(col);
  if (part == 1) return h.transitions(row, col);
  return h.emissions(row, col);
}

double SoftmaxMap::count(const ExpectedCounts& c, int part, Eigen::Index row,
                         Eigen::Index col) {
  if (part == 0) return c.initial(col);
  if (part == 1) return c.transitions(row, col);
  return c.emissions(row, col);
}

Eigen::VectorXd SoftmaxMap::to_parameters(const HiddenMarkovModel& h) const {
  if (mixture_) throw InputError("parameter map was built for a mixture");
  Eigen::VectorXd theta(static_cast<Eigen::Index>(size_));
  for (const auto& r : rows_) {
    const double base = std::log(entry(h, r.part, r.row, r.columns.front()));
    for (std::size_t j = 1; j < r.columns.size(); ++j)
      theta(static_cast<Eigen::Index>(r.offset + j - 1)) =
          std::log(entry(h, r.part, r.row, r.columns[j])) - base;
  }
  return theta;
}

Eigen::VectorXd SoftmaxMap::to_parameters(const MixtureModel& m) const {
  if (!mixture_) throw InputError("parameter map was built for a single model");
  Eigen::VectorXd theta(static_cast<Eigen::Index>(size_));
  for (const auto& r : rows_) {
    const auto& h = m.clusters[r.cluster];
    const double base = std::log(entry(h, r.part, r.row, r.columns.front()));
    for (std::size_t j = 1; j < r.columns.size(); ++j)
      theta(static_cast<Eigen::Index>(r.offset + j - 1)) =
          std::log(entry(h, r.part, r.row, r.columns[j])) - base;
  }
  const auto d = m.coefficients.rows();
  for (Eigen::Index k = 1; k < m.coefficients.cols(); ++k)
    theta.segment(static_cast<Eigen::Index>(coefficient_offset_) + (k - 1) * d, d) =
        m.coefficients.col(k);
  return theta;
}

void SoftmaxMap::write_rows(const Eigen::VectorXd& theta,
                            std::vector<HiddenMarkovModel>& models) const {
  for (const auto& r : rows_) {
    Eigen::VectorXd logits(static_cast<Eigen::Index>(r.columns.size()));
    logits(0) = 0;
    for (std::size_t j = 1; j < r.columns.size(); ++j)
      logits(static_cast<Eigen::Index>(j)) = theta(static_cast<Eigen::Index>(r.offset + j - 1));
    const Eigen::VectorXd p = softmax(logits);
    for (std::size_t j = 0; j < r.columns.size(); ++j)
      entry(models[r.cluster], r.part, r.row, r.columns[j]) = p(static_cast<Eigen::Index>(j));
  }
}

HiddenMarkovModel SoftmaxMap::to_hmm(const Eigen::VectorXd& theta) const {
  if (mixture_) throw InputError("parameter map was built for a mixture");
  std::vector<HiddenMarkovModel> models = templates_;
  write_rows(theta, models);
  return std::move(models.front());
}

MixtureModel SoftmaxMap::to_mixture(const Eigen::VectorXd& theta) const {
  if (!mixture_) throw InputError("parameter map was built for a single model");
  MixtureModel m = *mixture_;
  write_rows(theta, m.clusters);
  const auto d = m.coefficients.rows();
  for (Eigen::Index k = 1; k < m.coefficients.cols(); ++k)
    m.coefficients.col(k) =
        theta.segment(static_cast<Eigen::Index>(coefficient_offset_) + (k - 1) * d, d);
  return m;
}

Eigen::VectorXd SoftmaxMap::gradient(const std::vector<HiddenMarkovModel>& clusters,
                                     const std::vector<ExpectedCounts>& counts,
                                     const Eigen::VectorXd& coefficient_score) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size_));
  for (const auto& r : rows_) {
    const auto& h = clusters[r.cluster];
    const auto& c = counts[r.cluster];
    double total = 0;
    for (const auto col : r.columns) total += count(c, r.part, r.row, col);
    for (std::size_t j = 1; j < r.columns.size(); ++j)
      g(static_cast<Eigen::Index>(r.offset + j - 1)) =
          count(c, r.part, r.row, r.columns[j]) -
          total * entry(h, r.part, r.row, r.columns[j]);
  }
  if (coefficient_score.size() > 0)
    g.segment(static_cast<Eigen::Index>(coefficient_offset_), coefficient_score.size()) =
        coefficient_score;
  return g;
}

void GlobalControl::validate() const {
  if (maxtime && !(*maxtime > 0)) throw InputError("maxtime must be positive");
  if (maxeval == 0) throw InputError("maxeval must be positive");
  if (multistart == 0) throw InputError("multistart must be positive");
  if (n_optimum == 0) throw InputError("n_optimum must be at least 1");
}

namespace {

struct DirectRun {
  Eigen::VectorXd best;
  FitReport report;
};

// Shared multistart driver. `starts(j)` returns the j-th starting point.
template <typename StartFn>
DirectRun run_direct(const Objective& objective, StartFn&& starts,
                     const GlobalControl& control) {
  control.validate();
  EvalBudget budget;
  budget.max_evaluations = control.maxeval;
  if (control.maxtime)
    budget.deadline = std::chrono::steady_clock::now() +
                      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(*control.maxtime));

  DirectRun run;
  run.report.method = "direct";
  run.report.master_seed = control.seed;
  bool budget_hit = false;
  std::optional<LbfgsResult> best;
  std::size_t best_iterations = 0;
  for (std::size_t j = 0; j < control.multistart; ++j) {
    if (budget.exhausted()) {
      budget_hit = true;
      break;
    }
    const std::uint64_t seed = round_seed(control.seed, j);
    LbfgsResult local;
    try {
      local = minimize_lbfgs(objective, starts(j, seed), budget);
    } catch (const Error& e) {
      run.report.rounds.push_back(failed_round(j, seed, e.kind(), e.what()));
      continue;
    }
    if (local.status == LbfgsStatus::budget) budget_hit = true;
    if (!std::isfinite(local.value)) {
      run.report.rounds.push_back(
          failed_round(j, seed, "estimation_error", "no finite log-likelihood at start"));
      continue;
    }
    RoundOutcome o;
    o.round = j;
    o.seed = seed;
    o.log_likelihood = -local.value;
    o.iterations = local.iterations;
    run.report.rounds.push_back(o);
    if (!best || local.value < best->value) {
      best = local;
      best_iterations = local.iterations;
    }
  }
  if (!best)
    throw EstimationError("budget exhausted before any finite-likelihood point");

  if (!budget_hit) {
    LbfgsOptions polish;
    polish.gradient_tolerance = 1e-9;
    const auto refined = minimize_lbfgs(objective, best->x, budget, polish);
    if (refined.status == LbfgsStatus::budget) budget_hit = true;
    if (std::isfinite(refined.value) && refined.value <= best->value) {
      best_iterations += refined.iterations;
      best->x = refined.x;
      best->value = refined.value;
    }
  }

  finish_report(run.report, control.n_optimum);
  run.report.log_likelihood = -best->value;
  run.report.em.log_likelihood = -best->value;
  run.report.em.iterations = best_iterations;
  run.report.evaluations = budget.used;
  run.report.termination = termination_name(budget_hit);
  run.report.wall_clock_budget = control.maxtime.has_value();
  run.report.wall_clock_budget_hit = budget.deadline_hit;
  run.best = best->x;
  return run;
}

}  // namespace

HmmRestartFit direct_ml_fit(const HiddenMarkovModel& start, const SequenceSet& s,
                            const GlobalControl& control) {
  if (!(start.alphabet == s.alphabet())) throw DimensionError("model and data alphabets differ");
  const SoftmaxMap map(start);
  const std::size_t n = s.n_sequences();
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;

  const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const HiddenMarkovModel h = map.to_hmm(theta);
    const LogParameters lp(h);
    std::vector<ExpectedCounts> partial(blocks, ExpectedCounts(h.n_states(), h.n_symbols()));
    parallel_for(blocks, control.threads, [&](std::size_t b) {
      const std::size_t end = std::min(n, (b + 1) * kReductionBlock);
      for (std::size_t i = b * kReductionBlock; i < end; ++i)
        partial[b].log_likelihood += accumulate_counts(lp, s.observed_row(i), 1.0, partial[b]);
    });
    std::vector<ExpectedCounts> total(1, ExpectedCounts(h.n_states(), h.n_symbols()));
    for (const auto& p : partial) total[0] += p;
    if (!std::isfinite(total[0].log_likelihood)) return std::numeric_limits<double>::infinity();
    grad = -map.gradient({h}, total, Eigen::VectorXd());
    return -total[0].log_likelihood;
  };

  auto run = run_direct(
      objective,
      [&](std::size_t j, std::uint64_t seed) {
        if (j == 0) return map.to_parameters(start);
        Rng rng(seed);
        return map.to_parameters(randomize(start, rng));
      },
      control);
  return {map.to_hmm(run.best), std::move(run.report)};
}

MixtureRestartFit direct_ml_fit(const MixtureModel& start, const CovariateFrame& cov,
                                const SequenceSet& s, const GlobalControl& control) {
  if (start.design.has_covariates()) cov.check_aligned(s);
  const SoftmaxMap map(start);
  const Eigen::MatrixXd x = design_matrix(start.design, cov, s.n_sequences());
  const auto d = x.cols();
  const auto k = static_cast<Eigen::Index>(start.n_clusters());

  const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const MixtureModel m = map.to_mixture(theta);
    const auto e = mixture_e_step(m, x, s, true, control.threads);
    if (!std::isfinite(e.membership.log_likelihood))
      return std::numeric_limits<double>::infinity();
    Eigen::VectorXd score(d * (k - 1));
    const Eigen::MatrixXd resid = e.membership.posteriors - e.membership.priors;
    for (Eigen::Index c = 1; c < k; ++c)
      score.segment((c - 1) * d, d) = x.transpose() * resid.col(c);
    grad = -map.gradient(m.clusters, e.counts, score);
    return -e.membership.log_likelihood;
  };

  auto run = run_direct(
      objective,
      [&](std::size_t j, std::uint64_t seed) {
        if (j == 0) return map.to_parameters(start);
        Rng rng(seed);
        return map.to_parameters(randomize(start, rng));
      },
      control);
  return {map.to_mixture(run.best), std::move(run.report)};
}

namespace {

void simulate_row(const HiddenMarkovModel& h, Rng& rng, CellGrid& cells, std::size_t i) {
  const auto length = static_cast<std::size_t>(cells.cols());
  std::size_t state = draw_categorical(h.initial, rng);
  for (std::size_t t = 0; t < length; ++t) {
    const auto st = static_cast<Eigen::Index>(state);
    cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
        static_cast<Cell>(draw_categorical(h.emissions.row(st).transpose(), rng));
    if (t + 1 < length) state = draw_categorical(h.transitions.row(st).transpose(), rng);
  }
}

std::vector<std::string> numbered(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i + 1));
  return out;
}

}  // namespace

SequenceSet simulate_sequences(const HiddenMarkovModel& h, std::size_t n_sequences,
                               std::size_t length, std::uint64_t seed) {
  h.validate();
  if (n_sequences == 0 || length == 0)
    throw DimensionError("number and length of sequences must be positive");
  Rng rng(seed);
  CellGrid cells(static_cast<Eigen::Index>(n_sequences), static_cast<Eigen::Index>(length));
  for (std::size_t i = 0; i < n_sequences; ++i) {
    simulate_row(h, rng, cells, i);
  }
  return SequenceSet(h.alphabet, std::move(cells), numbered(n_sequences), {});
}

MixtureSimulation simulate_sequences(const MixtureModel& m, const Eigen::MatrixXd& design,
                                     std::size_t length, std::uint64_t seed) {
  m.validate();
  const auto n = static_cast<std::size_t>(design.rows());
  if (n == 0 || length == 0)
    throw DimensionError("number and length of sequences must be positive");
  const Eigen::MatrixXd priors = cluster_priors(m.coefficients, design);
  Rng rng(seed);
  CellGrid cells(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(length));
  std::vector<std::size_t> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = draw_categorical(priors.row(static_cast<Eigen::Index>(i)).transpose(), rng);
    clusters.push_back(k);
    simulate_row(m.clusters[k], rng, cells, i);
  }
  return {SequenceSet(m.alphabet(), std::move(cells), numbered(n), {}), std::move(clusters)};
}

}  // namespace seqmarkov

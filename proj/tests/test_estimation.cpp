#include <doctest.h>

#include <cmath>

#include "seqmarkov/error.hpp"
#include "seqmarkov/estimation.hpp"
#include "seqmarkov/lbfgs.hpp"
#include "seqmarkov/markov.hpp"
#include "seqmarkov/mixture.hpp"
#include "support.hpp"

using namespace seqmarkov;

namespace {

HiddenMarkovModel two_state_truth() {
  HiddenMarkovModel h;
  h.alphabet = Alphabet({"a", "b", "c"});
  h.state_labels = default_state_labels(2);
  h.initial = Eigen::Vector2d(0.7, 0.3);
  h.transitions.resize(2, 2);
  h.transitions << 0.85, 0.15, 0.2, 0.8;
  h.emissions.resize(2, 3);
  h.emissions << 0.7, 0.25, 0.05, 0.1, 0.3, 0.6;
  return h;
}

double max_abs_diff(const HiddenMarkovModel& a, const HiddenMarkovModel& b) {
  return std::max({(a.initial - b.initial).cwiseAbs().maxCoeff(),
                   (a.transitions - b.transitions).cwiseAbs().maxCoeff(),
                   (a.emissions - b.emissions).cwiseAbs().maxCoeff()});
}

}  // namespace

TEST_CASE("round seeds are fixed functions of master seed and round") {
  CHECK(round_seed(1, 0) == round_seed(1, 0));
  CHECK(round_seed(1, 0) != round_seed(1, 1));
  CHECK(round_seed(1, 0) != round_seed(2, 0));
  Rng a(round_seed(42, 3));
  Rng b(round_seed(42, 3));
  for (int i = 0; i < 10; ++i) CHECK(uniform01(a) == uniform01(b));
}

TEST_CASE("uniform draws stay in [0, 1)") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("random starts keep structural zeros and stochasticity") {
  auto h = two_state_truth();
  h.transitions << 1.0, 0.0, 0.2, 0.8;
  h.emissions(0, 2) = 0;
  h.emissions.row(0) /= h.emissions.row(0).sum();
  Rng rng(9);
  const auto r = randomize(h, rng);
  CHECK(r.transitions(0, 1) == 0.0);
  CHECK(r.emissions(0, 2) == 0.0);
  CHECK(r.transitions.row(1).sum() == doctest::Approx(1.0));
  CHECK(r.emissions.row(1).sum() == doctest::Approx(1.0));
  const auto t = simulate_transition_probs(3, 2, 5.0, 4);
  REQUIRE(t.size() == 2);
  CHECK(t[0].rowwise().sum().isApproxToConstant(1.0));
  CHECK(t[0](0, 0) > 0);
}

TEST_CASE("softmax map round trip") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto h = testing::random_hmm(3, 3, rng, false, trial % 2 == 1);
    const SoftmaxMap map(h);
    const auto back = map.to_hmm(map.to_parameters(h));
    CHECK(max_abs_diff(h, back) <= 1e-12);
  }
  auto m = make_mixture(MixtureKind::mhmm,
                        {testing::random_hmm(2, 3, rng), testing::random_hmm(3, 3, rng)},
                        intercept_only_design());
  m.coefficients(0, 1) = -0.75;
  const SoftmaxMap map(m);
  CHECK(map.size() == (1 + 2 * 1 + 2 * 2) + (2 + 3 * 2 + 3 * 2) + 1);
  const auto back = map.to_mixture(map.to_parameters(m));
  CHECK(std::abs(back.coefficients(0, 1) + 0.75) <= 1e-12);
  CHECK(max_abs_diff(back.clusters[1], m.clusters[1]) <= 1e-12);
}

TEST_CASE("L-BFGS minimizes a quadratic and honours the budget") {
  const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2 * (x - Eigen::Vector2d(1, -2));
    g(1) *= 10;
    return (x(0) - 1) * (x(0) - 1) + 10 * (x(1) + 2) * (x(1) + 2);
  };
  EvalBudget budget;
  const auto r = minimize_lbfgs(f, Eigen::Vector2d::Zero(), budget);
  CHECK(r.status == LbfgsStatus::converged);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(-2.0).epsilon(1e-6));
  EvalBudget tight;
  tight.max_evaluations = 3;
  const auto t = minimize_lbfgs(f, Eigen::Vector2d::Zero(), tight);
  CHECK(t.status == LbfgsStatus::budget);
  CHECK(tight.used <= 3);
}

TEST_CASE("direct maximization and EM reach the same optimum") {
  const auto truth = two_state_truth();
  const auto s = simulate_sequences(truth, 60, 25, 314);
  Rng rng(2);
  const auto start = randomize(truth, rng);

  RestartControl rc;
  rc.times = 5;
  rc.seed = 8;
  rc.em.relative_tolerance = 1e-14;
  rc.em.max_iterations = 5000;
  const auto em = fit_with_restarts(start, s, rc);

  GlobalControl gc;
  gc.seed = 8;
  gc.multistart = 6;
  const auto direct = direct_ml_fit(start, s, gc);
  CHECK(direct.report.termination == "converged");
  CHECK(std::abs(direct.report.log_likelihood - em.report.log_likelihood) <= 1e-6);
  CHECK(std::abs(log_likelihood(direct.model, s) - direct.report.log_likelihood) <= 1e-9);
}

TEST_CASE("an evaluation budget of one stops with budget termination") {
  const auto truth = two_state_truth();
  const auto s = simulate_sequences(truth, 10, 10, 1);
  GlobalControl gc;
  gc.maxeval = 1;
  const auto fit = direct_ml_fit(truth, s, gc);
  CHECK(fit.report.termination == "budget");
  CHECK(fit.report.evaluations == 1);
  CHECK_FALSE(fit.report.wall_clock_budget);
}

TEST_CASE("restart ledger is sorted and reproducible across workers") {
  const auto truth = two_state_truth();
  const auto s = simulate_sequences(truth, 40, 15, 77);
  RestartControl rc;
  rc.times = 6;
  rc.seed = 123;
  rc.n_optimum = 4;
  rc.threads = 1;
  const auto a = fit_with_restarts(truth, s, rc);
  rc.threads = 4;
  const auto b = fit_with_restarts(truth, s, rc);
  REQUIRE(a.report.best_opt_restart.size() == 4);
  for (std::size_t i = 1; i < a.report.best_opt_restart.size(); ++i)
    CHECK(a.report.best_opt_restart[i - 1] >= a.report.best_opt_restart[i]);
  CHECK(a.report.best_opt_restart == b.report.best_opt_restart);
  CHECK(a.model.transitions == b.model.transitions);
  CHECK(a.report.rounds.size() == 7);
  CHECK(a.report.log_likelihood == a.report.best_opt_restart.front());
  CHECK(a.report.same_optimum_count >= 1);
}

TEST_CASE("a failing starting round is ledgered while later rounds succeed") {
  const auto s = testing::table1();
  const auto cov = CovariateFrame({"s1", "s2", "s3", "s4"},
                                  {Factor{"G", {"a", "b"}, {0, 1, 0, 1}}});
  const auto design = make_design(cov, {"G"}, true);
  std::vector<HiddenMarkovModel> clusters;
  for (int k = 0; k < 2; ++k) clusters.push_back(embed_markov_model(estimate_mm(s)));
  auto m = make_mixture(MixtureKind::mmm, clusters, design);
  m.coefficients.col(1).setConstant(-40);
  RestartControl rc;
  rc.times = 3;
  rc.seed = 5;
  const auto fit = fit_with_restarts(m, cov, s, rc);
  bool round0_failed = false;
  for (const auto& r : fit.report.rounds)
    if (r.round == 0) {
      round0_failed = r.failed;
      CHECK(std::isinf(r.log_likelihood));
      CHECK(r.error_kind == "singular_hessian");
    }
  CHECK(round0_failed);
  CHECK(fit.report.best_round != 0);
  CHECK(std::isfinite(fit.report.log_likelihood));
}

TEST_CASE("all rounds failing raises an estimation error") {
  const auto s = testing::table1();
  const auto cov = CovariateFrame({"s1", "s2", "s3", "s4"},
                                  {Factor{"G", {"a", "b", "c"}, {0, 1, 0, 1}}});
  const auto design = make_design(cov, {"G"}, true);
  std::vector<HiddenMarkovModel> clusters;
  for (int k = 0; k < 2; ++k) clusters.push_back(embed_markov_model(estimate_mm(s)));
  const auto m = make_mixture(MixtureKind::mmm, clusters, design);
  RestartControl rc;
  rc.times = 2;
  rc.seed = 1;
  CHECK_THROWS_AS(fit_with_restarts(m, cov, s, rc), EstimationError);
}

TEST_CASE("simulation is a function of the seed") {
  const auto truth = two_state_truth();
  const auto a = simulate_sequences(truth, 5, 8, 10);
  const auto b = simulate_sequences(truth, 5, 8, 10);
  const auto c = simulate_sequences(truth, 5, 8, 11);
  CHECK(a.cells() == b.cells());
  CHECK_FALSE(a.cells() == c.cells());
  CHECK(a.ids().front() == "1");
}

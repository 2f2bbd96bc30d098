#include <doctest.h>

#include <cmath>

#include "seqmarkov/error.hpp"
#include "seqmarkov/markov.hpp"
#include "seqmarkov/mixture.hpp"
#include "support.hpp"

using namespace seqmarkov;

namespace {

CovariateFrame gpa_frame(const std::vector<int>& codes) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < codes.size(); ++i) ids.push_back("s" + std::to_string(i + 1));
  return CovariateFrame(ids, {Factor{"GPA", {"Low", "Middle", "High"}, codes}});
}

// Multinomial log-likelihood sum_i sum_k w_ik log p_ik.
double weighted_loglik(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                       const Eigen::MatrixXd& coef) {
  const Eigen::MatrixXd p = cluster_priors(coef, x);
  return (w.array() * p.array().log()).sum();
}

MixtureModel two_chain_mixture(const DesignSpec& design) {
  Rng rng(5);
  std::vector<HiddenMarkovModel> clusters;
  for (int k = 0; k < 2; ++k) {
    MarkovModel m;
    m.alphabet = Alphabet({"L", "H"});
    m.initial = testing::random_row(2, rng, false, false);
    m.transitions.resize(2, 2);
    for (int r = 0; r < 2; ++r) m.transitions.row(r) = testing::random_row(2, rng, false, false).transpose();
    clusters.push_back(embed_markov_model(m));
  }
  return make_mixture(MixtureKind::mmm, clusters, design);
}

}  // namespace

TEST_CASE("design expansion with and without intercept") {
  const auto cov = gpa_frame({0, 1, 2, 0});
  const auto with = make_design(cov, {"GPA"}, true);
  CHECK(with.columns == std::vector<std::string>{"(Intercept)", "GPAMiddle", "GPAHigh"});
  const auto without = make_design(cov, {"GPA"}, false);
  CHECK(without.columns == std::vector<std::string>{"GPALow", "GPAMiddle", "GPAHigh"});
  const Eigen::MatrixXd x = design_matrix(without, cov, 4);
  CHECK(x.row(2) == Eigen::RowVector3d(0, 0, 1));
  const Eigen::MatrixXd xi = design_matrix(with, cov, 4);
  CHECK(xi.row(1) == Eigen::RowVector3d(1, 1, 0));
  CHECK(xi.row(0) == Eigen::RowVector3d(1, 0, 0));
}

TEST_CASE("priors are the row softmax of the linear predictor") {
  Eigen::MatrixXd coef(2, 3);
  coef << 0, 1, -1, 0, 0.5, 2;
  Eigen::MatrixXd x(1, 2);
  x << 1, 1;
  const Eigen::MatrixXd p = cluster_priors(coef, x);
  const double z = 1 + std::exp(1.5) + std::exp(1.0);
  CHECK(p(0, 0) == doctest::Approx(1 / z).epsilon(1e-14));
  CHECK(p(0, 1) == doctest::Approx(std::exp(1.5) / z).epsilon(1e-14));
}

TEST_CASE("coefficient fit matches per-level weighted proportions") {
  const std::vector<int> codes{0, 0, 0, 1, 1, 1, 2, 2, 2, 2};
  const auto cov = gpa_frame(codes);
  const auto design = make_design(cov, {"GPA"}, false);
  const Eigen::MatrixXd x = design_matrix(design, cov, codes.size());
  Eigen::MatrixXd w(10, 3);
  w << 0.7, 0.2, 0.1, 0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.1, 0.8, 0.1, 0.3, 0.3, 0.4, 0.3, 0.3, 0.4,
      0.2, 0.2, 0.6, 0.1, 0.6, 0.3, 0.5, 0.1, 0.4, 0.4, 0.4, 0.2;
  const Eigen::MatrixXd coef = fit_coefficients(x, w, Eigen::MatrixXd::Zero(3, 3));
  const Eigen::MatrixXd p = cluster_priors(coef, x);
  for (int level = 0; level < 3; ++level) {
    Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
    int n = 0;
    for (int i = 0; i < 10; ++i)
      if (codes[static_cast<std::size_t>(i)] == level) {
        mean += w.row(i);
        ++n;
      }
    mean /= n;
    for (int i = 0; i < 10; ++i)
      if (codes[static_cast<std::size_t>(i)] == level)
        CHECK((p.row(i) - mean).cwiseAbs().maxCoeff() <= 1e-8);
  }
  CHECK(coef.col(0).isZero());
}

TEST_CASE("information matrix equals the numerical negative Hessian") {
  Rng rng(17);
  Eigen::MatrixXd x(12, 2);
  for (int i = 0; i < 12; ++i) x.row(i) << 1, uniform01(rng) * 2 - 1;
  Eigen::MatrixXd coef(2, 3);
  coef << 0, 0.3, -0.2, 0, 0.7, 0.4;
  const Eigen::MatrixXd info = coefficient_information(x, coef);
  REQUIRE(info.rows() == 4);
  // For any soft labels the Hessian of sum w log p does not depend on w.
  Eigen::MatrixXd w = cluster_priors(coef, x);
  const double h = 1e-4;
  auto at = [&](int a, double da, int b, double db) {
    Eigen::MatrixXd c = coef;
    c(a % 2, 1 + a / 2) += da;
    c(b % 2, 1 + b / 2) += db;
    return weighted_loglik(x, w, c);
  };
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double d2 = (at(a, h, b, h) - at(a, h, b, -h) - at(a, -h, b, h) + at(a, -h, b, -h)) /
                        (4 * h * h);
      CHECK(info(a, b) == doctest::Approx(-d2).epsilon(1e-5));
    }
}

TEST_CASE("a design column without subjects makes the Hessian singular") {
  const auto cov = gpa_frame({0, 0, 1, 1, 0, 1});
  const auto design = make_design(cov, {"GPA"}, true);
  const Eigen::MatrixXd x = design_matrix(design, cov, 6);
  Eigen::MatrixXd w(6, 2);
  w << 0.9, 0.1, 0.2, 0.8, 0.6, 0.4, 0.3, 0.7, 0.5, 0.5, 0.8, 0.2;
  try {
    fit_coefficients(x, w, Eigen::MatrixXd::Zero(3, 2));
    FAIL("expected a singular Hessian");
  } catch (const SingularHessianError& e) {
    CHECK(std::string(e.what()) ==
          "Estimation of gamma coefficients failed due to singular Hessian.");
    CHECK(std::string(e.kind()) == "singular_hessian");
  }
}

TEST_CASE("posterior memberships follow Bayes' rule over cluster likelihoods") {
  const auto s = testing::table1();
  auto m = two_chain_mixture(intercept_only_design());
  m.coefficients(0, 1) = 0.4;
  const auto r = posterior_memberships(m, {}, s);
  const double p2 = std::exp(0.4) / (1 + std::exp(0.4));
  for (std::size_t i = 0; i < s.n_sequences(); ++i) {
    const double l1 = std::exp(log_likelihood(m.clusters[0], s.subset(std::vector<std::size_t>{i})));
    const double l2 = std::exp(log_likelihood(m.clusters[1], s.subset(std::vector<std::size_t>{i})));
    const double post2 = p2 * l2 / ((1 - p2) * l1 + p2 * l2);
    CHECK(r.posteriors(static_cast<Eigen::Index>(i), 1) == doctest::Approx(post2).epsilon(1e-12));
    CHECK(r.subject_log_likelihoods[i] ==
          doctest::Approx(std::log((1 - p2) * l1 + p2 * l2)).epsilon(1e-12));
    const auto joint = joint_block_model(m, r.priors.row(static_cast<Eigen::Index>(i)).transpose());
    CHECK(log_forward(joint, s.observed_row(i)).log_likelihood ==
          doctest::Approx(r.subject_log_likelihoods[i]).epsilon(1e-12));
  }
}

TEST_CASE("mixture EM is monotone and summary tables are consistent") {
  const auto s = testing::table1();
  const auto cov = gpa_frame({0, 2, 1, 0});
  const auto m = two_chain_mixture(intercept_only_design());
  EMControl control;
  control.max_iterations = 300;
  const auto fit = em_fit_mixture(m, cov, s, control);
  for (std::size_t i = 1; i < fit.result.trace.size(); ++i)
    CHECK(fit.result.trace[i] - fit.result.trace[i - 1] >= -1e-9);
  const auto summary = summarize(fit.model, cov, s);
  CHECK(summary.cluster_counts.sum() == 4);
  CHECK(summary.cluster_proportions.sum() == doctest::Approx(1.0));
  CHECK(summary.log_likelihood == doctest::Approx(fit.result.log_likelihood).epsilon(1e-12));
  for (Eigen::Index k = 0; k < 2; ++k)
    if (summary.classification_present[static_cast<std::size_t>(k)])
      CHECK(summary.classification.row(k).sum() == doctest::Approx(1.0));
}

TEST_CASE("unseen covariate level is an input error") {
  const auto cov = gpa_frame({0, 1, 2, 0});
  const auto design = make_design(cov, {"GPA"}, true);
  DesignSpec narrow = design;
  narrow.factors.front().second = {"Low", "Middle"};
  CHECK_THROWS_AS(design_matrix(narrow, cov, 4), InputError);
}

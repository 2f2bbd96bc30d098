#include <doctest.h>

#include <cmath>

#include "seqmarkov/error.hpp"
#include "seqmarkov/markov.hpp"
#include "seqmarkov/modelselect.hpp"
#include "support.hpp"

using namespace seqmarkov;

TEST_CASE("BIC formula") {
  const auto score = make_score(-10, 3, 100);
  CHECK(std::abs(score.bic - 33.8155) <= 1e-4);
  CHECK(score.bic == doctest::Approx(20 + 3 * std::log(100.0)).epsilon(1e-15));
  CHECK_THROWS_AS(make_score(-1, 1, 0), EstimationError);
}

TEST_CASE("free parameters skip structural zeros") {
  auto m = estimate_mm(testing::table1());
  CHECK(count_free_parameters(m) == 1 + 2);
  m.transitions << 1, 0, 0.5, 0.5;
  CHECK(count_free_parameters(m) == 1 + 1);
  const auto h = embed_markov_model(m);
  CHECK(count_free_parameters(h) == count_free_parameters(m));
}

TEST_CASE("extra states without likelihood gain raise BIC") {
  const auto s = testing::table1();
  HiddenMarkovModel one;
  one.alphabet = s.alphabet();
  one.state_labels = default_state_labels(1);
  one.initial = Eigen::VectorXd::Ones(1);
  one.transitions = Eigen::MatrixXd::Ones(1, 1);
  one.emissions = Eigen::RowVector2d(0.45, 0.55);

  HiddenMarkovModel two;
  two.alphabet = s.alphabet();
  two.state_labels = default_state_labels(2);
  two.initial = Eigen::Vector2d(0.3, 0.7);
  two.transitions = Eigen::Matrix2d::Constant(0.5);
  two.emissions = Eigen::Matrix2d::Zero();
  two.emissions.row(0) = one.emissions.row(0);
  two.emissions.row(1) = one.emissions.row(0);

  const auto b1 = bic(one, s);
  const auto b2 = bic(two, s);
  CHECK(b1.log_likelihood == doctest::Approx(b2.log_likelihood).epsilon(1e-13));
  CHECK(b1.free_parameters == 1);
  CHECK(b2.free_parameters == 5);
  CHECK(b2.bic > b1.bic);
  CHECK(b1.n_observations == 40);
}

TEST_CASE("observations exclude unknown cells") {
  const auto s = testing::make_set(testing::symbols(2), {{0, kUnknown, 1}, {1, 1}});
  CHECK(bic(estimate_mm(s), s).n_observations == 4);
}

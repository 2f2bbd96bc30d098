#include <doctest.h>

#include <cmath>
#include <map>

#include "seqmarkov/error.hpp"
#include "seqmarkov/markov.hpp"
#include "support.hpp"

using namespace seqmarkov;

namespace {

// Integer pair counts read straight off the strings.
std::map<std::pair<char, char>, int> count_pairs(const std::vector<std::string>& rows) {
  std::map<std::pair<char, char>, int> n;
  for (const auto& r : rows)
    for (std::size_t t = 1; t < r.size(); ++t) ++n[{r[t - 1], r[t]}];
  return n;
}

}  // namespace

TEST_CASE("toy data transition and initial probabilities equal the counted fractions") {
  const std::vector<std::string> rows{"LLLHLHLHHH", "LHHLHLHLLH", "HHLHLLHLHH", "HHLLLHLLLH"};
  auto n = count_pairs(rows);
  CHECK(n[{'L', 'L'}] == 8);
  CHECK(n[{'L', 'H'}] == 12);
  CHECK(n[{'H', 'L'}] == 10);
  CHECK(n[{'H', 'H'}] == 6);

  const auto m = estimate_mm(testing::table1());
  const double ll = 8.0 / 20, lh = 12.0 / 20, hl = 10.0 / 16, hh = 6.0 / 16;
  CHECK(std::abs(m.transitions(0, 0) - ll) <= 1e-12);
  CHECK(std::abs(m.transitions(0, 1) - lh) <= 1e-12);
  CHECK(std::abs(m.transitions(1, 0) - hl) <= 1e-12);
  CHECK(std::abs(m.transitions(1, 1) - hh) <= 1e-12);
  CHECK(std::abs(m.initial(0) - 0.5) <= 1e-12);
  CHECK(m.fallback_rows.empty());
}

TEST_CASE("counts skip pairs that touch unknown cells") {
  const auto s = testing::make_set(testing::symbols(2), {{0, kUnknown, 1, 1}, {kUnknown, 0, 0}});
  const auto c = count_transitions(s);
  CHECK(c.pairs(1, 1) == 1);
  CHECK(c.pairs(0, 0) == 1);
  CHECK(c.pairs.sum() == 2);
  CHECK(c.first(0) == 1);
  CHECK(c.first.sum() == 1);
}

TEST_CASE("rows without observed transitions fall back to uniform") {
  const auto s = testing::make_set(testing::symbols(3), {{0, 1, 0}});
  const auto m = estimate_mm(s);
  CHECK(m.fallback_rows == std::vector<std::size_t>{2});
  CHECK(m.transitions(2, 0) == doctest::Approx(1.0 / 3));
  CHECK(m.transitions.row(0).sum() == doctest::Approx(1.0));
}

TEST_CASE("log-likelihood of the fitted chain equals the count formula") {
  const auto s = testing::table1();
  const auto m = estimate_mm(s);
  const double expected = 4 * std::log(0.5) + 8 * std::log(0.4) + 12 * std::log(0.6) +
                          10 * std::log(0.625) + 6 * std::log(0.375);
  CHECK(mm_log_likelihood(m, s) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("model validation catches non-stochastic rows") {
  auto m = estimate_mm(testing::table1());
  m.transitions(0, 0) = 0.9;
  CHECK_THROWS_AS(m.validate(), InputError);
}

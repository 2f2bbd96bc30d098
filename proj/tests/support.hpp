#ifndef SEQMARKOV_TESTS_SUPPORT_HPP
#define SEQMARKOV_TESTS_SUPPORT_HPP

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "seqmarkov/estimation.hpp"
#include "seqmarkov/hmm.hpp"
#include "seqmarkov/logmath.hpp"
#include "seqmarkov/seqdata.hpp"

namespace testing {

using namespace seqmarkov;

inline Alphabet symbols(std::size_t m) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < m; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  return Alphabet(names);
}

inline SequenceSet make_set(const Alphabet& a, const std::vector<std::vector<Cell>>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.size());
  CellGrid cells = CellGrid::Constant(static_cast<Eigen::Index>(rows.size()),
                                      static_cast<Eigen::Index>(width), kPadding);
  std::vector<std::string> ids;
  std::vector<std::string> times;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back("s" + std::to_string(i + 1));
    for (std::size_t t = 0; t < rows[i].size(); ++t)
      cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[i][t];
  }
  for (std::size_t t = 0; t < width; ++t) times.push_back("t" + std::to_string(t + 1));
  return SequenceSet(a, cells, ids, times);
}

// The four sequences of the two-symbol toy example (L = 0, H = 1).
inline SequenceSet table1() {
  const std::vector<std::string> rows{"LLLHLHLHHH", "LHHLHLHLLH", "HHLHLLHLHH", "HHLLLHLLLH"};
  std::vector<std::vector<Cell>> cells;
  for (const auto& r : rows) {
    std::vector<Cell> row;
    for (const char c : r) row.push_back(c == 'L' ? 0 : 1);
    cells.push_back(row);
  }
  return make_set(Alphabet({"L", "H"}), cells);
}

// Random stochastic row. With `grid` the entries are multiples of 1/4 so
// that exact ties between paths occur; `zeros` allows structural zeros.
inline Eigen::VectorXd random_row(std::size_t n, Rng& rng, bool grid, bool zeros) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (;;) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      double x = grid ? std::floor(uniform01(rng) * 4) : uniform01(rng) + 0.05;
      if (zeros && uniform01(rng) < 0.2) x = 0;
      v(i) = x;
    }
    if (v.sum() > 0) return v / v.sum();
  }
}

inline HiddenMarkovModel random_hmm(std::size_t s, std::size_t m, Rng& rng, bool grid = false,
                                    bool zeros = false) {
  HiddenMarkovModel h;
  h.alphabet = symbols(m);
  h.state_labels = default_state_labels(s);
  h.initial = random_row(s, rng, grid, zeros);
  h.transitions.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  h.emissions.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(m));
  for (Eigen::Index r = 0; r < h.transitions.rows(); ++r) {
    h.transitions.row(r) = random_row(s, rng, grid, zeros).transpose();
    h.emissions.row(r) = random_row(m, rng, grid, zeros).transpose();
  }
  return h;
}

// Row of length `len` with symbols, optional Unknown cells, then `pad`
// Padding cells.
inline std::vector<Cell> random_row_cells(std::size_t len, std::size_t m, std::size_t pad,
                                          bool unknown, Rng& rng) {
  std::vector<Cell> row;
  for (std::size_t t = 0; t < len; ++t) {
    if (unknown && uniform01(rng) < 0.25)
      row.push_back(kUnknown);
    else
      row.push_back(static_cast<Cell>(std::floor(uniform01(rng) * static_cast<double>(m))));
  }
  row.insert(row.end(), pad, kPadding);
  return row;
}

inline std::size_t random_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(std::floor(uniform01(rng) * static_cast<double>(hi - lo + 1)));
}

// Brute-force reference: every hidden path of the observed prefix of `row`.
struct Enumeration {
  std::vector<std::vector<std::size_t>> paths;
  std::vector<double> log_probabilities;  // joint log P(path, observations)
  double log_likelihood = 0;
  Eigen::MatrixXd posteriors;  // length x S
  std::vector<std::size_t> best_path;
  double best_log_probability = 0;
};

inline Enumeration enumerate(const HiddenMarkovModel& h, const std::vector<Cell>& cells) {
  std::vector<Cell> row;
  for (const Cell c : cells) {
    if (c == kPadding) break;
    row.push_back(c);
  }
  const std::size_t s = h.n_states();
  const std::size_t len = row.size();
  Enumeration e;
  e.posteriors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(s));
  std::vector<std::size_t> path(len, 0);
  std::size_t total = 1;
  for (std::size_t t = 0; t < len; ++t) total *= s;
  auto emit = [&](std::size_t state, Cell c) {
    return c == kUnknown ? 0.0 : std::log(h.emissions(static_cast<Eigen::Index>(state), c));
  };
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (std::size_t t = 0; t < len; ++t) {
      path[t] = rest % s;
      rest /= s;
    }
    double lp = 0;
    if (len > 0) {
      lp = std::log(h.initial(static_cast<Eigen::Index>(path[0]))) + emit(path[0], row[0]);
      for (std::size_t t = 1; t < len; ++t)
        lp += std::log(h.transitions(static_cast<Eigen::Index>(path[t - 1]),
                                     static_cast<Eigen::Index>(path[t]))) +
              emit(path[t], row[t]);
    }
    e.paths.push_back(path);
    e.log_probabilities.push_back(lp);
  }
  const Eigen::Map<const Eigen::VectorXd> lps(e.log_probabilities.data(),
                                              static_cast<Eigen::Index>(total));
  e.log_likelihood = len == 0 ? 0.0 : log_sum_exp(lps);
  if (std::isfinite(e.log_likelihood))
    for (std::size_t k = 0; k < total; ++k) {
      const double w = std::exp(e.log_probabilities[k] - e.log_likelihood);
      for (std::size_t t = 0; t < len; ++t)
        e.posteriors(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(e.paths[k][t])) += w;
    }

  // Among the optimal paths, the one that is smallest when compared from the
  // last time point backwards.
  double best = -std::numeric_limits<double>::infinity();
  for (const double lp : e.log_probabilities) best = std::max(best, lp);
  e.best_log_probability = best;
  const double slack = std::isfinite(best) ? 1e-9 * std::max(1.0, std::abs(best)) : 0;
  bool have = false;
  for (std::size_t k = 0; k < total; ++k) {
    const double lp = e.log_probabilities[k];
    const bool optimal = std::isfinite(best) ? lp >= best - slack : true;
    if (!optimal) continue;
    if (!have ||
        std::lexicographical_compare(e.paths[k].rbegin(), e.paths[k].rend(),
                                     e.best_path.rbegin(), e.best_path.rend())) {
      e.best_path = e.paths[k];
      have = true;
    }
  }
  return e;
}

}  // namespace testing

#endif  // SEQMARKOV_TESTS_SUPPORT_HPP

#include "seqmarkov/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace seqmarkov {

bool EvalBudget::exhausted() {
  if (max_evaluations != 0 && used >= max_evaluations) return true;
  if (deadline && std::chrono::steady_clock::now() >= *deadline) {
    deadline_hit = true;
    return true;
  }
  return false;
}

namespace {

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd two_loop(const std::deque<Pair>& history, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = -g;
  std::vector<double> alpha(history.size());
  for (std::size_t i = history.size(); i-- > 0;) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  if (!history.empty()) {
    const auto& last = history.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, EvalBudget& budget,
                           const LbfgsOptions& options) {
  LbfgsResult r;
  r.x = std::move(x0);
  r.value = std::numeric_limits<double>::infinity();
  if (budget.exhausted()) {
    r.status = LbfgsStatus::budget;
    return r;
  }
  Eigen::VectorXd g(r.x.size());
  r.value = f(r.x, g);
  ++budget.used;
  if (!std::isfinite(r.value)) {
    r.status = LbfgsStatus::infeasible;
    return r;
  }
  if (r.x.size() == 0) return r;

  std::deque<Pair> history;
  Eigen::VectorXd x_new(r.x.size());
  Eigen::VectorXd g_new(r.x.size());
  r.status = LbfgsStatus::max_iterations;
  while (r.iterations < options.max_iterations) {
    if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance * std::max(1.0, std::abs(r.value))) {
      r.status = LbfgsStatus::converged;
      break;
    }
    Eigen::VectorXd d = two_loop(history, g);
    double slope = d.dot(g);
    if (!(slope < 0)) {
      history.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    double step = history.empty() ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;
    double f_new = 0;
    bool accepted = false;
    while (step > 1e-20) {
      if (budget.exhausted()) {
        r.status = LbfgsStatus::budget;
        return r;
      }
      x_new = r.x + step * d;
      f_new = f(x_new, g_new);
      ++budget.used;
      if (std::isfinite(f_new) && f_new <= r.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (history.empty()) {
        r.status = LbfgsStatus::line_search_failed;
        break;
      }
      history.clear();
      continue;
    }
    Pair p{x_new - r.x, g_new - g, 0};
    const double sy = p.s.dot(p.y);
    if (sy > 1e-12 * p.s.norm() * p.y.norm()) {
      p.rho = 1.0 / sy;
      history.push_back(std::move(p));
      if (history.size() > options.memory) history.pop_front();
    }
    const double decrease = r.value - f_new;
    r.x = x_new;
    g = g_new;
    r.value = f_new;
    ++r.iterations;
    if (decrease <= options.relative_tolerance * std::max(1.0, std::abs(r.value))) {
      r.status = LbfgsStatus::converged;
      break;
    }
  }
  return r;
}

}  // namespace seqmarkov

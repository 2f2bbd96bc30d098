#ifndef SEQMARKOV_LBFGS_HPP
#define SEQMARKOV_LBFGS_HPP

#include <Eigen/Dense>

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>

namespace seqmarkov {

// Shared objective-evaluation budget. The deadline, when set, makes results
// depend on machine speed.
struct EvalBudget {
  std::size_t max_evaluations = 0;  // 0 means unlimited
  std::optional<std::chrono::steady_clock::time_point> deadline;
  std::size_t used = 0;
  bool deadline_hit = false;

  bool exhausted();
};

// Returns f(x) and writes the gradient into `grad`. +inf marks an
// infeasible point.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  std::size_t memory = 10;
  std::size_t max_iterations = 1000;
  double gradient_tolerance = 1e-7;
  double relative_tolerance = 1e-15;
};

enum class LbfgsStatus { converged, max_iterations, budget, line_search_failed, infeasible };

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0;
  std::size_t iterations = 0;
  LbfgsStatus status = LbfgsStatus::converged;
};

// Limited-memory BFGS minimization with Armijo backtracking.
LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0,
                           EvalBudget& budget, const LbfgsOptions& options = {});

}  // namespace seqmarkov

#endif  // SEQMARKOV_LBFGS_HPP

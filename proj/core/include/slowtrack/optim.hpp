#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace slowtrack::optim {

/// Limited-memory quasi-Newton settings.
struct OptimizerConfig {
  int maxIter = 200;
  int history = 10;
  /// Stop once the max-norm of the gradient falls below this value.
  double gradientTolerance = 1e-7;
};

/// Objective callback: returns f(x) and writes df/dx into `gradient` (already sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& gradient)>;

struct OptimizerResult {
  Eigen::VectorXd x;
  double initialCost = 0.0;
  double finalCost = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Set when the line search broke down; `x` is then the best iterate reached.
  bool lineSearchFailed = false;
  std::string message;
};

/// Minimizes `objective` from `x0` with L-BFGS and a strong-Wolfe line search.
OptimizerResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                         const OptimizerConfig& config);

}  // namespace slowtrack::optim

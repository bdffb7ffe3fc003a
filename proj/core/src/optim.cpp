#include "slowtrack/optim.hpp"

#include <cmath>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "slowtrack/errors.hpp"

namespace slowtrack::optim {

namespace {

class CallbackFunction final : public ceres::FirstOrderFunction {
 public:
  CallbackFunction(const Objective& objective, int size) : objective_(objective), size_(size) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const Eigen::VectorXd> x(parameters, size_);
    scratchX_ = x;
    scratchG_.resize(size_);
    *cost = objective_(scratchX_, scratchG_);
    if (gradient != nullptr) Eigen::Map<Eigen::VectorXd>(gradient, size_) = scratchG_;
    return std::isfinite(*cost);
  }

  int NumParameters() const override { return size_; }

 private:
  const Objective& objective_;
  int size_;
  mutable Eigen::VectorXd scratchX_;
  mutable Eigen::VectorXd scratchG_;
};

}  // namespace

OptimizerResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                         const OptimizerConfig& config) {
  if (config.maxIter < 0 || config.history < 1 || config.gradientTolerance < 0.0) {
    throw InvalidInput("invalid optimizer configuration");
  }

  OptimizerResult result;
  result.x = x0;
  Eigen::VectorXd gradient(x0.size());
  result.initialCost = objective(x0, gradient);
  result.finalCost = result.initialCost;
  if (!std::isfinite(result.initialCost)) throw NumericalError("objective is not finite at start");
  if (config.maxIter == 0 || x0.size() == 0) {
    result.message = "no iterations requested";
    return result;
  }

  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.line_search_type = ceres::WOLFE;
  options.max_lbfgs_rank = config.history;
  options.max_num_iterations = config.maxIter;
  options.gradient_tolerance = config.gradientTolerance;
  // Only the gradient test and the iteration budget end a run.
  options.function_tolerance = 0.0;
  options.parameter_tolerance = 0.0;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;

  ceres::GradientProblem problem(new CallbackFunction(objective, static_cast<int>(x0.size())));
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(options, problem, result.x.data(), &summary);

  result.finalCost = summary.final_cost;
  result.iterations = static_cast<int>(summary.iterations.size()) - 1;
  result.converged = summary.termination_type == ceres::CONVERGENCE;
  result.lineSearchFailed = summary.termination_type == ceres::FAILURE;
  result.message = summary.message;
  if (!result.x.allFinite()) throw NumericalError("optimizer produced non-finite parameters");
  return result;
}

}  // namespace slowtrack::optim

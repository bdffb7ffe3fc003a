#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slowtrack/dataset.hpp"
#include "slowtrack/optim.hpp"

namespace slowtrack {

/// Tied weights of one linear autoencoder layer with pairwise subspace pooling.
///
/// `W` is p x d. Rows (2k, 2k+1) form pooled unit k. `edge` is the image-space patch edge
/// the layer consumes (d == edge * edge for the first layer only).
struct LayerWeights {
  static constexpr int kPoolArity = 2;

  Eigen::MatrixXd W;
  int edge = 0;

  int hidden() const noexcept { return static_cast<int>(W.rows()); }
  int input_dim() const noexcept { return static_cast<int>(W.cols()); }
  int pooled() const noexcept { return hidden() / kPoolArity; }

  /// Throws InvalidInput unless p is even, p, d >= 2 and all entries are finite.
  void validate() const;
};

namespace slowae {

struct SlowCostConfig {
  double alpha = 100.0;   // temporal slowness weight
  double gamma = 20.0;    // sparsity weight
  double epsL1 = 1e-6;    // |u| ~ sqrt(u^2 + epsL1)
  double epsPool = 1e-6;  // added inside the pooling square root

  void validate() const;
};

/// Explicit (p/2) x p pooling matrix summing adjacent pairs. Mostly useful for tests.
Eigen::MatrixXd pooling_matrix(int hidden);

/// h_k = sqrt(a_{2k}^2 + a_{2k+1}^2 + epsPool) for a hidden activation vector a.
Eigen::VectorXd pool_activations(const Eigen::Ref<const Eigen::VectorXd>& activations,
                                 double epsPool);

/// Pooled response of `weights` to input x.
Eigen::VectorXd pool(const LayerWeights& weights, const Eigen::Ref<const Eigen::VectorXd>& x,
                     double epsPool);

/// Value of each cost term at one weight matrix.
struct CostTerms {
  double reconstruction = 0.0;
  double slowness = 0.0;  // already multiplied by alpha
  double sparsity = 0.0;  // already multiplied by gamma
  double total() const noexcept { return reconstruction + slowness + sparsity; }
};

/// Smoothed slow-autoencoder objective over a fixed set of track sessions:
///
///   sum_i |x_i - W^T W x_i|^2 + alpha sum_{t,f} |h(t,f) - h(t,f+1)|_1 + gamma sum_i |h_i|_1
///
/// with every absolute value smoothed as sqrt(u^2 + epsL1).
class SlowObjective {
 public:
  SlowObjective(std::span<const TrackSession> sessions, const SlowCostConfig& config);

  int input_dim() const noexcept { return static_cast<int>(data_.rows()); }
  int samples() const noexcept { return static_cast<int>(data_.cols()); }

  CostTerms terms(const Eigen::MatrixXd& W) const;
  double cost(const Eigen::MatrixXd& W) const { return terms(W).total(); }

  /// Cost, with dcost/dW written to `gradient` when it is non-null.
  double evaluate(const Eigen::MatrixXd& W, Eigen::MatrixXd* gradient) const;

 private:
  void check(const Eigen::MatrixXd& W) const;

  SlowCostConfig config_;
  Eigen::MatrixXd data_;  // d x N, sessions contiguous
  // Column index j such that columns (j, j+1) are consecutive frames of one session.
  std::vector<Eigen::Index> pairs_;
};

double cost(const LayerWeights& weights, std::span<const TrackSession> sessions,
            const SlowCostConfig& config);
Eigen::MatrixXd gradient(const LayerWeights& weights, std::span<const TrackSession> sessions,
                         const SlowCostConfig& config);

/// Mean over consecutive frame pairs of |h(t,f) - h(t,f+1)|_1 (unsmoothed). The held-out
/// slowness statistic used to compare trained layers.
double mean_temporal_difference(const LayerWeights& weights,
                                std::span<const TrackSession> sessions, double epsPool);

struct TrainConfig {
  int hidden = 64;
  int edge = 0;           // recorded in the weights; defaults to the sessions' edge
  double initStd = 0.01;  // i.i.d. Gaussian initialization
  optim::OptimizerConfig optimizer;
};

struct TrainResult {
  LayerWeights weights;
  double initialCost = 0.0;
  double finalCost = 0.0;
  int iterations = 0;
  /// Line search failure; `weights` holds the best iterate reached.
  bool warning = false;
  std::string message;
};

/// Gaussian initialization from `seed`, then L-BFGS on the full-batch objective.
TrainResult train_layer(std::span<const TrackSession> sessions, const SlowCostConfig& cost,
                        const TrainConfig& train, std::uint64_t seed);

/// Initial weights used by train_layer for the same (hidden, d, initStd, seed).
Eigen::MatrixXd initial_weights(int hidden, int inputDim, double initStd, std::uint64_t seed);

struct WeightFile {
  LayerWeights weights;
  SlowCostConfig cost;
};

/// "SLWT", version, (p, d, edge) as u32, W row-major as f64, then alpha, gamma, epsL1,
/// epsPool as f64. Little-endian.
void save_weights(const std::filesystem::path& path, const LayerWeights& weights,
                  const SlowCostConfig& cost);
WeightFile load_weights(const std::filesystem::path& path);

inline constexpr std::uint32_t kWeightFileVersion = 1;

}  // namespace slowae
}  // namespace slowtrack

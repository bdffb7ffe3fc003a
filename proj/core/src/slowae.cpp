#include "slowtrack/slowae.hpp"

#include <cmath>
#include <random>

#include "binary_io.hpp"
#include "slowtrack/errors.hpp"

namespace slowtrack {

void LayerWeights::validate() const {
  if (W.rows() < 2 || W.cols() < 2) throw InvalidInput("layer needs p, d >= 2");
  if (W.rows() % kPoolArity != 0) throw InvalidInput("hidden unit count must be even");
  if (!W.allFinite()) throw InvalidInput("layer weights contain non-finite entries");
}

namespace slowae {

void SlowCostConfig::validate() const {
  if (!(alpha >= 0.0) || !(gamma >= 0.0)) throw InvalidInput("alpha and gamma must be >= 0");
  if (!(epsL1 > 0.0 && epsL1 <= 1e-3)) throw InvalidInput("epsL1 must be in (0, 1e-3]");
  if (!(epsPool > 0.0 && epsPool <= 1e-3)) throw InvalidInput("epsPool must be in (0, 1e-3]");
}

Eigen::MatrixXd pooling_matrix(int hidden) {
  if (hidden < 2 || hidden % 2 != 0) throw InvalidInput("hidden unit count must be even");
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(hidden / 2, hidden);
  for (int k = 0; k < hidden / 2; ++k) P(k, 2 * k) = P(k, 2 * k + 1) = 1.0;
  return P;
}

Eigen::VectorXd pool_activations(const Eigen::Ref<const Eigen::VectorXd>& activations,
                                 double epsPool) {
  if (activations.size() % 2 != 0) throw InvalidInput("odd activation count");
  const Eigen::Index pairs = activations.size() / 2;
  Eigen::VectorXd h(pairs);
  for (Eigen::Index k = 0; k < pairs; ++k) {
    const double a = activations[2 * k];
    const double b = activations[2 * k + 1];
    h[k] = std::sqrt(a * a + b * b + epsPool);
  }
  return h;
}

Eigen::VectorXd pool(const LayerWeights& weights, const Eigen::Ref<const Eigen::VectorXd>& x,
                     double epsPool) {
  if (x.size() != weights.W.cols()) throw InvalidInput("input dimension mismatch");
  if (!x.allFinite()) throw InvalidInput("non-finite input");
  return pool_activations(weights.W * x, epsPool);
}

SlowObjective::SlowObjective(std::span<const TrackSession> sessions, const SlowCostConfig& config)
    : config_(config) {
  config_.validate();
  if (sessions.empty()) throw InvalidInput("empty dataset");
  const int d = sessions.front().dim();
  Eigen::Index total = 0;
  for (const auto& s : sessions) {
    if (s.frames() < 1 || s.dim() != d || d < 1) throw InvalidInput("inconsistent session shapes");
    for (const auto& p : s.patches) {
      if (p.size() != d) throw InvalidInput("inconsistent patch dimension");
    }
    total += s.frames();
  }
  data_.resize(d, total);
  Eigen::Index col = 0;
  for (const auto& s : sessions) {
    for (int f = 0; f < s.frames(); ++f) {
      if (f + 1 < s.frames()) pairs_.push_back(col);
      data_.col(col++) = s.patches[static_cast<std::size_t>(f)];
    }
  }
}

void SlowObjective::check(const Eigen::MatrixXd& W) const {
  if (W.cols() != data_.rows()) throw InvalidInput("weight matrix does not match input dimension");
  if (W.rows() < 2 || W.rows() % 2 != 0) throw InvalidInput("hidden unit count must be even");
}

CostTerms SlowObjective::terms(const Eigen::MatrixXd& W) const {
  check(W);
  const Eigen::MatrixXd A = W * data_;
  const Eigen::MatrixXd residual = data_ - W.transpose() * A;
  const Eigen::Index pairs = A.rows() / 2;

  Eigen::MatrixXd H(pairs, A.cols());
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    for (Eigen::Index k = 0; k < pairs; ++k) {
      const double a = A(2 * k, i);
      const double b = A(2 * k + 1, i);
      H(k, i) = std::sqrt(a * a + b * b + config_.epsPool);
    }
  }

  const double eps = config_.epsL1;
  CostTerms t;
  t.reconstruction = residual.squaredNorm();
  double slow = 0.0;
  for (const Eigen::Index j : pairs_) {
    slow += ((H.col(j) - H.col(j + 1)).array().square() + eps).sqrt().sum();
  }
  t.slowness = config_.alpha * slow;
  t.sparsity = config_.gamma * (H.array().square() + eps).sqrt().sum();
  return t;
}

double SlowObjective::evaluate(const Eigen::MatrixXd& W, Eigen::MatrixXd* gradient) const {
  if (gradient == nullptr) return cost(W);
  check(W);

  const Eigen::MatrixXd A = W * data_;
  const Eigen::MatrixXd residual = data_ - W.transpose() * A;
  const Eigen::Index pairs = A.rows() / 2;
  const double eps = config_.epsL1;

  Eigen::MatrixXd H(pairs, A.cols());
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    for (Eigen::Index k = 0; k < pairs; ++k) {
      const double a = A(2 * k, i);
      const double b = A(2 * k + 1, i);
      H(k, i) = std::sqrt(a * a + b * b + config_.epsPool);
    }
  }

  // dcost/dH for the two penalty terms.
  Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(pairs, A.cols());
  double slow = 0.0;
  if (config_.alpha != 0.0) {
    for (const Eigen::Index j : pairs_) {
      const Eigen::ArrayXd u = H.col(j) - H.col(j + 1);
      const Eigen::ArrayXd s = (u.square() + eps).sqrt();
      slow += s.sum();
      const Eigen::VectorXd g = (config_.alpha * u / s).matrix();
      dH.col(j) += g;
      dH.col(j + 1) -= g;
    }
  }
  const Eigen::ArrayXXd smoothedH = (H.array().square() + eps).sqrt();
  const double sparse = smoothedH.sum();
  if (config_.gamma != 0.0) dH.array() += config_.gamma * H.array() / smoothedH;

  // Back through the pooling square root: dh_k/da_{2k} = a_{2k} / h_k.
  Eigen::MatrixXd dA(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    for (Eigen::Index k = 0; k < pairs; ++k) {
      const double scale = dH(k, i) / H(k, i);
      dA(2 * k, i) = scale * A(2 * k, i);
      dA(2 * k + 1, i) = scale * A(2 * k + 1, i);
    }
  }

  // Tied-weight reconstruction: d|X - W^T W X|^2 / dW = -2 (W X R^T + W R X^T).
  *gradient = dA * data_.transpose();
  gradient->noalias() -= 2.0 * (A * residual.transpose());
  gradient->noalias() -= 2.0 * (W * (residual * data_.transpose()));

  return residual.squaredNorm() + config_.alpha * slow + config_.gamma * sparse;
}

double cost(const LayerWeights& weights, std::span<const TrackSession> sessions,
            const SlowCostConfig& config) {
  return SlowObjective(sessions, config).cost(weights.W);
}

Eigen::MatrixXd gradient(const LayerWeights& weights, std::span<const TrackSession> sessions,
                         const SlowCostConfig& config) {
  Eigen::MatrixXd g;
  SlowObjective(sessions, config).evaluate(weights.W, &g);
  return g;
}

double mean_temporal_difference(const LayerWeights& weights,
                                std::span<const TrackSession> sessions, double epsPool) {
  double total = 0.0;
  long count = 0;
  for (const auto& s : sessions) {
    for (int f = 0; f + 1 < s.frames(); ++f) {
      const auto a = pool(weights, s.patches[static_cast<std::size_t>(f)], epsPool);
      const auto b = pool(weights, s.patches[static_cast<std::size_t>(f + 1)], epsPool);
      total += (a - b).lpNorm<1>();
      ++count;
    }
  }
  if (count == 0) throw InvalidInput("no consecutive frame pairs");
  return total / static_cast<double>(count);
}

Eigen::MatrixXd initial_weights(int hidden, int inputDim, double initStd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, initStd);
  Eigen::MatrixXd W(hidden, inputDim);
  // Fill row-major so the draw order matches the weight file layout.
  for (int r = 0; r < hidden; ++r) {
    for (int c = 0; c < inputDim; ++c) W(r, c) = normal(rng);
  }
  return W;
}

TrainResult train_layer(std::span<const TrackSession> sessions, const SlowCostConfig& cost,
                        const TrainConfig& train, std::uint64_t seed) {
  if (sessions.empty()) throw InvalidInput("no training sessions");
  if (train.hidden < 2 || train.hidden % 2 != 0) throw InvalidInput("hidden unit count must be even");
  if (!(train.initStd > 0.0)) throw InvalidInput("initialization stddev must be positive");

  const SlowObjective objective(sessions, cost);
  const int p = train.hidden;
  const int d = objective.input_dim();

  const Eigen::MatrixXd W0 = initial_weights(p, d, train.initStd, seed);
  Eigen::MatrixXd W(p, d);
  Eigen::MatrixXd G(p, d);
  const optim::Objective fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    W = Eigen::Map<const Eigen::MatrixXd>(x.data(), p, d);
    const double value = objective.evaluate(W, &G);
    grad = Eigen::Map<const Eigen::VectorXd>(G.data(), G.size());
    return value;
  };
  const auto opt = optim::minimize(
      fn, Eigen::Map<const Eigen::VectorXd>(W0.data(), W0.size()), train.optimizer);

  TrainResult result;
  result.weights.W = Eigen::Map<const Eigen::MatrixXd>(opt.x.data(), p, d);
  result.weights.edge = train.edge > 0 ? train.edge : sessions.front().edge;
  result.initialCost = opt.initialCost;
  result.finalCost = opt.finalCost;
  result.iterations = opt.iterations;
  result.warning = opt.lineSearchFailed;
  result.message = opt.message;
  return result;
}

void save_weights(const std::filesystem::path& path, const LayerWeights& weights,
                  const SlowCostConfig& cost) {
  weights.validate();
  io::Writer out;
  out.magic("SLWT");
  out.u32(kWeightFileVersion);
  out.u32(static_cast<std::uint32_t>(weights.hidden()));
  out.u32(static_cast<std::uint32_t>(weights.input_dim()));
  out.u32(static_cast<std::uint32_t>(weights.edge));
  for (Eigen::Index r = 0; r < weights.W.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights.W.cols(); ++c) out.f64(weights.W(r, c));
  }
  out.f64(cost.alpha);
  out.f64(cost.gamma);
  out.f64(cost.epsL1);
  out.f64(cost.epsPool);
  out.save(path);
}

WeightFile load_weights(const std::filesystem::path& path) {
  auto in = io::Reader::open(path);
  in.expect_magic("SLWT");
  const std::size_t versionAt = in.offset();
  const auto version = in.u32("version");
  if (version != kWeightFileVersion) {
    throw FormatError("unsupported weight file version " + std::to_string(version), versionAt);
  }
  const std::size_t shapeAt = in.offset();
  const auto p = in.u32("hidden units");
  const auto d = in.u32("input dimension");
  const auto edge = in.u32("patch edge");
  if (p < 2 || p % 2 != 0 || d < 2) throw FormatError("invalid layer shape", shapeAt);
  if (static_cast<std::uint64_t>(p) * d * 8 + 32 > in.remaining()) {
    throw FormatError("truncated weight payload", in.offset());
  }

  WeightFile file;
  file.weights.edge = static_cast<int>(edge);
  file.weights.W.resize(p, d);
  for (Eigen::Index r = 0; r < file.weights.W.rows(); ++r) {
    for (Eigen::Index c = 0; c < file.weights.W.cols(); ++c) file.weights.W(r, c) = in.f64("weights");
  }
  file.cost.alpha = in.f64("alpha");
  file.cost.gamma = in.f64("gamma");
  file.cost.epsL1 = in.f64("epsL1");
  file.cost.epsPool = in.f64("epsPool");
  in.expect_end();
  return file;
}

}  // namespace slowae
}  // namespace slowtrack

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "slowtrack/slowae.hpp"
#include "slowtrack/pipeline.hpp"
#include "test_support.hpp"

namespace slowtrack {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Independent scalar evaluation of the smoothed slow autoencoder cost.
double scalar_cost(const MatrixXd& W, const std::vector<TrackSession>& sessions,
                   const slowae::SlowCostConfig& c) {
  const int p = static_cast<int>(W.rows());
  const int d = static_cast<int>(W.cols());
  auto pooled = [&](const VectorXd& x) {
    std::vector<double> h(p / 2);
    for (int k = 0; k < p / 2; ++k) {
      double a = 0.0, b = 0.0;
      for (int j = 0; j < d; ++j) {
        a += W(2 * k, j) * x[j];
        b += W(2 * k + 1, j) * x[j];
      }
      h[k] = std::sqrt(a * a + b * b + c.epsPool);
    }
    return h;
  };
  double rec = 0.0, slow = 0.0, sparse = 0.0;
  for (const auto& s : sessions) {
    for (std::size_t f = 0; f < s.patches.size(); ++f) {
      const VectorXd& x = s.patches[f];
      for (int j = 0; j < d; ++j) {
        double r = 0.0;
        for (int i = 0; i < p; ++i) {
          double act = 0.0;
          for (int m = 0; m < d; ++m) act += W(i, m) * x[m];
          r += W(i, j) * act;
        }
        rec += (x[j] - r) * (x[j] - r);
      }
      const auto h = pooled(x);
      for (double v : h) sparse += std::sqrt(v * v + c.epsL1);
      if (f + 1 < s.patches.size()) {
        const auto h2 = pooled(s.patches[f + 1]);
        for (std::size_t k = 0; k < h.size(); ++k) {
          slow += std::sqrt((h[k] - h2[k]) * (h[k] - h2[k]) + c.epsL1);
        }
      }
    }
  }
  return rec + c.alpha * slow + c.gamma * sparse;
}

LayerWeights layer(const MatrixXd& W, int edge = 0) {
  LayerWeights l;
  l.W = W;
  l.edge = edge;
  return l;
}

TEST(SlowCost, MatchesScalarOracle) {
  const auto sessions = testing::random_sessions(4, 3, 6, 1);
  slowae::SlowCostConfig c;
  c.alpha = 3.0;
  c.gamma = 0.7;
  for (int seed = 0; seed < 5; ++seed) {
    const MatrixXd W = testing::random_matrix(4, 6, 100 + seed, 0.5);
    EXPECT_NEAR(slowae::cost(layer(W), sessions, c), scalar_cost(W, sessions, c), 1e-9);
  }
}

TEST(SlowCost, ReducesToTiedAutoencoderWithoutPenalties) {
  const auto sessions = testing::random_sessions(3, 4, 6, 2);
  slowae::SlowCostConfig c;
  c.alpha = 0.0;
  c.gamma = 0.0;
  const MatrixXd W = testing::random_matrix(4, 6, 9, 0.4);
  double baseline = 0.0;
  for (const auto& s : sessions) {
    for (const auto& x : s.patches) baseline += (W.transpose() * (W * x) - x).squaredNorm();
  }
  EXPECT_NEAR(slowae::cost(layer(W), sessions, c), baseline, 1e-10);
}

TEST(SlowCost, ReconstructionGradientMatchesClosedForm) {
  const auto sessions = testing::random_sessions(2, 3, 6, 4);
  slowae::SlowCostConfig c;
  c.alpha = 0.0;
  c.gamma = 0.0;
  const MatrixXd W = testing::random_matrix(4, 6, 5, 0.3);
  MatrixXd expected = MatrixXd::Zero(4, 6);
  for (const auto& s : sessions) {
    for (const auto& x : s.patches) {
      const VectorXd a = W * x;
      const VectorXd r = x - W.transpose() * a;
      expected -= 2.0 * (a * r.transpose() + W * r * x.transpose());
    }
  }
  EXPECT_LT((slowae::gradient(layer(W), sessions, c) - expected).cwiseAbs().maxCoeff(), 1e-10);
}

struct PenaltyCase {
  double alpha;
  double gamma;
};

class GradientCheck : public ::testing::TestWithParam<PenaltyCase> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  slowae::SlowCostConfig c;
  c.alpha = GetParam().alpha;
  c.gamma = GetParam().gamma;
  constexpr double h = 1e-6;
  for (int instance = 0; instance < 20; ++instance) {
    const auto sessions = testing::random_sessions(3, 3, 6, 1000 + instance);
    const MatrixXd W = testing::random_matrix(4, 6, 2000 + instance, 0.5);
    const MatrixXd g = slowae::gradient(layer(W), sessions, c);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 6; ++j) {
        MatrixXd plus = W, minus = W;
        plus(i, j) += h;
        minus(i, j) -= h;
        const double fd = (scalar_cost(plus, sessions, c) - scalar_cost(minus, sessions, c)) / (2 * h);
        EXPECT_NEAR(g(i, j), fd, std::max(1e-6, 1e-4 * std::abs(g(i, j))))
            << "instance " << instance << " entry " << i << "," << j;
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(PenaltyCombinations, GradientCheck,
                         ::testing::Values(PenaltyCase{0.0, 0.0}, PenaltyCase{100.0, 0.0},
                                           PenaltyCase{0.0, 20.0}, PenaltyCase{100.0, 20.0}));

TEST(Pooling, MatrixPairsConsecutiveUnits) {
  const MatrixXd P = slowae::pooling_matrix(6);
  ASSERT_EQ(P.rows(), 3);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(P.row(k).sum(), 2.0);
    EXPECT_EQ(P(k, 2 * k), 1.0);
    EXPECT_EQ(P(k, 2 * k + 1), 1.0);
  }
  EXPECT_EQ((P * P.transpose()), 2.0 * MatrixXd::Identity(3, 3));
  EXPECT_THROW(slowae::pooling_matrix(5), InvalidInput);
}

TEST(Pooling, RotationWithinPairLeavesAmplitudeUnchanged) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (int t = 0; t < 10000; ++t) {
    const double a = normal(rng), b = normal(rng), th = angle(rng);
    VectorXd v(2), r(2);
    v << a, b;
    r << std::cos(th) * a - std::sin(th) * b, std::sin(th) * a + std::cos(th) * b;
    EXPECT_LT(std::abs(slowae::pool_activations(v, 1e-6)[0] - slowae::pool_activations(r, 1e-6)[0]), 1e-10);
  }
}

TEST(Pooling, ZeroInputGivesSmoothingFloor) {
  const LayerWeights l = layer(testing::random_matrix(4, 6, 1));
  const VectorXd h = slowae::pool(l, VectorXd::Zero(6), 1e-6);
  for (double v : h) EXPECT_DOUBLE_EQ(v, 1e-3);
  EXPECT_THROW(slowae::pool(l, VectorXd::Zero(5), 1e-6), InvalidInput);
}

TEST(Train, ZeroIterationsReturnsInitialization) {
  const auto sessions = testing::random_sessions(5, 3, 6, 3);
  slowae::TrainConfig t;
  t.hidden = 4;
  t.optimizer.maxIter = 0;
  const auto r = slowae::train_layer(sessions, {}, t, 77);
  EXPECT_EQ(r.weights.W, slowae::initial_weights(4, 6, t.initStd, 77));
  EXPECT_EQ(r.finalCost, r.initialCost);
}

TEST(Train, DescendsOnTranslatingEdges) {
  const auto sessions = pipeline::synthetic_sessions(8, 100, 5, 1.0, 5.0, 3);
  slowae::TrainConfig t;
  t.hidden = 16;
  t.optimizer.maxIter = 200;
  const auto r = slowae::train_layer(sessions, {}, t, 5);
  EXPECT_LT(r.finalCost, r.initialCost);
  EXPECT_EQ(r.weights.edge, 8);
  EXPECT_TRUE(r.weights.W.allFinite());
}

TEST(Train, SameSeedIsDeterministic) {
  const auto sessions = testing::random_sessions(6, 3, 6, 8);
  slowae::TrainConfig t;
  t.hidden = 4;
  t.optimizer.maxIter = 30;
  EXPECT_EQ(slowae::train_layer(sessions, {}, t, 4).weights.W, slowae::train_layer(sessions, {}, t, 4).weights.W);
}

TEST(Train, RejectsOddHiddenCount) {
  const auto sessions = testing::random_sessions(2, 2, 6, 8);
  slowae::TrainConfig t;
  t.hidden = 5;
  EXPECT_THROW(slowae::train_layer(sessions, {}, t, 1), InvalidInput);
}

TEST(WeightFile, RoundTrip) {
  const auto dir = testing::scratch_dir("weights");
  const LayerWeights l = layer(testing::random_matrix(6, 16, 2), 4);
  slowae::SlowCostConfig c;
  c.alpha = 300.0;
  slowae::save_weights(dir / "w.bin", l, c);
  const auto back = slowae::load_weights(dir / "w.bin");
  EXPECT_EQ(back.weights.W, l.W);
  EXPECT_EQ(back.weights.edge, 4);
  EXPECT_EQ(back.cost.alpha, 300.0);
  EXPECT_EQ(back.cost.gamma, c.gamma);

  std::string bytes = testing::read_file(dir / "w.bin");
  std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  EXPECT_THROW(slowae::load_weights(dir / "short.bin"), FormatError);
}

TEST(TemporalDifference, ZeroForStaticSessions) {
  auto sessions = testing::random_sessions(3, 1, 6, 1);
  for (auto& s : sessions) s.patches.assign(4, s.patches.front());
  const LayerWeights l = layer(testing::random_matrix(4, 6, 3));
  EXPECT_EQ(slowae::mean_temporal_difference(l, sessions, 1e-6), 0.0);
}

}  // namespace
}  // namespace slowtrack

#include "slowtrack/viz.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "slowtrack/errors.hpp"

namespace slowtrack::viz {

Eigen::VectorXd stimulus_l1_raw(const LayerWeights& layer1, int pairIndex, double theta) {
  if (pairIndex < 0 || pairIndex >= layer1.pooled()) throw InvalidInput("pair index out of range");
  return (std::cos(theta) * layer1.W.row(2 * pairIndex) +
          std::sin(theta) * layer1.W.row(2 * pairIndex + 1))
      .transpose();
}

Eigen::VectorXd stimulus_l2_raw(const stack::StackedModel& model, int pairIndex, double theta) {
  const auto& l1 = model.layer1;
  const auto& l2 = model.layer2;
  if (pairIndex < 0 || pairIndex >= l2.pooled()) throw InvalidInput("pair index out of range");
  const int cells = model.window_cells();
  const int channels = l1.pooled();
  if (l2.W.cols() != static_cast<Eigen::Index>(cells) * cells * channels) {
    throw InvalidInput("second layer does not match first-layer geometry");
  }
  const int edge = l2.edge;
  if ((cells - 1) * model.k1 + l1.edge > edge) throw InvalidInput("cells exceed second-layer patch");

  const Eigen::VectorXd v = (std::cos(theta) * l2.W.row(2 * pairIndex) +
                             std::sin(theta) * l2.W.row(2 * pairIndex + 1))
                                .transpose();
  Eigen::VectorXd image = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(edge) * edge);
  for (int cr = 0; cr < cells; ++cr) {
    for (int cc = 0; cc < cells; ++cc) {
      for (int j = 0; j < channels; ++j) {
        const double coefficient = v[(cr * cells + cc) * channels + j];
        if (coefficient == 0.0) continue;
        const auto filter = l1.W.row(2 * j);
        for (int y = 0; y < l1.edge; ++y) {
          for (int x = 0; x < l1.edge; ++x) {
            image[(cr * model.k1 + y) * edge + cc * model.k1 + x] += coefficient * filter[y * l1.edge + x];
          }
        }
      }
    }
  }
  return image;
}

Image rescale(const Eigen::VectorXd& values, int edge) {
  Image out = dataset::unflatten(values, edge);
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  for (double& v : out.data()) v = hi > lo ? (v - lo) / (hi - lo) : 0.5;
  return out;
}

Image optimal_stimulus_l1(const LayerWeights& layer1, int pairIndex, double theta) {
  return rescale(stimulus_l1_raw(layer1, pairIndex, theta), layer1.edge);
}

Image optimal_stimulus_l2(const stack::StackedModel& model, int pairIndex, double theta) {
  return rescale(stimulus_l2_raw(model, pairIndex, theta), model.layer2.edge);
}

LayerWeights orthonormalize_pairs(const LayerWeights& weights) {
  LayerWeights out = weights;
  for (int k = 0; k < weights.pooled(); ++k) {
    Eigen::MatrixXd pair(2, weights.W.cols());
    pair.row(0) = weights.W.row(2 * k);
    pair.row(1) = weights.W.row(2 * k + 1);
    const Eigen::Matrix2d gram = pair * pair.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(gram);
    const auto& lambda = eig.eigenvalues();
    if (!(lambda.minCoeff() > 1e-12 * std::max(1.0, lambda.maxCoeff()))) continue;
    const Eigen::Matrix2d invSqrt =
        eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    const Eigen::MatrixXd ortho = invSqrt * pair;
    out.W.row(2 * k) = ortho.row(0);
    out.W.row(2 * k + 1) = ortho.row(1);
  }
  return out;
}

StimulusGrid render_grid(const stack::StackedModel& model, int layer,
                         std::span<const int> pairIndices, const RenderOptions& options,
                         const std::optional<std::filesystem::path>& png) {
  if (options.thetaStepDeg <= 0 || 360 % options.thetaStepDeg != 0) {
    throw InvalidInput("phase step must divide 360 degrees");
  }
  if (layer != 1 && layer != 2) throw InvalidInput("layer must be 1 or 2");
  if (pairIndices.empty()) throw InvalidInput("no pooled units selected");

  stack::StackedModel basis = model;
  if (options.orthonormalize) {
    if (layer == 1) basis.layer1 = orthonormalize_pairs(model.layer1);
    else basis.layer2 = orthonormalize_pairs(model.layer2);
  }

  StimulusGrid grid;
  grid.rows = static_cast<int>(pairIndices.size());
  grid.cols = 360 / options.thetaStepDeg;
  grid.edge = layer == 1 ? model.layer1.edge : model.layer2.edge;
  for (const int pair : pairIndices) {
    for (int c = 0; c < grid.cols; ++c) {
      const double theta = c * options.thetaStepDeg * std::numbers::pi / 180.0;
      auto raw = layer == 1 ? stimulus_l1_raw(basis.layer1, pair, theta)
                            : stimulus_l2_raw(basis, pair, theta);
      grid.cells.push_back(rescale(raw, grid.edge));
      grid.raw.push_back(std::move(raw));
    }
  }
  if (png) save_png(tile(grid, options.gap, options.scale), *png);
  return grid;
}

Image tile(const StimulusGrid& grid, int gap, int scale) {
  if (scale < 1 || gap < 0) throw InvalidInput("bad tiling parameters");
  const int width = grid.cols * grid.edge + (grid.cols + 1) * gap;
  const int height = grid.rows * grid.edge + (grid.rows + 1) * gap;
  Image out(width * scale, height * scale, 0.0);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const Image& cell = grid.at(r, c);
      const int ox = gap + c * (grid.edge + gap);
      const int oy = gap + r * (grid.edge + gap);
      for (int y = 0; y < grid.edge * scale; ++y) {
        for (int x = 0; x < grid.edge * scale; ++x) {
          out(ox * scale + x, oy * scale + y) = cell(x / scale, y / scale);
        }
      }
    }
  }
  return out;
}

}  // namespace slowtrack::viz

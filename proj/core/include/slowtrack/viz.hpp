#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "slowtrack/image.hpp"
#include "slowtrack/slowae.hpp"
#include "slowtrack/stack.hpp"

namespace slowtrack::viz {

/// Phase-shifted optimal stimuli: one row per pooled unit, one column per phase step.
struct StimulusGrid {
  int rows = 0;
  int cols = 0;
  int edge = 0;
  std::vector<Image> cells;  // row-major, each rescaled to [0, 1]
  std::vector<Eigen::VectorXd> raw;  // same order, before rescaling

  const Image& at(int row, int col) const { return cells[static_cast<std::size_t>(row * cols + col)]; }
};

/// cos(theta) * W[2i] + sin(theta) * W[2i+1], flattened, before any rescaling.
Eigen::VectorXd stimulus_l1_raw(const LayerWeights& layer1, int pairIndex, double theta);

/// Second-layer phase-shifted weight vector back-projected into image space. Each
/// second-layer input (cell, first-layer pair j) scales pair j's theta = 0 filter, placed
/// at the cell's pixel offset; overlapping contributions add.
Eigen::VectorXd stimulus_l2_raw(const stack::StackedModel& model, int pairIndex, double theta);

/// Per-image affine min-max rescale to [0, 1]; a constant input maps to 0.5 everywhere.
Image rescale(const Eigen::VectorXd& values, int edge);

Image optimal_stimulus_l1(const LayerWeights& layer1, int pairIndex, double theta);
Image optimal_stimulus_l2(const stack::StackedModel& model, int pairIndex, double theta);

/// Replaces every row pair by the symmetric (Loewdin) orthonormalization of the pair,
/// which spans the same two-dimensional subspace. Degenerate pairs are left unchanged.
LayerWeights orthonormalize_pairs(const LayerWeights& weights);

struct RenderOptions {
  int thetaStepDeg = 36;
  /// Phase-shift within each pair's orthonormalized basis, so the pooled response of a
  /// unit-norm stimulus does not depend on the phase.
  bool orthonormalize = true;
  int scale = 4;  // nearest-neighbour magnification in the PNG
  int gap = 1;    // separator pixels between tiles (before magnification)
};

/// Renders the grid for layer 1 or 2 and, when `png` is given, writes it as a tiled image.
StimulusGrid render_grid(const stack::StackedModel& model, int layer,
                         std::span<const int> pairIndices, const RenderOptions& options,
                         const std::optional<std::filesystem::path>& png = std::nullopt);

Image tile(const StimulusGrid& grid, int gap, int scale);

}  // namespace slowtrack::viz

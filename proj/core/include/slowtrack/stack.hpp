#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "slowtrack/dataset.hpp"
#include "slowtrack/image.hpp"
#include "slowtrack/slowae.hpp"

namespace slowtrack::stack {

/// Edge of the normalized tracking observation.
inline constexpr int kTemplateEdge = 32;

enum class FeatureKind { Amplitude, Phase, Both };

/// Square grid of per-cell feature vectors, stored cell-major (row, then column) with
/// channels innermost. Only the planes requested by `kind` are populated.
struct FeatureMap {
  int grid = 0;
  int channels = 0;
  FeatureKind kind = FeatureKind::Amplitude;
  std::vector<double> amplitude;
  std::vector<double> phase;

  bool has_amplitude() const noexcept { return kind != FeatureKind::Phase; }
  bool has_phase() const noexcept { return kind != FeatureKind::Amplitude; }
  std::span<const double> amplitude_cell(int row, int col) const;
  std::span<const double> phase_cell(int row, int col) const;
};

/// floor((imageEdge - patchEdge) / stride) + 1; throws when the patch does not fit.
int grid_size(int imageEdge, int patchEdge, int stride);

/// |A + iB|.
double amplitude(double a, double b);
/// arg(A + iB) in (-pi, pi]; the origin maps to 0.
double phase(double a, double b);

/// Slides an edge x edge window over `image` with `stride`, standardizes each crop and
/// reports pooled amplitudes and/or pair phases of `weights`.
FeatureMap dense_extract(const LayerWeights& weights, const Image& image, int stride,
                         FeatureKind kind, double epsPool);

/// Concatenates the amplitude vectors of a windowCells x windowCells block of cells
/// (row-major over cells, channels innermost) and standardizes the result.
Eigen::VectorXd window_vector(const FeatureMap& map, int row, int col, int windowCells);

/// Second-layer features computed on a first-layer amplitude map.
FeatureMap dense_extract_cells(const LayerWeights& layer2, const FeatureMap& layer1Map,
                               int windowCells, int strideCells, FeatureKind kind,
                               double epsPool);

/// Turns pixel sessions of large patches into first-layer amplitude sessions, preserving
/// session and frame order so the slowness cost applies unchanged at the second layer.
std::vector<TrackSession> layer2_training_vectors(std::span<const TrackSession> sessions,
                                                  const LayerWeights& layer1, int k1,
                                                  double epsPool);

/// Two trained layers plus the strides used to stack them.
struct StackedModel {
  LayerWeights layer1;
  LayerWeights layer2;
  int k1 = 6;
  int k2 = 2;
  double epsPool = 1e-6;

  /// Cells of the first-layer map covered by one second-layer input.
  int window_cells() const;
  /// Length of the tracking representation for a 32 x 32 observation.
  int representation_size() const;
  void validate() const;
};

/// Final representation z of a 32 x 32 observation, laid out as
/// [layer-1 amplitudes | layer-1 phases | layer-2 amplitudes | layer-2 phases], each block
/// cell-major with channels innermost.
Eigen::VectorXd tracking_representation(const Image& observation, const StackedModel& model);

}  // namespace slowtrack::stack

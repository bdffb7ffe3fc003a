#include "slowtrack/stack.hpp"

#include <cmath>
#include <numbers>

#include "slowtrack/errors.hpp"

namespace slowtrack::stack {

std::span<const double> FeatureMap::amplitude_cell(int row, int col) const {
  const auto offset = static_cast<std::size_t>(row * grid + col) * static_cast<std::size_t>(channels);
  return std::span<const double>(amplitude).subspan(offset, static_cast<std::size_t>(channels));
}

std::span<const double> FeatureMap::phase_cell(int row, int col) const {
  const auto offset = static_cast<std::size_t>(row * grid + col) * static_cast<std::size_t>(channels);
  return std::span<const double>(phase).subspan(offset, static_cast<std::size_t>(channels));
}

int grid_size(int imageEdge, int patchEdge, int stride) {
  if (stride < 1) throw InvalidInput("stride must be >= 1");
  if (patchEdge < 1 || imageEdge < patchEdge) throw InvalidInput("image smaller than patch");
  return (imageEdge - patchEdge) / stride + 1;
}

double amplitude(double a, double b) { return std::hypot(a, b); }

double phase(double a, double b) {
  if (a == 0.0 && b == 0.0) return 0.0;
  const double angle = std::atan2(b, a);
  return angle == -std::numbers::pi ? std::numbers::pi : angle;
}

namespace {

// Pools/phases the activation matrix (p x cells) into `map`.
void fill_map(const Eigen::MatrixXd& activations, FeatureMap& map, double epsPool) {
  const int pairs = static_cast<int>(activations.rows() / 2);
  const auto cells = static_cast<std::size_t>(activations.cols());
  if (map.has_amplitude()) map.amplitude.resize(cells * static_cast<std::size_t>(pairs));
  if (map.has_phase()) map.phase.resize(cells * static_cast<std::size_t>(pairs));
  for (std::size_t c = 0; c < cells; ++c) {
    for (int k = 0; k < pairs; ++k) {
      const double a = activations(2 * k, static_cast<Eigen::Index>(c));
      const double b = activations(2 * k + 1, static_cast<Eigen::Index>(c));
      const std::size_t at = c * static_cast<std::size_t>(pairs) + static_cast<std::size_t>(k);
      if (map.has_amplitude()) map.amplitude[at] = std::sqrt(a * a + b * b + epsPool);
      if (map.has_phase()) map.phase[at] = phase(a, b);
    }
  }
}

}  // namespace

FeatureMap dense_extract(const LayerWeights& weights, const Image& image, int stride,
                         FeatureKind kind, double epsPool) {
  if (image.width() != image.height()) throw InvalidInput("dense extraction expects a square image");
  const int edge = weights.edge;
  if (static_cast<Eigen::Index>(edge) * edge != weights.W.cols()) {
    throw InvalidInput("layer weights do not operate on pixel patches");
  }
  const int g = grid_size(image.width(), edge, stride);

  Eigen::MatrixXd crops(weights.W.cols(), static_cast<Eigen::Index>(g) * g);
  for (int row = 0; row < g; ++row) {
    for (int col = 0; col < g; ++col) {
      auto column = crops.col(row * g + col);
      for (int y = 0; y < edge; ++y) {
        for (int x = 0; x < edge; ++x) column[y * edge + x] = image(col * stride + x, row * stride + y);
      }
      dataset::standardize(column);
    }
  }

  FeatureMap map;
  map.grid = g;
  map.channels = weights.pooled();
  map.kind = kind;
  fill_map(weights.W * crops, map, epsPool);
  return map;
}

Eigen::VectorXd window_vector(const FeatureMap& map, int row, int col, int windowCells) {
  if (!map.has_amplitude()) throw InvalidInput("window vectors need amplitude features");
  if (row < 0 || col < 0 || row + windowCells > map.grid || col + windowCells > map.grid) {
    throw InvalidInput("window outside feature map");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(windowCells) * windowCells * map.channels);
  Eigen::Index at = 0;
  for (int r = 0; r < windowCells; ++r) {
    for (int c = 0; c < windowCells; ++c) {
      for (const double value : map.amplitude_cell(row + r, col + c)) v[at++] = value;
    }
  }
  dataset::standardize(v);
  return v;
}

FeatureMap dense_extract_cells(const LayerWeights& layer2, const FeatureMap& layer1Map,
                               int windowCells, int strideCells, FeatureKind kind,
                               double epsPool) {
  const int g = grid_size(layer1Map.grid, windowCells, strideCells);
  const Eigen::Index inputDim = static_cast<Eigen::Index>(windowCells) * windowCells * layer1Map.channels;
  if (layer2.W.cols() != inputDim) throw InvalidInput("second layer does not match window geometry");

  Eigen::MatrixXd inputs(inputDim, static_cast<Eigen::Index>(g) * g);
  for (int row = 0; row < g; ++row) {
    for (int col = 0; col < g; ++col) {
      inputs.col(row * g + col) = window_vector(layer1Map, row * strideCells, col * strideCells, windowCells);
    }
  }
  FeatureMap map;
  map.grid = g;
  map.channels = layer2.pooled();
  map.kind = kind;
  fill_map(layer2.W * inputs, map, epsPool);
  return map;
}

std::vector<TrackSession> layer2_training_vectors(std::span<const TrackSession> sessions,
                                                  const LayerWeights& layer1, int k1,
                                                  double epsPool) {
  std::vector<TrackSession> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) {
    if (s.edge < layer1.edge || s.edge <= 0) {
      throw InvalidInput("session patches are smaller than the first-layer patch");
    }
    const int cells = grid_size(s.edge, layer1.edge, k1);
    TrackSession features;
    features.edge = 0;
    features.sourceId = s.sourceId;
    for (const auto& patch : s.patches) {
      const auto map = dense_extract(layer1, dataset::unflatten(patch, s.edge), k1,
                                     FeatureKind::Amplitude, epsPool);
      features.patches.push_back(window_vector(map, 0, 0, cells));
    }
    out.push_back(std::move(features));
  }
  return out;
}

int StackedModel::window_cells() const { return grid_size(layer2.edge, layer1.edge, k1); }

int StackedModel::representation_size() const {
  const int g1 = grid_size(kTemplateEdge, layer1.edge, k1);
  const int g2 = grid_size(g1, window_cells(), k2);
  return 2 * (g1 * g1 * layer1.pooled() + g2 * g2 * layer2.pooled());
}

void StackedModel::validate() const {
  layer1.validate();
  layer2.validate();
  if (static_cast<Eigen::Index>(layer1.edge) * layer1.edge != layer1.W.cols()) {
    throw InvalidInput("first layer input dimension must equal edge^2");
  }
  if (layer2.edge < layer1.edge) throw InvalidInput("second-layer patch edge smaller than first");
  const int w = window_cells();
  if (layer2.W.cols() != static_cast<Eigen::Index>(w) * w * layer1.pooled()) {
    throw InvalidInput("second layer input dimension does not match the first-layer map");
  }
  if (k2 < 1) throw InvalidInput("k2 must be >= 1");
  grid_size(grid_size(kTemplateEdge, layer1.edge, k1), w, k2);
}

Eigen::VectorXd tracking_representation(const Image& observation, const StackedModel& model) {
  if (observation.width() != kTemplateEdge || observation.height() != kTemplateEdge) {
    throw InvalidInput("observation must be 32 x 32");
  }
  const auto l1 = dense_extract(model.layer1, observation, model.k1, FeatureKind::Both, model.epsPool);
  const auto l2 = dense_extract_cells(model.layer2, l1, model.window_cells(), model.k2,
                                      FeatureKind::Both, model.epsPool);

  Eigen::VectorXd z(static_cast<Eigen::Index>(l1.amplitude.size() + l1.phase.size() +
                                              l2.amplitude.size() + l2.phase.size()));
  Eigen::Index at = 0;
  for (const auto* block : {&l1.amplitude, &l1.phase, &l2.amplitude, &l2.phase}) {
    for (const double v : *block) z[at++] = v;
  }
  return z;
}

}  // namespace slowtrack::stack

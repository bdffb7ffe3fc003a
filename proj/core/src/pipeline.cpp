#include "slowtrack/pipeline.hpp"

#include <string>

#include "slowtrack/errors.hpp"

namespace slowtrack::pipeline {

std::vector<TrackSession> synthetic_sessions(int edge, int count, int nF, double maxShift,
                                             double maxRotationDeg, std::uint64_t seed) {
  const auto bases = dataset::make_edge_patches(count, edge, seed);
  auto sessions = dataset::generate_synthetic_sessions(bases, nF, maxShift, maxRotationDeg, seed + 1);
  return dataset::standardize_sessions(std::move(sessions));
}

slowae::SlowCostConfig cost_config(const tracker::TrackerConfig& config, int layer) {
  const auto& l = layer == 1 ? config.layer1 : config.layer2;
  slowae::SlowCostConfig cost;
  cost.alpha = l.alpha;
  cost.gamma = l.gamma;
  cost.epsL1 = config.epsL1;
  cost.epsPool = config.epsPool;
  return cost;
}

namespace {

slowae::TrainConfig train_config(const tracker::TrackerConfig& config, int layer) {
  slowae::TrainConfig train;
  train.hidden = layer == 1 ? config.layer1.hidden : config.layer2.hidden;
  train.edge = layer == 1 ? config.layer1.edge : config.layer2.edge;
  train.initStd = config.initStd;
  train.optimizer = config.optimizer;
  return train;
}

void check_edge(std::span<const TrackSession> sessions, int edge, const char* what) {
  if (sessions.empty()) throw InvalidInput("no training sessions");
  for (const auto& s : sessions) {
    if (s.edge != edge) {
      throw InvalidInput(std::string(what) + " expects " + std::to_string(edge) + "x" +
                         std::to_string(edge) + " patches, got edge " + std::to_string(s.edge));
    }
  }
}

}  // namespace

slowae::TrainResult train_first_layer(std::span<const TrackSession> sessions,
                                      const tracker::TrackerConfig& config, std::uint64_t seed) {
  check_edge(sessions, config.layer1.edge, "first layer");
  return slowae::train_layer(sessions, cost_config(config, 1), train_config(config, 1), seed);
}

slowae::TrainResult train_second_layer(std::span<const TrackSession> sessions,
                                       const LayerWeights& layer1,
                                       const tracker::TrackerConfig& config, std::uint64_t seed) {
  check_edge(sessions, config.layer2.edge, "second layer");
  if (layer1.edge != config.layer1.edge) throw InvalidInput("first-layer weights do not match layer1.edge");
  const auto features = stack::layer2_training_vectors(sessions, layer1, config.k1, config.epsPool);
  return slowae::train_layer(features, cost_config(config, 2), train_config(config, 2), seed);
}

stack::StackedModel assemble(LayerWeights layer1, LayerWeights layer2,
                             const tracker::TrackerConfig& config) {
  if (layer1.edge != config.layer1.edge || layer2.edge != config.layer2.edge) {
    throw InvalidInput("weight patch sizes do not match the configured layer edges");
  }
  stack::StackedModel model;
  model.layer1 = std::move(layer1);
  model.layer2 = std::move(layer2);
  model.k1 = config.k1;
  model.k2 = config.k2;
  model.epsPool = config.epsPool;
  model.validate();
  return model;
}

}  // namespace slowtrack::pipeline

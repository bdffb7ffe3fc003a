#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slowtrack/dataset.hpp"
#include "slowtrack/slowae.hpp"
#include "slowtrack/stack.hpp"
#include "slowtrack/tracker.hpp"

namespace slowtrack::pipeline {

/// Standardized synthetic sessions built from random soft edges of the given size.
std::vector<TrackSession> synthetic_sessions(int edge, int count, int nF, double maxShift,
                                             double maxRotationDeg, std::uint64_t seed);

slowae::SlowCostConfig cost_config(const tracker::TrackerConfig& config, int layer);

/// Trains the first layer on image-space sessions whose edge matches layer1.edge.
slowae::TrainResult train_first_layer(std::span<const TrackSession> sessions,
                                      const tracker::TrackerConfig& config, std::uint64_t seed);

/// Maps image-space sessions of edge layer2.edge through `layer1` and trains the second
/// layer on the resulting window vectors.
slowae::TrainResult train_second_layer(std::span<const TrackSession> sessions,
                                       const LayerWeights& layer1,
                                       const tracker::TrackerConfig& config, std::uint64_t seed);

/// Checks both layers against the configured geometry and bundles them.
stack::StackedModel assemble(LayerWeights layer1, LayerWeights layer2,
                             const tracker::TrackerConfig& config);

}  // namespace slowtrack::pipeline

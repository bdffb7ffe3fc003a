#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "slowtrack/affine.hpp"
#include "slowtrack/image.hpp"
#include "slowtrack/obsmodel.hpp"
#include "slowtrack/optim.hpp"
#include "slowtrack/pfilter.hpp"
#include "slowtrack/random.hpp"
#include "slowtrack/stack.hpp"

namespace slowtrack::tracker {

struct LayerConfig {
  int edge = 8;
  int hidden = 64;
  double alpha = 100.0;
  double gamma = 20.0;
};

/// Every hyperparameter of offline feature learning and online tracking.
struct TrackerConfig {
  // Feature learning.
  LayerConfig layer1{8, 64, 100.0, 20.0};
  LayerConfig layer2{14, 128, 300.0, 20.0};
  int k1 = 6;
  int k2 = 2;
  double epsL1 = 1e-6;
  double epsPool = 1e-6;
  int sessions = 15000;       // N_T
  int framesPerSession = 5;   // N_F
  double initStd = 0.01;
  optim::OptimizerConfig optimizer;  // maxIter 200, history 10

  // Observational model.
  int jitter = 1;             // v
  double eta = 2.0;
  double varphi = 0.25;
  int firstPositives = 10;
  obsmodel::RetentionParams retention;
  obsmodel::UpdateSchedule schedule;
  obsmodel::ClassifierOptions classifier;

  // Particle filter.
  int particles = 1000;
  pfilter::DynamicModel dynamics;
  /// Particle weights are exp(likelihoodScale * f). 1 is the plain exp(f) likelihood.
  double likelihoodScale = 1.0;

  int threads = 1;
  bool checkInvariants = false;

  void validate() const;
};

struct FrameRecord {
  int frame = 0;
  AffineState state;
  double maxProb = 0.0;
  bool retrained = false;
  double seconds = 0.0;
};

struct TrackResult {
  std::vector<FrameRecord> frames;

  std::vector<Box> boxes() const;
};

/// One single-target tracking run. The random stream is consumed in a fixed order per
/// frame (propagation, negative sampling, resampling), so identical inputs and seed give
/// identical trajectories.
class Tracker {
 public:
  Tracker(TrackerConfig config, stack::StackedModel model, std::uint64_t seed);

  /// Collects first-frame samples, trains the classifier and seeds the particle set.
  FrameRecord initialize(const Image& frame, const Box& initBox);

  /// Processes the next frame and returns its estimate.
  FrameRecord step(const Image& frame);

  bool initialized() const noexcept { return frameIndex_ > 0; }
  int frame_index() const noexcept { return frameIndex_; }
  int frames_since_update() const noexcept { return framesSinceUpdate_; }
  const obsmodel::TrainingSet& training_set() const noexcept { return trainingSet_; }
  const obsmodel::Classifier& classifier() const noexcept { return classifier_; }
  const pfilter::ParticleSet& particles() const noexcept { return particles_; }
  const obsmodel::Featurizer& featurizer() const noexcept { return featurize_; }

 private:
  void retrain();

  TrackerConfig config_;
  stack::StackedModel model_;
  Rng rng_;
  obsmodel::Featurizer featurize_;
  obsmodel::TrainingSet trainingSet_;
  obsmodel::Classifier classifier_;
  pfilter::ParticleSet particles_;
  int frameIndex_ = 0;
  int framesSinceUpdate_ = 0;
  int width_ = 0;
  int height_ = 0;
};

struct RunOptions {
  /// Writes frame_{index:05}.png with the estimated box drawn when set.
  std::optional<std::filesystem::path> overlayDir;
  std::function<void(const FrameRecord&, int totalFrames)> progress;
};

TrackResult run(std::span<const Image> frames, const Box& initBox, const TrackerConfig& config,
                const stack::StackedModel& model, std::uint64_t seed, const RunOptions& options = {});

TrackResult run(const std::filesystem::path& sequenceDir, const Box& initBox,
                const TrackerConfig& config, const stack::StackedModel& model, std::uint64_t seed,
                const RunOptions& options = {});

/// Draws a one-pixel box outline (value 1 outside-in, 0 inside) onto a copy of `frame`.
Image draw_box(const Image& frame, const Box& box);

/// Columns: frame, x, y, w, h, max_prob, retrained. Wall time is not written so that
/// identical runs give identical files.
void write_results_csv(const TrackResult& result, const std::filesystem::path& path);

/// Predicted boxes of a results CSV in frame order.
std::vector<Box> read_result_boxes(const std::filesystem::path& path);

}  // namespace slowtrack::tracker

#include "slowtrack/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "slowtrack/errors.hpp"

namespace slowtrack::tracker {

void TrackerConfig::validate() const {
  for (const auto* layer : {&layer1, &layer2}) {
    if (layer->edge < 2 || layer->hidden < 2 || layer->hidden % 2 != 0) {
      throw InvalidInput("layer edge must be >= 2 and hidden count even");
    }
    if (!(layer->alpha >= 0.0) || !(layer->gamma >= 0.0)) throw InvalidInput("alpha, gamma must be >= 0");
  }
  if (layer2.edge < layer1.edge) throw InvalidInput("layer-2 patch must not be smaller than layer-1 patch");
  if (k1 < 1 || k2 < 1) throw InvalidInput("strides must be >= 1");
  if (!(epsL1 > 0.0 && epsL1 <= 1e-3) || !(epsPool > 0.0 && epsPool <= 1e-3)) {
    throw InvalidInput("smoothing constants must be in (0, 1e-3]");
  }
  if (sessions < 1 || framesPerSession < 2) throw InvalidInput("need >= 1 session of >= 2 frames");
  if (!(initStd > 0.0)) throw InvalidInput("init_std must be > 0");
  if (optimizer.maxIter < 0 || optimizer.history < 1) throw InvalidInput("bad optimizer settings");
  if (jitter < 0) throw InvalidInput("v must be >= 0");
  if (!(eta > 0.0) || !(varphi >= 0.0)) throw InvalidInput("eta must be > 0 and varphi >= 0");
  if (!(likelihoodScale > 0.0) || !std::isfinite(likelihoodScale)) {
    throw InvalidInput("likelihood scale must be positive and finite");
  }
  if (firstPositives < 1 || particles < 1 || threads < 1) throw InvalidInput("counts must be >= 1");
  if (!(classifier.lambda >= 0.0) || classifier.maxIter < 1) throw InvalidInput("bad classifier settings");
  retention.validate();
  schedule.validate();
  dynamics.validate();
  if (!(dynamics.variance[0] > 0.0) || !(dynamics.variance[1] > 0.0)) {
    throw InvalidInput("translation variances must be > 0 for negative sampling");
  }
}

std::vector<Box> TrackResult::boxes() const {
  std::vector<Box> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.state.box());
  return out;
}

Tracker::Tracker(TrackerConfig config, stack::StackedModel model, std::uint64_t seed)
    : config_(std::move(config)),
      model_(std::move(model)),
      rng_(seed),
      trainingSet_(config_.retention) {
  config_.validate();
  model_.validate();
  featurize_ = [model = &model_](const Image& frame, const AffineState& state) {
    return stack::tracking_representation(crop_and_warp(frame, state), *model);
  };
}

void Tracker::retrain() {
  const auto samples = trainingSet_.samples();
  classifier_ = obsmodel::train_classifier(samples, config_.classifier, frameIndex_,
                                           classifier_.w.size() > 0 ? &classifier_.w : nullptr);
  framesSinceUpdate_ = 0;
}

FrameRecord Tracker::initialize(const Image& frame, const Box& initBox) {
  if (initialized()) throw InvalidState("tracker already initialized");
  const auto started = std::chrono::steady_clock::now();
  AffineState target = AffineState::from_box(initBox);
  if (initBox.x < 0.0 || initBox.y < 0.0 || initBox.x + initBox.w > frame.width() ||
      initBox.y + initBox.h > frame.height()) {
    throw InvalidInput("initial box lies outside the first frame");
  }
  width_ = frame.width();
  height_ = frame.height();
  frameIndex_ = 1;

  auto positives = obsmodel::first_frame_positives(target, config_.jitter, config_.firstPositives,
                                                   rng_, frame, featurize_, 1);
  auto negatives = obsmodel::collect_negatives(
      target, config_.dynamics.sigma_x(), config_.dynamics.sigma_y(), config_.varphi, config_.eta,
      config_.retention.negativesPerFrame, rng_, frame, featurize_, 1);
  trainingSet_.update(1, std::move(positives.samples), std::move(negatives.samples));
  retrain();
  particles_ = pfilter::ParticleSet::uniform(target, config_.particles);

  FrameRecord record;
  record.frame = 1;
  record.state = target;
  record.maxProb = obsmodel::predict(classifier_, featurize_(frame, target));
  record.retrained = true;
  record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

FrameRecord Tracker::step(const Image& frame) {
  if (!initialized()) throw InvalidState("tracker not initialized");
  if (frame.width() != width_ || frame.height() != height_) throw InvalidInput("frame size changed");
  const auto started = std::chrono::steady_clock::now();
  const int t = ++frameIndex_;

  particles_ = pfilter::propagate(particles_, config_.dynamics, rng_);
  const auto margins = pfilter::margins(particles_, frame, featurize_, classifier_, config_.threads);
  std::vector<double> scores(margins.size());
  std::transform(margins.begin(), margins.end(), scores.begin(), obsmodel::sigmoid);
  std::vector<double> exponents(scores.size());
  std::transform(scores.begin(), scores.end(), exponents.begin(),
                 [k = config_.likelihoodScale](double f) { return k * f; });
  particles_ = pfilter::weigh(particles_, exponents);
  const std::size_t best = pfilter::best_index(margins);
  const AffineState estimate = particles_.states[best];
  const double maxProb = scores[best];

  std::vector<obsmodel::Sample> positive{{featurize_(frame, estimate), +1, t}};
  auto negatives = obsmodel::collect_negatives(
      estimate, config_.dynamics.sigma_x(), config_.dynamics.sigma_y(), config_.varphi, config_.eta,
      config_.retention.negativesPerFrame, rng_, frame, featurize_, t);
  trainingSet_.update(t, std::move(positive), std::move(negatives.samples));
  if (config_.checkInvariants && !trainingSet_.satisfies_windows()) {
    throw InvalidState("training-set retention windows violated at frame " + std::to_string(t));
  }

  ++framesSinceUpdate_;
  const bool retrained = obsmodel::should_retrain(config_.schedule, t, framesSinceUpdate_, maxProb);
  if (retrained) retrain();

  particles_ = pfilter::resample(particles_, rng_);

  FrameRecord record;
  record.frame = t;
  record.state = estimate;
  record.maxProb = maxProb;
  record.retrained = retrained;
  record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

Image draw_box(const Image& frame, const Box& box) {
  Image out = frame;
  const int x0 = static_cast<int>(std::lround(box.x));
  const int y0 = static_cast<int>(std::lround(box.y));
  const int x1 = static_cast<int>(std::lround(box.x + box.w)) - 1;
  const int y1 = static_cast<int>(std::lround(box.y + box.h)) - 1;
  const auto plot = [&](int x, int y, double v) {
    if (out.contains(x, y)) out(x, y) = v;
  };
  for (int x = x0; x <= x1; ++x) {
    plot(x, y0, 1.0);
    plot(x, y1, 1.0);
    plot(x, y0 + 1, 0.0);
    plot(x, y1 - 1, 0.0);
  }
  for (int y = y0; y <= y1; ++y) {
    plot(x0, y, 1.0);
    plot(x1, y, 1.0);
    plot(x0 + 1, y, 0.0);
    plot(x1 - 1, y, 0.0);
  }
  return out;
}

TrackResult run(std::span<const Image> frames, const Box& initBox, const TrackerConfig& config,
                const stack::StackedModel& model, std::uint64_t seed, const RunOptions& options) {
  if (frames.empty()) throw InvalidInput("empty sequence");
  if (options.overlayDir) std::filesystem::create_directories(*options.overlayDir);

  Tracker tracker(config, model, seed);
  TrackResult result;
  const int total = static_cast<int>(frames.size());
  for (int i = 0; i < total; ++i) {
    const Image& frame = frames[static_cast<std::size_t>(i)];
    FrameRecord record = i == 0 ? tracker.initialize(frame, initBox) : tracker.step(frame);
    if (options.overlayDir) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%05d.png", record.frame);
      save_png(draw_box(frame, record.state.box()), *options.overlayDir / name);
    }
    if (options.progress) options.progress(record, total);
    result.frames.push_back(record);
  }
  return result;
}

TrackResult run(const std::filesystem::path& sequenceDir, const Box& initBox,
                const TrackerConfig& config, const stack::StackedModel& model, std::uint64_t seed,
                const RunOptions& options) {
  const auto frames = load_sequence(sequenceDir);
  return run(frames, initBox, config, model, seed, options);
}

void write_results_csv(const TrackResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "frame,x,y,w,h,max_prob,retrained\n";
  char line[256];
  for (const auto& f : result.frames) {
    const Box b = f.state.box();
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%.9f,%d\n", f.frame, b.x, b.y, b.w, b.h,
                  f.maxProb, f.retrained ? 1 : 0);
    out << line;
  }
}

std::vector<Box> read_result_boxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("frame,", 0) != 0) {
    throw FormatError("results file lacks header: " + path.string());
  }
  std::vector<Box> boxes;
  int lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(fields, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("non-numeric field on line " + std::to_string(lineNo) + " of " + path.string());
      }
    }
    if (values.size() < 5) throw FormatError("short line " + std::to_string(lineNo) + " in " + path.string());
    boxes.push_back({values[1], values[2], values[3], values[4]});
  }
  return boxes;
}

}  // namespace slowtrack::tracker

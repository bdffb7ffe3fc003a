#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "slowtrack/config.hpp"
#include "slowtrack/dataset.hpp"
#include "slowtrack/errors.hpp"
#include "slowtrack/eval.hpp"
#include "slowtrack/pipeline.hpp"
#include "slowtrack/synthetic.hpp"
#include "slowtrack/tracker.hpp"
#include "slowtrack/viz.hpp"

namespace fs = std::filesystem;
using namespace slowtrack;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

struct CliError {
  int exit;
  std::string code;
  std::string message;
};

[[noreturn]] void fail(int exit, std::string code, std::string message) {
  throw CliError{exit, std::move(code), std::move(message)};
}

void report(const CliError& e) {
  std::string msg = e.message;
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  std::replace(msg.begin(), msg.end(), '"', '\'');
  std::cerr << "slowtrack: error=" << e.code << " exit=" << e.exit << " msg=\"" << msg << "\"\n";
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) fail(kUsage, "file-not-found", what + " not found: " + path.string());
}

config::RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  require_file(path, "config");
  auto cfg = config::load(path);
  return cfg;
}

int thread_count(int configured) {
  if (const char* env = std::getenv("SLOWTRACK_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) fail(kUsage, "bad-env", "SLOWTRACK_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return configured;
}

Box parse_box(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  Box b;
  std::string rest;
  if (!(in >> b.x >> b.y >> b.w >> b.h) || (in >> rest) || !(b.w > 0.0) || !(b.h > 0.0)) {
    fail(kUsage, "bad-box", "expected x,y,w,h with positive size, got '" + text + "'");
  }
  return b;
}

// ---------------------------------------------------------------------------

struct CollectArgs {
  std::vector<std::string> sequences;
  bool synthetic = false;
  std::string out;
  std::string config;
  int edge = 0;
  int sessions = 0;
  std::optional<std::uint64_t> seed;
};

int cmd_collect(const CollectArgs& a) {
  const auto cfg = load_config(a.config);
  const std::uint64_t seed = a.seed.value_or(cfg.seed);
  const int edge = a.edge > 0 ? a.edge : cfg.tracker.layer1.edge;
  const int total = a.sessions > 0 ? a.sessions : cfg.tracker.sessions;
  const int nF = cfg.tracker.framesPerSession;
  if (a.synthetic == !a.sequences.empty()) {
    fail(kUsage, "usage", "give either --synthetic or one or more sequence directories");
  }

  std::vector<TrackSession> sessions;
  if (a.synthetic) {
    sessions = pipeline::synthetic_sessions(edge, total, nF, cfg.dataset.maxShift,
                                            cfg.dataset.maxRotationDeg, seed);
  } else {
    const int n = static_cast<int>(a.sequences.size());
    for (int i = 0; i < n; ++i) {
      const fs::path dir = a.sequences[static_cast<std::size_t>(i)];
      if (!fs::is_directory(dir)) fail(kUsage, "file-not-found", "sequence directory not found: " + dir.string());
      const auto frames = load_sequence(dir);
      const auto mask = dataset::accumulate_difference_mask(frames, cfg.dataset.diffThreshold,
                                                            cfg.dataset.minComponentArea);
      const int share = total / n + (i < total % n ? 1 : 0);
      auto result = dataset::sample_track_sessions(frames, mask, edge, share, nF,
                                                   seed ^ static_cast<std::uint64_t>(i),
                                                   dir.filename().string());
      if (result.noInterest) std::cerr << "slowtrack: warning: no moving region in " << dir.string() << "\n";
      for (auto& s : result.sessions) sessions.push_back(std::move(s));
    }
  }
  if (sessions.empty()) fail(kData, "no-sessions", "no usable track sessions were collected");
  dataset::export_sessions(sessions, a.out);
  std::cout << "sessions=" << sessions.size() << " edge=" << edge << " frames=" << nF << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  int layer = 1;
  std::string sessions;
  std::string out;
  std::string layer1;
  std::string config;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  const auto cfg = load_config(a.config);
  const std::uint64_t seed = a.seed.value_or(cfg.seed);
  require_file(a.sessions, "sessions file");
  const auto sessions = dataset::import_sessions(a.sessions);

  slowae::TrainResult result;
  if (a.layer == 1) {
    result = pipeline::train_first_layer(sessions, cfg.tracker, seed);
  } else {
    const fs::path l1 = !a.layer1.empty() ? fs::path(a.layer1) : cfg.paths.layer1Weights;
    if (l1.empty() || !fs::is_regular_file(l1)) {
      fail(kUsage, "layer1-weights-missing", "layer-2 training needs trained layer-1 weights (--layer1)");
    }
    const auto w1 = slowae::load_weights(l1);
    result = pipeline::train_second_layer(sessions, w1.weights, cfg.tracker, seed);
  }
  if (!result.weights.W.allFinite()) fail(kNumerical, "numerical-failure", "training produced non-finite weights");
  slowae::save_weights(a.out, result.weights, pipeline::cost_config(cfg.tracker, a.layer));
  if (result.warning) std::cerr << "slowtrack: warning: " << result.message << "\n";
  std::printf("layer=%d initial_cost=%.9g final_cost=%.9g iterations=%d\n", a.layer,
              result.initialCost, result.finalCost, result.iterations);
  return kOk;
}

// ---------------------------------------------------------------------------

struct VisualizeArgs {
  std::string layer1;
  std::string layer2;
  std::string out;
  std::string config;
  int pairs = 16;
};

stack::StackedModel load_model(const config::RunConfig& cfg, std::string l1, std::string l2) {
  const fs::path p1 = !l1.empty() ? fs::path(l1) : cfg.paths.layer1Weights;
  const fs::path p2 = !l2.empty() ? fs::path(l2) : cfg.paths.layer2Weights;
  if (p1.empty() || !fs::is_regular_file(p1)) fail(kUsage, "layer1-weights-missing", "layer-1 weights not found");
  if (p2.empty() || !fs::is_regular_file(p2)) fail(kUsage, "layer2-weights-missing", "layer-2 weights not found");
  auto w1 = slowae::load_weights(p1);
  auto w2 = slowae::load_weights(p2);
  try {
    return pipeline::assemble(std::move(w1.weights), std::move(w2.weights), cfg.tracker);
  } catch (const InvalidInput& e) {
    fail(kData, "geometry-mismatch", e.what());
  }
}

std::vector<int> first_pairs(int available, int requested) {
  std::vector<int> out;
  for (int i = 0; i < std::min(available, requested); ++i) out.push_back(i);
  return out;
}

int cmd_visualize(const VisualizeArgs& a) {
  const auto cfg = load_config(a.config);
  fs::create_directories(a.out);
  viz::RenderOptions options;
  if (a.layer2.empty() && cfg.paths.layer2Weights.empty()) {
    const fs::path p1 = !a.layer1.empty() ? fs::path(a.layer1) : cfg.paths.layer1Weights;
    if (p1.empty() || !fs::is_regular_file(p1)) fail(kUsage, "layer1-weights-missing", "layer-1 weights not found");
    stack::StackedModel model;
    model.layer1 = slowae::load_weights(p1).weights;
    const auto pairs = first_pairs(model.layer1.pooled(), a.pairs);
    viz::render_grid(model, 1, pairs, options, fs::path(a.out) / "stimuli_layer1.png");
    std::cout << "wrote " << (fs::path(a.out) / "stimuli_layer1.png").string() << "\n";
    return kOk;
  }
  const auto model = load_model(cfg, a.layer1, a.layer2);
  for (int layer : {1, 2}) {
    const int available = layer == 1 ? model.layer1.pooled() : model.layer2.pooled();
    const fs::path png = fs::path(a.out) / ("stimuli_layer" + std::to_string(layer) + ".png");
    viz::render_grid(model, layer, first_pairs(available, a.pairs), options, png);
    std::cout << "wrote " << png.string() << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrackArgs {
  std::string sequence;
  std::string init;
  std::string layer1;
  std::string layer2;
  std::string config;
  std::string out;
  bool overlays = false;
  bool quiet = false;
  std::optional<std::uint64_t> seed;
};

int cmd_track(const TrackArgs& a) {
  auto cfg = load_config(a.config);
  cfg.tracker.threads = thread_count(cfg.tracker.threads);
  const std::uint64_t seed = a.seed.value_or(cfg.seed);
  const Box init = parse_box(a.init);
  if (!fs::is_directory(a.sequence)) fail(kUsage, "file-not-found", "sequence directory not found: " + a.sequence);
  const auto model = load_model(cfg, a.layer1, a.layer2);
  fs::create_directories(a.out);

  tracker::RunOptions options;
  if (a.overlays) options.overlayDir = fs::path(a.out) / "overlays";
  if (!a.quiet) {
    options.progress = [](const tracker::FrameRecord& r, int total) {
      if (r.frame % 25 == 0 || r.frame == total) {
        std::cerr << "frame " << r.frame << "/" << total << " p=" << r.maxProb << "\n";
      }
    };
  }
  const auto result = tracker::run(fs::path(a.sequence), init, cfg.tracker, model, seed, options);
  const fs::path csv = fs::path(a.out) / "results.csv";
  tracker::write_results_csv(result, csv);
  std::cout << "frames=" << result.frames.size() << " results=" << csv.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> results;
  std::string groundTruth;
  std::string out;
  int trials = 0;
};

int cmd_eval(const EvalArgs& a) {
  if (a.trials > 0 && static_cast<int>(a.results.size()) != a.trials) {
    fail(kUsage, "trial-count", "--trials " + std::to_string(a.trials) + " but " +
                                    std::to_string(a.results.size()) + " result files given");
  }
  require_file(a.groundTruth, "ground truth");
  const auto gt = eval::load_ground_truth(a.groundTruth);

  std::vector<std::vector<Box>> runs;
  std::vector<eval::TrialMetrics> metrics;
  for (const auto& path : a.results) {
    require_file(path, "results file");
    auto boxes = tracker::read_result_boxes(path);
    if (boxes.size() != gt.size()) {
      fail(kData, "length-mismatch", path + " has " + std::to_string(boxes.size()) +
                                         " frames, ground truth has " + std::to_string(gt.size()));
    }
    metrics.push_back({eval::success_rate(boxes, gt), eval::col_error(boxes, gt).mean});
    runs.push_back(std::move(boxes));
  }
  const std::size_t pick = eval::median_trial(metrics);
  fs::create_directories(a.out);
  eval::emit_report(runs[pick], gt, fs::path(a.out) / "report.csv", fs::path(a.out) / "col.png");

  std::ofstream summary(fs::path(a.out) / "summary.txt", std::ios::trunc);
  char line[256];
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    std::snprintf(line, sizeof(line), "trial=%zu sr=%.1f col=%.3f%s\n", i, metrics[i].successRate,
                  metrics[i].meanCol, i == pick ? " median" : "");
    summary << line;
    std::cout << line;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_synth_sequence(const synthetic::SquareScenario& s, const std::string& out) {
  synthetic::write_sequence(synthetic::moving_square(s), out);
  const Box first{s.startX, s.startY, static_cast<double>(s.side), static_cast<double>(s.side)};
  std::printf("frames=%d init=%g,%g,%g,%g\n", s.frames, first.x, first.y, first.w, first.h);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slow-feature particle-filter tracker"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "slowtrack 0.1.0");

  CollectArgs collect;
  auto* c = app.add_subcommand("collect", "Build a track-session file from sequences or synthetic edges");
  c->add_option("sequences", collect.sequences, "Sequence directories");
  c->add_flag("--synthetic", collect.synthetic, "Generate synthetic translating-edge sessions");
  c->add_option("--out,-o", collect.out, "Output session file")->required();
  c->add_option("--config,-c", collect.config, "INI configuration");
  c->add_option("--edge", collect.edge, "Patch edge (default layer1.edge)")->check(CLI::PositiveNumber);
  c->add_option("--sessions,-n", collect.sessions, "Session count (default dataset.sessions)")
      ->check(CLI::PositiveNumber);
  c->add_option("--seed", collect.seed, "Random seed");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train one slow autoencoder layer");
  t->add_option("--layer", train.layer, "Layer to train")->required()->check(CLI::IsMember({1, 2}));
  t->add_option("--sessions,-s", train.sessions, "Session file")->required();
  t->add_option("--out,-o", train.out, "Output weight file")->required();
  t->add_option("--layer1", train.layer1, "Layer-1 weights (layer 2 only)");
  t->add_option("--config,-c", train.config, "INI configuration");
  t->add_option("--seed", train.seed, "Random seed");

  VisualizeArgs vis;
  auto* v = app.add_subcommand("visualize", "Render phase-shifted optimal stimuli");
  v->add_option("--layer1", vis.layer1, "Layer-1 weights");
  v->add_option("--layer2", vis.layer2, "Layer-2 weights");
  v->add_option("--out,-o", vis.out, "Output directory")->required();
  v->add_option("--config,-c", vis.config, "INI configuration");
  v->add_option("--pairs", vis.pairs, "Pooled units per layer to render")->check(CLI::PositiveNumber);

  TrackArgs track;
  auto* k = app.add_subcommand("track", "Track one target through an image sequence");
  k->add_option("--sequence", track.sequence, "Frame directory")->required();
  k->add_option("--init", track.init, "Initial box x,y,w,h")->required();
  k->add_option("--layer1", track.layer1, "Layer-1 weights");
  k->add_option("--layer2", track.layer2, "Layer-2 weights");
  k->add_option("--config,-c", track.config, "INI configuration");
  k->add_option("--out,-o", track.out, "Output directory")->required();
  k->add_option("--seed", track.seed, "Random seed");
  k->add_flag("--overlays", track.overlays, "Write frame_NNNNN.png overlays");
  k->add_flag("--quiet,-q", track.quiet, "No progress output");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score tracking results against ground truth");
  e->add_option("--results,-r", ev.results, "results.csv of each trial")->required();
  e->add_option("--ground-truth,-g", ev.groundTruth, "Ground truth file")->required();
  e->add_option("--out,-o", ev.out, "Report directory")->required();
  e->add_option("--trials", ev.trials, "Expected number of trials")->check(CLI::PositiveNumber);

  synthetic::SquareScenario square;
  std::string squareOut;
  auto* s = app.add_subcommand("synth-sequence", "Write a moving-square sequence with ground truth");
  s->add_option("--out,-o", squareOut, "Output directory")->required();
  s->add_option("--frames", square.frames, "Frame count")->check(CLI::PositiveNumber);
  s->add_option("--width", square.width, "Frame width")->check(CLI::PositiveNumber);
  s->add_option("--height", square.height, "Frame height")->check(CLI::PositiveNumber);
  s->add_option("--side", square.side, "Square side")->check(CLI::PositiveNumber);
  s->add_option("--vx", square.vx, "Horizontal speed (px/frame)");
  s->add_option("--vy", square.vy, "Vertical speed (px/frame)");
  s->add_option("--x0", square.startX, "Initial left edge");
  s->add_option("--y0", square.startY, "Initial top edge");
  s->add_option("--noise", square.noiseStd, "Gaussian noise stddev")->check(CLI::NonNegativeNumber);
  s->add_option("--seed", square.seed, "Noise seed");

  std::string configOut;
  auto* d = app.add_subcommand("config", "Print the default configuration");
  d->add_option("--out,-o", configOut, "Write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::CallForVersion& version) {
    return app.exit(version);
  } catch (const CLI::ParseError& err) {
    report({kUsage, "usage", err.what()});
    return kUsage;
  }

  try {
    if (*c) return cmd_collect(collect);
    if (*t) return cmd_train(train);
    if (*v) return cmd_visualize(vis);
    if (*k) return cmd_track(track);
    if (*e) return cmd_eval(ev);
    if (*s) return cmd_synth_sequence(square, squareOut);
    if (*d) {
      const std::string text = config::format(config::RunConfig{});
      if (configOut.empty()) {
        std::cout << text;
      } else {
        std::ofstream(configOut) << text;
      }
      return kOk;
    }
  } catch (const CliError& err) {
    report(err);
    return err.exit;
  } catch (const FormatError& err) {
    report({kData, "format-error", err.what()});
    return kData;
  } catch (const NumericalError& err) {
    report({kNumerical, "numerical-failure", err.what()});
    return kNumerical;
  } catch (const InvalidInput& err) {
    report({kData, "invalid-input", err.what()});
    return kData;
  } catch (const std::exception& err) {
    report({kData, "io-error", err.what()});
    return kData;
  }
  return kUsage;
}

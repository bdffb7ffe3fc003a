// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "slowtrack/config.hpp"
#include "slowtrack/eval.hpp"
#include "slowtrack/obsmodel.hpp"
#include "slowtrack/pipeline.hpp"
#include "slowtrack/slowae.hpp"
#include "slowtrack/stack.hpp"
#include "slowtrack/synthetic.hpp"
#include "slowtrack/tracker.hpp"
#include "slowtrack/viz.hpp"
#include "test_support.hpp"

namespace st = slowtrack;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------------------

double scalar_cost(const MatrixXd& W, const std::vector<st::TrackSession>& sessions,
                   const st::slowae::SlowCostConfig& c) {
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
        for (std::size_t k = 0; k < h.size(); ++k) slow += std::sqrt((h[k] - h2[k]) * (h[k] - h2[k]) + c.epsL1);
      }
    }
  }
  return rec + c.alpha * slow + c.gamma * sparse;
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const double combos[4][2] = {{0, 0}, {100, 0}, {0, 20}, {100, 20}};
  constexpr double h = 1e-6;
  int checked = 0, bad = 0;
  double worst = 0.0;
  for (const auto& combo : combos) {
    st::slowae::SlowCostConfig c;
    c.alpha = combo[0];
    c.gamma = combo[1];
    for (int instance = 0; instance < 20; ++instance) {
      const auto sessions = st::testing::random_sessions(3, 3, 6, 500 + instance);
      const MatrixXd W = st::testing::random_matrix(4, 6, 900 + instance, 0.5);
      st::LayerWeights l;
      l.W = W;
      const MatrixXd g = st::slowae::gradient(l, sessions, c);
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 6; ++j) {
          MatrixXd plus = W, minus = W;
          plus(i, j) += h;
          minus(i, j) -= h;
          const double fd = (scalar_cost(plus, sessions, c) - scalar_cost(minus, sessions, c)) / (2 * h);
          const double tol = std::max(1e-6, 1e-4 * std::abs(g(i, j)));
          worst = std::max(worst, std::abs(g(i, j) - fd) / tol);
          bad += std::abs(g(i, j) - fd) > tol;
          ++checked;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 10.0,
          fmt("%d entries over 4 penalty combinations x 20 instances, %d outside tolerance, worst error/tol %.3f, %.2f s",
              checked, bad, worst, secs)};
}

// ---------------------------------------------------------------------------------------

Outcome pooling_invariance() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  double worstAmp = 0.0, worstPhase = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const double a = normal(rng), b = normal(rng), th = angle(rng);
    VectorXd v(2), r(2);
    v << a, b;
    r << std::cos(th) * a - std::sin(th) * b, std::sin(th) * a + std::cos(th) * b;
    worstAmp = std::max(worstAmp, std::abs(st::slowae::pool_activations(v, 1e-6)[0] -
                                           st::slowae::pool_activations(r, 1e-6)[0]));
    const double shift = st::stack::phase(r[0], r[1]) - st::stack::phase(a, b) - th;
    worstPhase = std::max(worstPhase, std::abs(std::remainder(shift, 2 * std::numbers::pi)));
  }
  return {worstAmp < 1e-10 && worstPhase < 1e-9,
          fmt("1e5 triples: max amplitude change %.3g, max phase error %.3g rad", worstAmp, worstPhase)};
}

// ---------------------------------------------------------------------------------------

Outcome slowness_efficacy() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto train = st::pipeline::synthetic_sessions(8, 2000, 5, 1.5, 8.0, 31);
  const auto heldOut = st::pipeline::synthetic_sessions(8, 500, 5, 1.5, 8.0, 32);
  st::slowae::TrainConfig tc;
  tc.hidden = 64;
  tc.optimizer.maxIter = 200;
  st::slowae::SlowCostConfig slow;
  slow.alpha = 100.0;
  slow.gamma = 20.0;
  st::slowae::SlowCostConfig plain = slow;
  plain.alpha = 0.0;
  const auto a = st::slowae::train_layer(train, slow, tc, 7);
  const auto b = st::slowae::train_layer(train, plain, tc, 7);
  const double dSlow = st::slowae::mean_temporal_difference(a.weights, heldOut, slow.epsPool);
  const double dPlain = st::slowae::mean_temporal_difference(b.weights, heldOut, plain.epsPool);
  const double ratio = dSlow / dPlain;
  const double secs = seconds_since(t0);
  return {ratio <= 0.7 && secs < 300.0,
          fmt("held-out temporal amplitude difference %.4g (alpha=100) vs %.4g (alpha=0), ratio %.3f, %.1f s",
              dSlow, dPlain, ratio, secs)};
}

// ---------------------------------------------------------------------------------------

Outcome class_weighting_equivalence() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<st::obsmodel::Sample> base;
  for (int i = 0; i < 200; ++i) {
    const int label = i < 20 ? 1 : -1;
    VectorXd z(5);
    for (int d = 0; d < 5; ++d) z[d] = n(rng) + (d < 2 ? 0.8 * label : 0.0);
    base.push_back({z, label, 1});
  }
  std::vector<const st::obsmodel::Sample*> weighted, duplicated;
  for (const auto& s : base) {
    weighted.push_back(&s);
    for (int k = 0; k < (s.label == 1 ? 9 : 1); ++k) duplicated.push_back(&s);
  }
  st::obsmodel::ClassifierOptions o;
  o.maxIter = 5000;
  o.gradientTolerance = 1e-13;
  auto plain = o;
  plain.weighting = st::obsmodel::ClassWeighting::None;
  const auto a = st::obsmodel::train_classifier(weighted, o);
  const auto b = st::obsmodel::train_classifier(duplicated, plain);
  const double diff = (a.w - b.w).norm();
  return {diff < 1e-5, fmt("D+=20, D-=180 weighted vs positives x9 unweighted: |dw| = %.3g", diff)};
}

// ---------------------------------------------------------------------------------------

Outcome retention_replay() {
  st::obsmodel::TrainingSet set({15, 55, 15, 25});
  std::vector<int> permanent;
  std::deque<int> pos, neg;
  const auto samples = [](int count, int label, int t) {
    return std::vector<st::obsmodel::Sample>(static_cast<std::size_t>(count), {VectorXd::Zero(1), label, t});
  };
  int mismatches = 0;
  bool at100 = false;
  for (int t = 1; t <= 200; ++t) {
    set.update(t, samples(t == 1 ? 10 : 1, 1, t), samples(25, -1, t));
    if (t <= 15) {
      permanent.push_back(t);
    } else {
      pos.push_back(t);
      neg.push_back(t);
      if (pos.size() > 55) pos.pop_front();
      if (neg.size() > 15) neg.pop_front();
    }
    if (t < 2) continue;
    std::vector<int> expectPos = permanent, expectNeg = permanent;
    expectPos.insert(expectPos.end(), pos.begin(), pos.end());
    expectNeg.insert(expectNeg.end(), neg.begin(), neg.end());
    mismatches += set.positive_frames() != expectPos;
    mismatches += set.negative_frames() != expectNeg;
    mismatches += set.negative_count() != expectNeg.size() * 25;
    if (t == 100) {
      std::vector<int> frames;
      for (int f = 1; f <= 15; ++f) frames.push_back(f);
      for (int f = 46; f <= 100; ++f) frames.push_back(f);
      at100 = set.positive_frames() == frames && set.negative_count() == 750;
    }
  }
  return {mismatches == 0 && at100,
          fmt("t=2..200 replay vs window oracle: %d mismatches; final positive frames %zu, negatives %zu",
              mismatches, set.positive_frames().size(), set.negative_count())};
}

// ---------------------------------------------------------------------------------------

Outcome negative_geometry() {
  st::Rng rng(6);
  const double sx = 2.0, sy = 2.0, eta = 2.0, varphi = 0.25;
  const st::AffineState target{400.0, 300.0, 1.25, 0.8};
  const st::Image frame(800, 600);
  const st::obsmodel::Featurizer none = [](const st::Image&, const st::AffineState&) { return VectorXd::Zero(1); };
  int violations = 0;
  // Collected crops sit exactly at target + offset for the same random stream.
  st::Rng replay(7);
  const auto draws = st::obsmodel::draw_negative_offsets(target.width(), target.height(), sx, sy, varphi, eta, 200, replay);
  st::Rng live(7);
  const auto collected = st::obsmodel::collect_negatives(target, sx, sy, varphi, eta, 200, live, frame, none, 2);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    violations += collected.states[i].x != target.x + draws[i].offset[0];
    violations += collected.states[i].y != target.y + draws[i].offset[1];
  }
  const auto big = st::obsmodel::draw_negative_offsets(target.width(), target.height(), sx, sy, varphi, eta, 10000, rng);
  const double extent[2] = {target.width(), target.height()};
  double sum[2] = {}, sq[2] = {};
  int bitExact = 0, checked = 0;
  double worstUlps = 0.0;
  for (const auto& d : big) {
    for (int j = 0; j < 2; ++j) {
      if (d.r[j] != 0.0) {
        // The offset is one rounded addition, so the identity can be off by at most one ulp.
        const double mag = std::max(std::abs(d.offset[j]), std::abs(d.r[j]));
        const double ulp = std::nextafter(mag, 1e300) - mag;
        const double err = std::abs(std::abs(d.offset[j] - d.r[j]) - extent[j] * varphi);
        worstUlps = std::max(worstUlps, err / ulp);
        violations += err > ulp;
        bitExact += err == 0.0;
        ++checked;
      }
      sum[j] += d.r[j];
      sq[j] += d.r[j] * d.r[j];
    }
  }
  double worstRel = 0.0;
  const double sigma[2] = {sx, sy};
  for (int j = 0; j < 2; ++j) {
    const double mean = sum[j] / 1e4;
    const double sd = std::sqrt(sq[j] / 1e4 - mean * mean);
    worstRel = std::max(worstRel, std::abs(sd / (eta * sigma[j]) - 1.0));
  }
  return {violations == 0 && worstRel < 0.05,
          fmt("identity violations %d (%d of %d bit-exact, worst %.2f ulp); stddev of r within %.2f%% of eta*sigma",
              violations, bitExact, checked, worstUlps, 100.0 * worstRel)};
}

// ---------------------------------------------------------------------------------------

struct TrackStats {
  double worstCol = 0.0;
  double sr = 0.0;
  double seconds = 0.0;
};

TrackStats track_square(const st::stack::StackedModel& model, const st::tracker::TrackerConfig& cfg,
                        std::uint64_t seed) {
  const auto seq = st::synthetic::moving_square({});
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = st::tracker::run(seq.frames, seq.groundTruth[0], cfg, model, seed);
  TrackStats s;
  s.seconds = seconds_since(t0);
  const auto boxes = result.boxes();
  const auto col = st::eval::col_error(boxes, seq.groundTruth);
  s.worstCol = *std::max_element(col.perFrame.begin(), col.perFrame.end());
  s.sr = st::eval::success_rate(boxes, seq.groundTruth);
  return s;
}

st::tracker::TrackerConfig square_config() {
  st::tracker::TrackerConfig cfg;
  cfg.particles = 300;
  cfg.dynamics.variance = {4.0, 4.0, 1e-4, 1e-4};
  return cfg;
}

Outcome synthetic_tracking(const st::stack::StackedModel& model) {
  auto cfg = square_config();
  bool pass = true;
  std::string detail = "paper likelihood exp(f):";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = track_square(model, cfg, seed);
    pass = pass && s.worstCol < 3.0 && s.sr == 100.0 && s.seconds < 60.0;
    detail += fmt(" seed%llu max COL %.2f px SR %.0f%% %.1fs;", static_cast<unsigned long long>(seed),
                  s.worstCol, s.sr, s.seconds);
  }
  cfg.likelihoodScale = 20.0;
  double worst = 0.0, minSr = 100.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = track_square(model, cfg, seed);
    worst = std::max(worst, s.worstCol);
    minSr = std::min(minSr, s.sr);
  }
  detail += fmt(" [reference only, exp(20 f): max COL %.2f px, min SR %.0f%%]", worst, minSr);
  return {pass, detail};
}

// ---------------------------------------------------------------------------------------

double raster_iou(const st::Box& a, const st::Box& b) {
  const int x0 = static_cast<int>(std::min(a.x, b.x)), y0 = static_cast<int>(std::min(a.y, b.y));
  const int x1 = static_cast<int>(std::max(a.x + a.w, b.x + b.w));
  const int y1 = static_cast<int>(std::max(a.y + a.h, b.y + b.h));
  const auto in = [](const st::Box& r, int x, int y) { return x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h; };
  long both = 0, either = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      both += in(a, x, y) && in(b, x, y);
      either += in(a, x, y) || in(b, x, y);
    }
  }
  return either == 0 ? 0.0 : double(both) / double(either);
}

Outcome metrics_oracle() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pos(0, 40), size(1, 25);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const st::Box a{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    const st::Box b{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    bad += std::abs(st::eval::overlap(a, b) - raster_iou(a, b)) > 1.0 / std::min(a.area(), b.area());
  }
  int colBad = 0;
  for (int k = 1; k <= 50; ++k) {
    const std::vector<st::Box> gt{{double(k), double(2 * k), 10, 6}};
    const std::vector<st::Box> res{{k + 3.0 * k, 2 * k + 4.0 * k, 10, 6}};
    colBad += st::eval::col_error(res, gt).perFrame[0] != 5.0 * k;
  }
  return {bad == 0 && colBad == 0, fmt("IoU mismatches %d / 10000; 3-4-5 COL mismatches %d / 50", bad, colBad)};
}

// ---------------------------------------------------------------------------------------

Outcome cli_determinism(const st::stack::StackedModel& model, const st::tracker::TrackerConfig& trainCfg) {
  const auto dir = st::testing::scratch_dir("acceptance-cli");
  st::slowae::save_weights(dir / "w1.bin", model.layer1, st::pipeline::cost_config(trainCfg, 1));
  st::slowae::save_weights(dir / "w2.bin", model.layer2, st::pipeline::cost_config(trainCfg, 2));
  st::config::RunConfig rc;
  rc.tracker = square_config();
  std::ofstream(dir / "run.ini") << st::config::format(rc);
  st::synthetic::SquareScenario sc;
  sc.frames = 30;
  st::synthetic::write_sequence(st::synthetic::moving_square(sc), dir / "seq");
  std::string outputs[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = dir / ("out" + std::to_string(i));
    const std::string cmd = std::string("'") + SLOWTRACK_CLI + "' track --sequence '" + (dir / "seq").string() +
                            "' --init 20,40,20,20 --layer1 '" + (dir / "w1.bin").string() + "' --layer2 '" +
                            (dir / "w2.bin").string() + "' -c '" + (dir / "run.ini").string() + "' -o '" +
                            out.string() + "' --seed 1234 --quiet";
    const auto r = st::testing::run_command(cmd);
    if (r.status != 0) return {false, "track exited with " + std::to_string(r.status) + ": " + r.output};
    outputs[i] = st::testing::read_file(out / "results.csv");
  }
  return {!outputs[0].empty() && outputs[0] == outputs[1],
          fmt("two seeded runs: %zu and %zu bytes, identical=%s", outputs[0].size(), outputs[1].size(),
              outputs[0] == outputs[1] ? "yes" : "no")};
}

// ---------------------------------------------------------------------------------------

Outcome visualization_invariance(const st::stack::StackedModel& model) {
  st::viz::RenderOptions options;
  double worst = 0.0;
  int rendered = 0;
  // First layer: stimuli exactly as rendered, in pixel space.
  const auto ortho1 = st::viz::orthonormalize_pairs(model.layer1);
  std::vector<int> units1(static_cast<std::size_t>(model.layer1.pooled()));
  for (std::size_t i = 0; i < units1.size(); ++i) units1[i] = static_cast<int>(i);
  const auto grid = st::viz::render_grid(model, 1, units1, options, std::nullopt);
  for (int r = 0; r < grid.rows; ++r) {
    double lo = 1e300, hi = -1e300;
    for (int c = 0; c < grid.cols; ++c) {
      const VectorXd x = grid.raw[static_cast<std::size_t>(r * grid.cols + c)].normalized();
      const double a = ortho1.W.row(2 * units1[r]).dot(x);
      const double b = ortho1.W.row(2 * units1[r] + 1).dot(x);
      const double resp = std::hypot(a, b);
      lo = std::min(lo, resp);
      hi = std::max(hi, resp);
      ++rendered;
    }
    worst = std::max(worst, hi - lo);
  }
  // Second layer: stimuli in the layer's own input space (first-layer amplitudes).
  const auto ortho2 = st::viz::orthonormalize_pairs(model.layer2);
  for (int k = 0; k < model.layer2.pooled(); ++k) {
    double lo = 1e300, hi = -1e300;
    for (int c = 0; c < 360 / options.thetaStepDeg; ++c) {
      const double th = c * options.thetaStepDeg * std::numbers::pi / 180.0;
      const VectorXd v = (std::cos(th) * ortho2.W.row(2 * k) + std::sin(th) * ortho2.W.row(2 * k + 1)).transpose().normalized();
      const double resp = std::hypot(ortho2.W.row(2 * k).dot(v), ortho2.W.row(2 * k + 1).dot(v));
      lo = std::min(lo, resp);
      hi = std::max(hi, resp);
      ++rendered;
    }
    worst = std::max(worst, hi - lo);
  }
  return {worst < 1e-8, fmt("%d stimuli over 10 phase steps: max pooled-response spread %.3g", rendered, worst)};
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  int failures = 0;
  const auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  const auto guarded = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    try {
      report(id, name, fn());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, "gradient correctness", gradient_correctness);
  guarded(2, "pooling invariance", pooling_invariance);
  guarded(3, "slowness efficacy", slowness_efficacy);
  guarded(4, "class-weighting equivalence", class_weighting_equivalence);
  guarded(5, "retention replay", retention_replay);
  guarded(6, "negative-sampling geometry", negative_geometry);

  st::tracker::TrackerConfig trainCfg;
  trainCfg.optimizer.maxIter = 200;
  std::optional<st::stack::StackedModel> model;
  try {
    const auto s8 = st::pipeline::synthetic_sessions(8, 2000, 5, 1.5, 8.0, 101);
    const auto l1 = st::pipeline::train_first_layer(s8, trainCfg, 1);
    const auto s14 = st::pipeline::synthetic_sessions(14, 2000, 5, 1.5, 8.0, 102);
    const auto l2 = st::pipeline::train_second_layer(s14, l1.weights, trainCfg, 2);
    model = st::pipeline::assemble(l1.weights, l2.weights, trainCfg);
    std::printf("model: two layers trained on 2000 synthetic sessions each, %.1f s\n", seconds_since(start));
  } catch (const std::exception& e) {
    std::printf("model training failed: %s\n", e.what());
  }
  const auto needModel = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!model) return {false, "no trained model"};
      return fn();
    };
  };
  guarded(7, "synthetic tracking oracle", needModel([&] { return synthetic_tracking(*model); }));
  guarded(8, "metrics oracle", metrics_oracle);
  guarded(9, "determinism", needModel([&] { return cli_determinism(*model, trainCfg); }));
  guarded(10, "visualization invariance", needModel([&] { return visualization_invariance(*model); }));

  std::printf("acceptance: %d of 10 criteria passed, %.1f s total\n", 10 - failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}

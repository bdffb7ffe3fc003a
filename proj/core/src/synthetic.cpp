#include "slowtrack/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "slowtrack/errors.hpp"
#include "slowtrack/random.hpp"

namespace slowtrack::synthetic {
namespace {

double coverage(int pixel, double lo, double hi) {
  return std::clamp(std::min(hi, pixel + 1.0) - std::max(lo, static_cast<double>(pixel)), 0.0, 1.0);
}

}  // namespace

Sequence moving_square(const SquareScenario& s) {
  if (s.width < 1 || s.height < 1 || s.side < 1 || s.frames < 1) {
    throw InvalidInput("square scenario needs positive sizes and frame count");
  }
  if (!(s.noiseStd >= 0.0)) throw InvalidInput("noise stddev must be >= 0");
  Rng rng(s.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Sequence out;
  out.frames.reserve(static_cast<std::size_t>(s.frames));
  for (int k = 0; k < s.frames; ++k) {
    const Box box{s.startX + k * s.vx, s.startY + k * s.vy, static_cast<double>(s.side),
                  static_cast<double>(s.side)};
    Image frame(s.width, s.height, s.background);
    for (int y = 0; y < s.height; ++y) {
      const double cy = coverage(y, box.y, box.y + box.h);
      for (int x = 0; x < s.width; ++x) {
        const double c = cy * coverage(x, box.x, box.x + box.w);
        double v = s.background + c * (s.foreground - s.background);
        if (s.noiseStd > 0.0) v += s.noiseStd * noise(rng);
        frame(x, y) = std::clamp(v, 0.0, 1.0);
      }
    }
    out.frames.push_back(std::move(frame));
    out.groundTruth.push_back(box);
  }
  return out;
}

void write_sequence(const Sequence& sequence, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < sequence.frames.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.png", k + 1);
    save_png(sequence.frames[k], dir / name);
  }
  std::ofstream gt(dir / "groundtruth.txt", std::ios::trunc);
  if (!gt) throw std::runtime_error("cannot write ground truth in " + dir.string());
  char line[128];
  for (const Box& b : sequence.groundTruth) {
    std::snprintf(line, sizeof(line), "%.6g,%.6g,%.6g,%.6g\n", b.x, b.y, b.w, b.h);
    gt << line;
  }
}

}  // namespace slowtrack::synthetic

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "slowtrack/affine.hpp"
#include "slowtrack/image.hpp"

namespace slowtrack::synthetic {

/// A bright square translating at constant velocity over a flat background.
struct SquareScenario {
  int width = 260;
  int height = 100;
  int side = 20;
  int frames = 100;
  double startX = 20.0;
  double startY = 40.0;
  double vx = 2.0;
  double vy = 0.0;
  double foreground = 1.0;
  double background = 0.0;
  double noiseStd = 0.0;
  std::uint64_t seed = 0;
};

struct Sequence {
  std::vector<Image> frames;
  std::vector<Box> groundTruth;
};

/// Renders the scenario with area-weighted (anti-aliased) square edges so sub-pixel
/// positions are represented. Frame k holds the square at start + k * velocity.
Sequence moving_square(const SquareScenario& scenario);

/// Writes frame_00001.png ... and groundtruth.txt ("x,y,w,h" per line) into `dir`.
void write_sequence(const Sequence& sequence, const std::filesystem::path& dir);

}  // namespace slowtrack::synthetic

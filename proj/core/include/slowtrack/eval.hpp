#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "slowtrack/affine.hpp"

namespace slowtrack::eval {

/// Intersection over union; 0 when disjoint or when either box is empty.
double overlap(const Box& a, const Box& b);

/// Percentage of frames whose overlap is strictly above 0.5.
double success_rate(std::span<const Box> results, std::span<const Box> groundTruth);

struct ColError {
  std::vector<double> perFrame;
  double mean = 0.0;
};

/// Euclidean distance between box centers, per frame and averaged.
ColError col_error(std::span<const Box> results, std::span<const Box> groundTruth);

struct TrialMetrics {
  double successRate = 0.0;
  double meanCol = 0.0;
};

/// Per-trial score: max-min normalized SR plus max-min normalized 1 / mean COL.
std::vector<double> trial_scores(std::span<const TrialMetrics> trials);

/// Index of the trial holding the median score (lowest index among ties).
std::size_t median_trial(std::span<const TrialMetrics> trials);

/// One "x,y,w,h" line per frame. Whitespace or tab separators are accepted as well.
std::vector<Box> load_ground_truth(const std::filesystem::path& path);

/// Writes the per-frame CSV and a PNG line chart of the COL error.
/// Columns: frame, pred_x, pred_y, pred_w, pred_h, gt_x, gt_y, gt_w, gt_h, iou, col.
void emit_report(std::span<const Box> results, std::span<const Box> groundTruth,
                 const std::filesystem::path& csvPath, const std::filesystem::path& plotPath);

}  // namespace slowtrack::eval

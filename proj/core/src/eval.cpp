#include "slowtrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "slowtrack/errors.hpp"

namespace slowtrack::eval {
namespace {

void check_lengths(std::span<const Box> results, std::span<const Box> groundTruth) {
  if (results.empty()) throw InvalidInput("no frames to evaluate");
  if (results.size() != groundTruth.size()) {
    throw InvalidInput("result and ground-truth lengths differ: " + std::to_string(results.size()) +
                       " vs " + std::to_string(groundTruth.size()));
  }
}

constexpr double kColFloor = 1e-9;

}  // namespace

double overlap(const Box& a, const Box& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double success_rate(std::span<const Box> results, std::span<const Box> groundTruth) {
  check_lengths(results, groundTruth);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (overlap(results[i], groundTruth[i]) > 0.5) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

ColError col_error(std::span<const Box> results, std::span<const Box> groundTruth) {
  check_lengths(results, groundTruth);
  ColError out;
  out.perFrame.reserve(results.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const double d = std::hypot(results[i].center_x() - groundTruth[i].center_x(),
                                results[i].center_y() - groundTruth[i].center_y());
    out.perFrame.push_back(d);
    sum += d;
  }
  out.mean = sum / static_cast<double>(results.size());
  return out;
}

std::vector<double> trial_scores(std::span<const TrialMetrics> trials) {
  if (trials.empty()) throw InvalidInput("no trials");
  const auto normalize = [](std::vector<double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double min = *lo;
    const double range = *hi - *lo;
    for (double& x : v) x = range > 0.0 ? (x - min) / range : 0.5;
    return v;
  };
  std::vector<double> sr;
  std::vector<double> inv;
  for (const auto& t : trials) {
    sr.push_back(t.successRate);
    inv.push_back(1.0 / std::max(t.meanCol, kColFloor));
  }
  sr = normalize(std::move(sr));
  inv = normalize(std::move(inv));
  std::vector<double> score(trials.size());
  for (std::size_t i = 0; i < score.size(); ++i) score[i] = sr[i] + inv[i];
  return score;
}

std::size_t median_trial(std::span<const TrialMetrics> trials) {
  const auto score = trial_scores(trials);
  std::vector<double> sorted = score;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[(sorted.size() - 1) / 2];
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (score[i] == median) return i;
  }
  return 0;
}

std::vector<Box> load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open ground truth " + path.string());
  std::vector<Box> boxes;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::replace_if(line.begin(), line.end(), [](char c) { return c == ',' || c == '\t'; }, ' ');
    std::istringstream fields(line);
    double v[4];
    if (!(fields >> v[0])) continue;
    if (!(fields >> v[1] >> v[2] >> v[3])) {
      throw FormatError("ground truth line " + std::to_string(lineNo) + " needs 4 values: " +
                        path.string());
    }
    if (!(v[2] > 0.0) || !(v[3] > 0.0)) {
      throw FormatError("ground truth line " + std::to_string(lineNo) + " has non-positive size");
    }
    boxes.push_back({v[0], v[1], v[2], v[3]});
  }
  if (boxes.empty()) throw FormatError("ground truth is empty: " + path.string());
  return boxes;
}

void emit_report(std::span<const Box> results, std::span<const Box> groundTruth,
                 const std::filesystem::path& csvPath, const std::filesystem::path& plotPath) {
  const ColError col = col_error(results, groundTruth);
  {
    std::ofstream out(csvPath, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + csvPath.string());
    out << "frame,pred_x,pred_y,pred_w,pred_h,gt_x,gt_y,gt_w,gt_h,iou,col\n";
    char line[320];
    for (std::size_t i = 0; i < results.size(); ++i) {
      const Box& r = results[i];
      const Box& g = groundTruth[i];
      std::snprintf(line, sizeof(line), "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                    i + 1, r.x, r.y, r.w, r.h, g.x, g.y, g.w, g.h, overlap(r, g), col.perFrame[i]);
      out << line;
    }
  }

  const int width = 640;
  const int height = 360;
  const int left = 50;
  const int right = 15;
  const int top = 15;
  const int bottom = 35;
  cv::Mat plot(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  const double maxCol = std::max(1.0, *std::max_element(col.perFrame.begin(), col.perFrame.end()));
  const int n = static_cast<int>(col.perFrame.size());
  const auto px = [&](int i) {
    return left + (n > 1 ? i * (width - left - right) / (n - 1) : 0);
  };
  const auto py = [&](double v) {
    return height - bottom - static_cast<int>(std::lround(v / maxCol * (height - top - bottom)));
  };
  cv::line(plot, {left, top}, {left, height - bottom}, cv::Scalar(0, 0, 0));
  cv::line(plot, {left, height - bottom}, {width - right, height - bottom}, cv::Scalar(0, 0, 0));
  for (int i = 1; i < n; ++i) {
    cv::line(plot, {px(i - 1), py(col.perFrame[i - 1])}, {px(i), py(col.perFrame[i])},
             cv::Scalar(200, 60, 20), 1, cv::LINE_AA);
  }
  char label[64];
  std::snprintf(label, sizeof(label), "%.1f px", maxCol);
  cv::putText(plot, label, {2, top + 10}, cv::FONT_HERSHEY_SIMPLEX, 0.35, cv::Scalar(0, 0, 0));
  std::snprintf(label, sizeof(label), "frame %d", n);
  cv::putText(plot, label, {width - right - 60, height - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.35,
              cv::Scalar(0, 0, 0));
  cv::putText(plot, "COL error", {left + 5, height - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.35,
              cv::Scalar(0, 0, 0));
  if (!cv::imwrite(plotPath.string(), plot)) throw std::runtime_error("cannot write " + plotPath.string());
}

}  // namespace slowtrack::eval

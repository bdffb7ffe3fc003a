#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "slowtrack/eval.hpp"
#include "test_support.hpp"

namespace slowtrack {
namespace {

using namespace eval;

double raster_iou(const Box& a, const Box& b) {
  const int x0 = static_cast<int>(std::min(a.x, b.x));
  const int y0 = static_cast<int>(std::min(a.y, b.y));
  const int x1 = static_cast<int>(std::max(a.x + a.w, b.x + b.w));
  const int y1 = static_cast<int>(std::max(a.y + a.h, b.y + b.h));
  const auto inside = [](const Box& r, int x, int y) {
    return x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h;
  };
  long both = 0, either = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const bool ia = inside(a, x, y);
      const bool ib = inside(b, x, y);
      both += ia && ib;
      either += ia || ib;
    }
  }
  return either == 0 ? 0.0 : double(both) / double(either);
}

TEST(Overlap, Examples) {
  const Box a{0, 0, 10, 10};
  EXPECT_DOUBLE_EQ(overlap(a, a), 1.0);
  EXPECT_DOUBLE_EQ(overlap(a, {20, 20, 5, 5}), 0.0);
  EXPECT_DOUBLE_EQ(overlap(a, {10, 0, 10, 10}), 0.0);
  EXPECT_NEAR(overlap(a, {5, 0, 10, 10}), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(overlap(a, {0, 0, 0, 10}), 0.0);
}

TEST(Overlap, MatchesRasterOracle) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pos(0, 30);
  std::uniform_int_distribution<int> size(1, 20);
  for (int i = 0; i < 2000; ++i) {
    const Box a{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    const Box b{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    const double tol = 1.0 / std::min(a.area(), b.area());
    EXPECT_NEAR(overlap(a, b), raster_iou(a, b), tol);
    EXPECT_DOUBLE_EQ(overlap(a, b), overlap(b, a));
  }
}

TEST(SuccessRate, PerfectAndBoundary) {
  const std::vector<Box> gt{{0, 0, 10, 10}, {5, 5, 10, 10}};
  EXPECT_DOUBLE_EQ(success_rate(gt, gt), 100.0);
  const std::vector<Box> half{{0, 0, 10, 20}, {5, 5, 10, 20}};
  EXPECT_DOUBLE_EQ(overlap(half[0], gt[0]), 0.5);
  EXPECT_DOUBLE_EQ(success_rate(half, gt), 0.0);
  const std::vector<Box> mixed{{0, 0, 10, 10}, {50, 50, 10, 10}};
  EXPECT_DOUBLE_EQ(success_rate(mixed, gt), 50.0);
  EXPECT_THROW(success_rate(mixed, std::vector<Box>{gt[0]}), InvalidInput);
}

TEST(ColError, Examples) {
  const std::vector<Box> gt{{0, 0, 10, 10}, {0, 0, 10, 10}};
  const std::vector<Box> res{{0, 0, 10, 10}, {3, 4, 10, 10}};
  const auto col = col_error(res, gt);
  ASSERT_EQ(col.perFrame.size(), 2u);
  EXPECT_EQ(col.perFrame[0], 0.0);
  EXPECT_EQ(col.perFrame[1], 5.0);
  EXPECT_EQ(col.mean, 2.5);
  // Center shift only: size changes around the same center do not count.
  const std::vector<Box> grown{{-5, -5, 20, 20}, {-2, -1, 20, 20}};
  EXPECT_EQ(col_error(grown, gt).perFrame[1], 5.0);
}

TEST(Metrics, InvariantToConsistentReordering) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::vector<Box> res, gt;
  for (int i = 0; i < 40; ++i) {
    gt.push_back({u(rng), u(rng), 10 + u(rng) / 5, 10 + u(rng) / 5});
    res.push_back({gt.back().x + u(rng) / 10, gt.back().y - u(rng) / 10, gt.back().w, gt.back().h});
  }
  std::vector<std::size_t> order(40);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Box> res2, gt2;
  for (auto i : order) {
    res2.push_back(res[i]);
    gt2.push_back(gt[i]);
  }
  EXPECT_DOUBLE_EQ(success_rate(res, gt), success_rate(res2, gt2));
  EXPECT_NEAR(col_error(res, gt).mean, col_error(res2, gt2).mean, 1e-12);
}

TEST(MedianTrial, Examples) {
  std::vector<TrialMetrics> same(5, {80.0, 4.0});
  EXPECT_EQ(median_trial(same), 0u);
  for (double s : trial_scores(same)) EXPECT_DOUBLE_EQ(s, 1.0);

  std::vector<TrialMetrics> sr{{10, 3}, {20, 3}, {30, 3}, {40, 3}, {50, 3}};
  EXPECT_EQ(median_trial(sr), 2u);
  std::vector<TrialMetrics> shuffled{{50, 3}, {10, 3}, {40, 3}, {30, 3}, {20, 3}};
  EXPECT_EQ(median_trial(shuffled), 3u);
}

TEST(MedianTrial, ScoreFormula) {
  const std::vector<TrialMetrics> t{{100, 1.0}, {50, 2.0}, {0, 4.0}};
  const auto s = trial_scores(t);
  EXPECT_DOUBLE_EQ(s[0], 2.0);
  EXPECT_DOUBLE_EQ(s[1], 0.5 + (0.5 - 0.25) / 0.75);
  EXPECT_DOUBLE_EQ(s[2], 0.0);
  EXPECT_EQ(median_trial(t), 1u);
}

TEST(MedianTrial, ImprovingATrialNeverLowersItsScore) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> sr(0.0, 100.0);
  std::uniform_real_distribution<double> col(0.5, 30.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<TrialMetrics> t;
    for (int i = 0; i < 5; ++i) t.push_back({sr(rng), col(rng)});
    const auto before = trial_scores(t);
    const std::size_t k = rep % 5;
    t[k].successRate = std::min(100.0, t[k].successRate + 5.0);
    t[k].meanCol *= 0.8;
    EXPECT_GE(trial_scores(t)[k], before[k] - 1e-12);
  }
}

TEST(GroundTruth, SeparatorsAndErrors) {
  const auto dir = testing::scratch_dir("eval_gt");
  {
    std::ofstream f(dir / "gt.txt");
    f << "1,2,3,4\n5\t6\t7\t8\n9 10 11 12\n\n";
  }
  const auto gt = load_ground_truth(dir / "gt.txt");
  ASSERT_EQ(gt.size(), 3u);
  EXPECT_EQ(gt[1], (Box{5, 6, 7, 8}));
  EXPECT_EQ(gt[2], (Box{9, 10, 11, 12}));
  {
    std::ofstream f(dir / "bad.txt");
    f << "1,2,3\n";
  }
  EXPECT_THROW(load_ground_truth(dir / "bad.txt"), FormatError);
  EXPECT_THROW(load_ground_truth(dir / "missing.txt"), InvalidInput);
}

TEST(Report, CsvAndPlot) {
  const auto dir = testing::scratch_dir("eval_report");
  const std::vector<Box> gt{{0, 0, 10, 10}, {1, 0, 10, 10}, {2, 0, 10, 10}};
  const std::vector<Box> res{{0, 0, 10, 10}, {4, 4, 10, 10}, {2, 0, 10, 10}};
  emit_report(res, gt, dir / "r.csv", dir / "col.png");
  const auto text = testing::read_file(dir / "r.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "frame,pred_x,pred_y,pred_w,pred_h,gt_x,gt_y,gt_w,gt_h,iou,col");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_NE(text.find(",5"), std::string::npos);
  EXPECT_GT(load_gray(dir / "col.png").width(), 0);
}

}  // namespace
}  // namespace slowtrack

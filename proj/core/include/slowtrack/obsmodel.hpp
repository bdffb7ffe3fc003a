#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "slowtrack/affine.hpp"
#include "slowtrack/image.hpp"
#include "slowtrack/random.hpp"

namespace slowtrack::obsmodel {

struct Sample {
  Eigen::VectorXd z;
  int label = 1;  // +1 target, -1 background
  int frame = 0;
};

/// Maps a frame and a box hypothesis to a tracking representation.
using Featurizer = std::function<Eigen::VectorXd(const Image& frame, const AffineState& state)>;

// ---------------------------------------------------------------------------------------
// Sample collection

/// Integer offsets drawn uniformly from [-v, v] per axis.
std::vector<std::array<int, 2>> draw_positive_offsets(int v, int count, Rng& rng);

/// S * varphi * sgn(r) + r, with sgn(0) = 0.
double negative_offset(double extent, double varphi, double r);

struct NegativeDraw {
  std::array<double, 2> r;       // Gaussian gap term per axis
  std::array<double, 2> offset;  // displacement of the sample center from the target
};

/// Per axis j: r_j ~ N(0, (eta * sigma_j)^2), offset_j = S_j * varphi * sgn(r_j) + r_j.
std::vector<NegativeDraw> draw_negative_offsets(double extentX, double extentY, double sigmaX,
                                                double sigmaY, double varphi, double eta,
                                                int count, Rng& rng);

struct Collected {
  std::vector<Sample> samples;
  std::vector<AffineState> states;
  /// At least one window had to be moved back inside the frame.
  bool clamped = false;
};

/// `count` crops jittered by integer offsets in [-v, v]^2 around the target, label +1.
Collected first_frame_positives(const AffineState& target, int v, int count, Rng& rng,
                                const Image& frame, const Featurizer& featurize, int frameIndex = 1);

/// `count` background crops placed by the motion-coherent offsets above, label -1.
Collected collect_negatives(const AffineState& target, double sigmaX, double sigmaY, double varphi,
                            double eta, int count, Rng& rng, const Image& frame,
                            const Featurizer& featurize, int frameIndex);

// ---------------------------------------------------------------------------------------
// Retention

struct RetentionParams {
  int earlyFrames = 15;        // kept permanently
  int recentPositive = 55;     // sliding window for positives
  int recentNegative = 15;     // sliding window for negatives
  int negativesPerFrame = 25;

  void validate() const;
};

/// Frame-indexed positive/negative store. Frames 1..earlyFrames are permanent; later
/// frames survive while they are among the most recent `recent*` frames.
class TrainingSet {
 public:
  explicit TrainingSet(RetentionParams params = {});

  /// Stores the samples of frame t (frames must arrive in increasing order), then evicts
  /// frames that left the recent windows.
  void update(int t, std::vector<Sample> positives, std::vector<Sample> negatives);

  const RetentionParams& params() const noexcept { return params_; }
  int last_frame() const noexcept { return lastFrame_; }

  std::vector<int> positive_frames() const;
  std::vector<int> negative_frames() const;
  std::size_t positive_count() const;
  std::size_t negative_count() const;

  /// Positives first, then negatives, each in frame order.
  std::vector<const Sample*> samples() const;

  /// True when the retained frames match the window equations for the current frame.
  bool satisfies_windows() const;

 private:
  RetentionParams params_;
  std::map<int, std::vector<Sample>> positives_;
  std::map<int, std::vector<Sample>> negatives_;
  int lastFrame_ = 0;
};

// ---------------------------------------------------------------------------------------
// Classifier

enum class ClassWeighting {
  Balanced,  // C+- = (D+ + D-) / (2 D+-)
  None,
};

struct ClassifierOptions {
  double lambda = 1e-4;
  int maxIter = 200;
  double gradientTolerance = 1e-6;
  ClassWeighting weighting = ClassWeighting::Balanced;
};

/// Linear logistic model on standardized features.
struct Classifier {
  Eigen::VectorXd w;
  Eigen::VectorXd mean;
  Eigen::VectorXd invScale;  // 1 / (stddev + 1e-8)
  double lambda = 0.0;
  int trainedAtFrame = 0;
  double objective = 0.0;

  Eigen::VectorXd standardize(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  double margin(const Eigen::Ref<const Eigen::VectorXd>& z) const;
};

/// Minimizes  sum_i c_i log(1 + exp(-y_i w^T s(z_i))) / sum_i c_i + lambda |w|^2  where c_i
/// is the class weight of sample i and s() standardizes with c-weighted mean and stddev.
Classifier train_classifier(std::span<const Sample* const> samples,
                            const ClassifierOptions& options, int frame = 0,
                            const Eigen::VectorXd* warmStart = nullptr);
Classifier train_classifier(const TrainingSet& set, const ClassifierOptions& options, int frame = 0);

/// Overflow-safe logistic function.
double sigmoid(double m);

/// 1 / (1 + exp(-w^T s(z))).
double predict(const Classifier& classifier, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Value of the training objective at `w` (used to compare optima).
double classifier_objective(std::span<const Sample* const> samples, const ClassifierOptions& options,
                            const Eigen::VectorXd& w);

// ---------------------------------------------------------------------------------------
// Retraining schedule

struct UpdateSchedule {
  int checkEvery = 5;   // F_f
  int earlyFrames = 10; // F_et
  int stale = 25;       // F_s
  double upsilon = 0.99;

  void validate() const;
};

/// (p < upsilon and framesSinceUpdate == F_f) or (p < upsilon and t <= F_et) or
/// (framesSinceUpdate == F_s).
bool should_retrain(const UpdateSchedule& schedule, int t, int framesSinceUpdate, double maxProb);

}  // namespace slowtrack::obsmodel

#include "slowtrack/obsmodel.hpp"

#include <cmath>

#include "slowtrack/errors.hpp"
#include "slowtrack/optim.hpp"

namespace slowtrack::obsmodel {

std::vector<std::array<int, 2>> draw_positive_offsets(int v, int count, Rng& rng) {
  if (v < 0) throw InvalidInput("jitter radius must be >= 0");
  if (count < 1) throw InvalidInput("positive count must be >= 1");
  std::uniform_int_distribution<int> jitter(-v, v);
  std::vector<std::array<int, 2>> offsets(static_cast<std::size_t>(count));
  for (auto& o : offsets) {
    o[0] = jitter(rng);
    o[1] = jitter(rng);
  }
  return offsets;
}

double negative_offset(double extent, double varphi, double r) {
  const double sign = static_cast<double>((r > 0.0) - (r < 0.0));
  return extent * varphi * sign + r;
}

std::vector<NegativeDraw> draw_negative_offsets(double extentX, double extentY, double sigmaX,
                                                double sigmaY, double varphi, double eta,
                                                int count, Rng& rng) {
  if (count < 1) throw InvalidInput("negative count must be >= 1");
  if (!(sigmaX > 0.0) || !(sigmaY > 0.0)) throw InvalidInput("dynamic-model stddev must be > 0");
  std::normal_distribution<double> gapX(0.0, eta * sigmaX);
  std::normal_distribution<double> gapY(0.0, eta * sigmaY);
  std::vector<NegativeDraw> draws(static_cast<std::size_t>(count));
  for (auto& d : draws) {
    d.r = {gapX(rng), gapY(rng)};
    d.offset = {negative_offset(extentX, varphi, d.r[0]), negative_offset(extentY, varphi, d.r[1])};
  }
  return draws;
}

Collected first_frame_positives(const AffineState& target, int v, int count, Rng& rng,
                                const Image& frame, const Featurizer& featurize, int frameIndex) {
  Collected out;
  for (const auto& [dx, dy] : draw_positive_offsets(v, count, rng)) {
    AffineState s = target;
    s.x += dx;
    s.y += dy;
    out.clamped = clamp_to_image(s, frame.width(), frame.height()) || out.clamped;
    out.samples.push_back({featurize(frame, s), +1, frameIndex});
    out.states.push_back(s);
  }
  return out;
}

Collected collect_negatives(const AffineState& target, double sigmaX, double sigmaY, double varphi,
                            double eta, int count, Rng& rng, const Image& frame,
                            const Featurizer& featurize, int frameIndex) {
  Collected out;
  const auto draws = draw_negative_offsets(target.width(), target.height(), sigmaX, sigmaY, varphi,
                                           eta, count, rng);
  for (const auto& d : draws) {
    AffineState s = target;
    s.x += d.offset[0];
    s.y += d.offset[1];
    out.clamped = clamp_to_image(s, frame.width(), frame.height()) || out.clamped;
    out.samples.push_back({featurize(frame, s), -1, frameIndex});
    out.states.push_back(s);
  }
  return out;
}

void RetentionParams::validate() const {
  if (earlyFrames < 1 || recentPositive < 1 || recentNegative < 1 || negativesPerFrame < 1) {
    throw InvalidInput("retention parameters must be >= 1");
  }
}

TrainingSet::TrainingSet(RetentionParams params) : params_(params) { params_.validate(); }

void TrainingSet::update(int t, std::vector<Sample> positives, std::vector<Sample> negatives) {
  if (t <= lastFrame_) throw InvalidInput("frames must be stored in increasing order");
  lastFrame_ = t;
  if (!positives.empty()) positives_[t] = std::move(positives);
  if (!negatives.empty()) negatives_[t] = std::move(negatives);

  // Drop every non-permanent frame that fell out of its recent window.
  const auto evict = [&](std::map<int, std::vector<Sample>>& store, int recent) {
    if (t <= params_.earlyFrames + recent) return;
    const int oldestKept = t - recent + 1;
    auto it = store.upper_bound(params_.earlyFrames);
    while (it != store.end() && it->first < oldestKept) it = store.erase(it);
  };
  evict(positives_, params_.recentPositive);
  evict(negatives_, params_.recentNegative);
}

namespace {

std::vector<int> keys(const std::map<int, std::vector<Sample>>& store) {
  std::vector<int> out;
  out.reserve(store.size());
  for (const auto& [frame, samples] : store) out.push_back(frame);
  return out;
}

std::size_t total(const std::map<int, std::vector<Sample>>& store) {
  std::size_t n = 0;
  for (const auto& [frame, samples] : store) n += samples.size();
  return n;
}

}  // namespace

std::vector<int> TrainingSet::positive_frames() const { return keys(positives_); }
std::vector<int> TrainingSet::negative_frames() const { return keys(negatives_); }
std::size_t TrainingSet::positive_count() const { return total(positives_); }
std::size_t TrainingSet::negative_count() const { return total(negatives_); }

std::vector<const Sample*> TrainingSet::samples() const {
  std::vector<const Sample*> out;
  out.reserve(positive_count() + negative_count());
  for (const auto* store : {&positives_, &negatives_}) {
    for (const auto& [frame, samples] : *store) {
      for (const auto& s : samples) out.push_back(&s);
    }
  }
  return out;
}

bool TrainingSet::satisfies_windows() const {
  const int t = lastFrame_;
  const auto expected = [&](int recent) {
    std::vector<int> frames;
    for (int f = 1; f <= std::min(t, params_.earlyFrames); ++f) frames.push_back(f);
    for (int f = std::max(params_.earlyFrames + 1, t - recent + 1); f <= t; ++f) frames.push_back(f);
    return frames;
  };
  if (positive_frames() != expected(params_.recentPositive)) return false;
  if (negative_frames() != expected(params_.recentNegative)) return false;
  for (const auto& [frame, samples] : negatives_) {
    if (static_cast<int>(samples.size()) != params_.negativesPerFrame) return false;
  }
  return true;
}

Eigen::VectorXd Classifier::standardize(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != w.size()) throw InvalidInput("feature dimension does not match classifier");
  return ((z - mean).array() * invScale.array()).matrix();
}

double Classifier::margin(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  return w.dot(standardize(z));
}

namespace {

struct Problem {
  Eigen::MatrixXd features;  // n x r, standardized
  Eigen::VectorXd labels;    // +-1
  Eigen::VectorXd weights;   // c_i / sum c
  Eigen::VectorXd mean;
  Eigen::VectorXd invScale;
};

Problem build_problem(std::span<const Sample* const> samples, ClassWeighting weighting) {
  if (samples.empty()) throw InvalidState("empty training set");
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index r = samples.front()->z.size();
  Eigen::Index positives = 0;
  for (const Sample* s : samples) {
    if (s->z.size() != r) throw InvalidInput("inconsistent feature dimension");
    if (s->label != 1 && s->label != -1) throw InvalidInput("labels must be +1 or -1");
    if (!s->z.allFinite()) throw InvalidInput("non-finite features");
    positives += s->label == 1;
  }
  const Eigen::Index negatives = n - positives;
  if (positives == 0 || negatives == 0) throw InvalidState("classifier needs both classes");

  Problem p;
  p.labels.resize(n);
  p.weights.resize(n);
  const double cPos = weighting == ClassWeighting::Balanced ? double(n) / (2.0 * positives) : 1.0;
  const double cNeg = weighting == ClassWeighting::Balanced ? double(n) / (2.0 * negatives) : 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    p.labels[i] = samples[static_cast<std::size_t>(i)]->label;
    p.weights[i] = p.labels[i] > 0 ? cPos : cNeg;
  }
  p.weights /= p.weights.sum();

  p.features.resize(n, r);
  for (Eigen::Index i = 0; i < n; ++i) p.features.row(i) = samples[static_cast<std::size_t>(i)]->z.transpose();

  constexpr double kEps = 1e-8;
  p.mean = p.features.transpose() * p.weights;
  p.features.rowwise() -= p.mean.transpose();
  const Eigen::VectorXd variance = p.features.array().square().matrix().transpose() * p.weights;
  p.invScale = (variance.array().max(0.0).sqrt() + kEps).inverse().matrix();
  p.features.array().rowwise() *= p.invScale.transpose().array();
  return p;
}

// Weighted mean logistic loss plus ridge; gradient written when requested.
double logistic_objective(const Problem& p, double lambda, const Eigen::VectorXd& w,
                          Eigen::VectorXd* gradient) {
  const Eigen::VectorXd margins = (p.features * w).cwiseProduct(p.labels);
  double value = lambda * w.squaredNorm();
  Eigen::VectorXd coeff(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    const double m = margins[i];
    // log(1 + exp(-m)) and its derivative, evaluated without overflow.
    const double loss = m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    const double sigma = m > 0.0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
    value += p.weights[i] * loss;
    coeff[i] = -p.weights[i] * p.labels[i] * sigma;
  }
  if (gradient != nullptr) {
    *gradient = p.features.transpose() * coeff;
    *gradient += 2.0 * lambda * w;
  }
  return value;
}

}  // namespace

Classifier train_classifier(std::span<const Sample* const> samples,
                            const ClassifierOptions& options, int frame,
                            const Eigen::VectorXd* warmStart) {
  if (!(options.lambda >= 0.0)) throw InvalidInput("lambda must be >= 0");
  const Problem p = build_problem(samples, options.weighting);

  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(p.features.cols());
  if (warmStart != nullptr && warmStart->size() == w0.size()) w0 = *warmStart;

  const optim::Objective fn = [&](const Eigen::VectorXd& w, Eigen::VectorXd& grad) {
    return logistic_objective(p, options.lambda, w, &grad);
  };
  const auto fit = optim::minimize(fn, w0, {options.maxIter, 10, options.gradientTolerance});

  Classifier c;
  c.w = fit.x;
  c.mean = p.mean;
  c.invScale = p.invScale;
  c.lambda = options.lambda;
  c.trainedAtFrame = frame;
  c.objective = fit.finalCost;
  return c;
}

Classifier train_classifier(const TrainingSet& set, const ClassifierOptions& options, int frame) {
  const auto samples = set.samples();
  return train_classifier(samples, options, frame);
}

double sigmoid(double m) {
  return m >= 0.0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
}

double predict(const Classifier& classifier, const Eigen::Ref<const Eigen::VectorXd>& z) {
  return sigmoid(classifier.margin(z));
}

double classifier_objective(std::span<const Sample* const> samples, const ClassifierOptions& options,
                            const Eigen::VectorXd& w) {
  const Problem p = build_problem(samples, options.weighting);
  if (w.size() != p.features.cols()) throw InvalidInput("weight dimension mismatch");
  return logistic_objective(p, options.lambda, w, nullptr);
}

void UpdateSchedule::validate() const {
  if (checkEvery < 1 || earlyFrames < 1 || stale < 1) throw InvalidInput("schedule counts must be >= 1");
  if (stale <= checkEvery) throw InvalidInput("F_s must exceed F_f");
  if (!(upsilon > 0.0 && upsilon < 1.0)) throw InvalidInput("upsilon must be in (0, 1)");
}

bool should_retrain(const UpdateSchedule& schedule, int t, int framesSinceUpdate, double maxProb) {
  const bool lowConfidence = maxProb < schedule.upsilon;
  return (lowConfidence && framesSinceUpdate == schedule.checkEvery) ||
         (lowConfidence && t <= schedule.earlyFrames) || framesSinceUpdate == schedule.stale;
}

}  // namespace slowtrack::obsmodel

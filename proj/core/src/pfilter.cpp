#include "slowtrack/pfilter.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "slowtrack/errors.hpp"

namespace slowtrack::pfilter {

double DynamicModel::sigma_x() const { return std::sqrt(variance[0]); }
double DynamicModel::sigma_y() const { return std::sqrt(variance[1]); }

void DynamicModel::validate() const {
  for (const double v : variance) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("dynamic-model variances must be >= 0");
  }
}

ParticleSet ParticleSet::uniform(const AffineState& state, int count) {
  if (count < 1) throw InvalidInput("particle count must be >= 1");
  ParticleSet set;
  set.states.assign(static_cast<std::size_t>(count), state);
  set.weights.assign(static_cast<std::size_t>(count), 1.0 / count);
  return set;
}

ParticleSet propagate(const ParticleSet& particles, const DynamicModel& model, Rng& rng) {
  model.validate();
  std::normal_distribution<double> unit(0.0, 1.0);
  std::array<double, 4> sigma{};
  for (std::size_t k = 0; k < 4; ++k) sigma[k] = std::sqrt(model.variance[k]);

  ParticleSet out = particles;
  for (auto& s : out.states) {
    // Draw all four elements even when a variance is zero so the stream layout is fixed.
    std::array<double, 4> noise{};
    for (auto& n : noise) n = unit(rng);
    s.x += sigma[0] * noise[0];
    s.y += sigma[1] * noise[1];
    s.scale = std::clamp(s.scale + sigma[2] * noise[2], kMinScale, kMaxScale);
    s.aspect = std::clamp(s.aspect + sigma[3] * noise[3], kMinScale, kMaxScale);
  }
  return out;
}

ParticleSet weigh(const ParticleSet& particles, std::span<const double> scores) {
  if (scores.size() != particles.size() || particles.size() == 0) {
    throw InvalidInput("one score per particle required");
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  ParticleSet out = particles;
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.weights[i] = particles.weights[i] * std::exp(scores[i] - top);
    sum += out.weights[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) throw NumericalError("particle weights degenerate");
  for (double& w : out.weights) w /= sum;
  return out;
}

std::vector<double> margins(const ParticleSet& particles, const Image& frame,
                            const obsmodel::Featurizer& featurize,
                            const obsmodel::Classifier& classifier, int threads) {
  std::vector<double> out(particles.size());
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = classifier.margin(featurize(frame, particles.states[i]));
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1,
                                                      std::max<std::size_t>(particles.size(), 1));
  if (workers == 1) {
    work(0, particles.size());
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (particles.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(particles.size(), begin + chunk);
    if (begin < end) pool.emplace_back(work, begin, end);
  }
  pool.clear();  // join
  return out;
}

std::vector<double> score(const ParticleSet& particles, const Image& frame,
                          const obsmodel::Featurizer& featurize,
                          const obsmodel::Classifier& classifier, int threads) {
  auto out = margins(particles, frame, featurize, classifier, threads);
  for (double& m : out) m = obsmodel::sigmoid(m);
  return out;
}

ParticleSet resample(const ParticleSet& particles, Rng& rng) {
  const std::size_t n = particles.size();
  if (n == 0 || particles.weights.size() != n) throw InvalidInput("empty particle set");
  std::uniform_real_distribution<double> start(0.0, 1.0 / static_cast<double>(n));
  const double u0 = start(rng);

  ParticleSet out;
  out.states.reserve(n);
  out.weights.assign(n, 1.0 / static_cast<double>(n));
  double cumulative = particles.weights[0];
  std::size_t i = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = u0 + static_cast<double>(k) / static_cast<double>(n);
    while (u > cumulative && i + 1 < n) cumulative += particles.weights[++i];
    out.states.push_back(particles.states[i]);
  }
  return out;
}

std::size_t best_index(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("no scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

AffineState estimate(const ParticleSet& particles, std::span<const double> scores) {
  if (scores.size() != particles.size()) throw InvalidInput("one score per particle required");
  return particles.states[best_index(scores)];
}

}  // namespace slowtrack::pfilter

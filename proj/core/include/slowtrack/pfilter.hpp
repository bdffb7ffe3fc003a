#pragma once

#include <array>
#include <span>
#include <vector>

#include "slowtrack/affine.hpp"
#include "slowtrack/image.hpp"
#include "slowtrack/obsmodel.hpp"
#include "slowtrack/random.hpp"

namespace slowtrack::pfilter {

/// Diagonal Gaussian random walk on (x, y, scale, aspect). Entries are variances.
struct DynamicModel {
  std::array<double, 4> variance{4.0, 4.0, 1e-4, 1e-4};

  double sigma_x() const;
  double sigma_y() const;
  void validate() const;
};

struct ParticleSet {
  std::vector<AffineState> states;
  std::vector<double> weights;

  std::size_t size() const noexcept { return states.size(); }
  /// N copies of `state` with uniform weights.
  static ParticleSet uniform(const AffineState& state, int count);
};

inline constexpr double kMinScale = 1e-3;
inline constexpr double kMaxScale = 1e3;

/// Adds independent N(0, Q_k) noise to each state element; weights are untouched.
/// Scale and aspect are clamped to [1e-3, 1e3].
ParticleSet propagate(const ParticleSet& particles, const DynamicModel& model, Rng& rng);

/// w_i <- w_i exp(f_i), normalized to sum to one.
ParticleSet weigh(const ParticleSet& particles, std::span<const double> scores);

/// Confidence f(z) of every particle's 32 x 32 warp. Particles are scored on up to
/// `threads` workers; results are gathered in particle order.
std::vector<double> score(const ParticleSet& particles, const Image& frame,
                          const obsmodel::Featurizer& featurize,
                          const obsmodel::Classifier& classifier, int threads = 1);

/// Classifier margin w.(standardized z) of every particle, the logit of `score`. Ranking
/// by margin equals ranking by confidence but does not collapse to ties once the
/// sigmoid rounds to 1.
std::vector<double> margins(const ParticleSet& particles, const Image& frame,
                            const obsmodel::Featurizer& featurize,
                            const obsmodel::Classifier& classifier, int threads = 1);

/// Systematic resampling with one uniform draw; output weights are 1/N.
ParticleSet resample(const ParticleSet& particles, Rng& rng);

/// Index of the highest score, lowest index on ties.
std::size_t best_index(std::span<const double> scores);

/// State of the highest-scoring particle.
AffineState estimate(const ParticleSet& particles, std::span<const double> scores);

}  // namespace slowtrack::pfilter

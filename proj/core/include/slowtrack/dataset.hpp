#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "slowtrack/image.hpp"

namespace slowtrack {

/// Boolean grid congruent with the frames it was computed from.
using InterestMask = Grid<std::uint8_t>;

/// Temporally ordered patches cropped from one tracked region.
///
/// Patches are flattened row-major. For pixel sessions `edge * edge == dim()`; sessions in
/// a learned feature space (layer-2 training data) carry `edge == 0`.
struct TrackSession {
  std::vector<Eigen::VectorXd> patches;
  int edge = 0;
  std::string sourceId;

  int frames() const noexcept { return static_cast<int>(patches.size()); }
  int dim() const noexcept { return patches.empty() ? 0 : static_cast<int>(patches.front().size()); }

  friend bool operator==(const TrackSession& a, const TrackSession& b);
};

namespace dataset {

/// Raw variance below which a patch counts as flat.
inline constexpr double kFlatVariance = 1e-6;

/// Per-patch standardization: subtract the mean and divide by the (population) standard
/// deviation. Flat patches map to the zero vector and the function returns false.
bool standardize(Eigen::Ref<Eigen::VectorXd> patch);

Eigen::VectorXd flatten(const Image& patch);
Image unflatten(const Eigen::VectorXd& values, int edge);

/// Accumulated absolute inter-frame difference thresholded at `threshold`; 4-connected
/// components with fewer than `minComponentArea` pixels are cleared.
InterestMask accumulate_difference_mask(std::span<const Image> frames, double threshold,
                                        int minComponentArea);

struct SamplingResult {
  std::vector<TrackSession> sessions;
  /// Set when no window overlaps the mask; `sessions` is then empty.
  bool noInterest = false;
  /// Attempts rejected because one of their patches was flat.
  int discardedFlat = 0;
};

/// Samples `nSessions` track sessions whose first window overlaps at least one mask bit.
/// Subsequent windows follow the content by exhaustive +-2 px SSD matching between
/// consecutive frames. Attempt `k` draws from a generator seeded with `seed ^ k`.
SamplingResult sample_track_sessions(std::span<const Image> frames, const InterestMask& mask,
                                     int edge, int nSessions, int nF, std::uint64_t seed,
                                     std::string_view sourceId = {});

/// One session per base patch: a constant-velocity trajectory of sub-pixel translation
/// (per-frame step drawn from [-maxShift, maxShift] per axis) and rotation (step from
/// [-maxRotationDeg, maxRotationDeg]) applied by bilinear resampling. Frame 0 is the base
/// patch itself. Session `i` draws from a generator seeded with `seed ^ i`.
std::vector<TrackSession> generate_synthetic_sessions(std::span<const Image> basePatches, int nF,
                                                      double maxShift, double maxRotationDeg,
                                                      std::uint64_t seed);

/// Random soft step edges (orientation, offset, width) in [0, 1].
std::vector<Image> make_edge_patches(int count, int edge, std::uint64_t seed);

/// Standardizes every patch in place and drops sessions containing a flat patch.
std::vector<TrackSession> standardize_sessions(std::vector<TrackSession> sessions);

/// Session file: "SLTK", version, (nSessions, nF, edge) as u32, f64 payload in
/// session-major, frame-major, row-major order, then one length-prefixed source id per
/// session. All integers little-endian.
void export_sessions(std::span<const TrackSession> sessions, const std::filesystem::path& path);
std::vector<TrackSession> import_sessions(const std::filesystem::path& path);

inline constexpr std::uint32_t kSessionFileVersion = 1;

}  // namespace dataset
}  // namespace slowtrack

#include "slowtrack/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <opencv2/imgproc.hpp>

#include "binary_io.hpp"

namespace slowtrack {

bool operator==(const TrackSession& a, const TrackSession& b) {
  if (a.edge != b.edge || a.sourceId != b.sourceId || a.patches.size() != b.patches.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.patches.size(); ++i) {
    if (a.patches[i].size() != b.patches[i].size()) return false;
    for (Eigen::Index k = 0; k < a.patches[i].size(); ++k) {
      // Bitwise: NaN payloads and signed zeros must survive a round trip too.
      if (std::bit_cast<std::uint64_t>(a.patches[i][k]) !=
          std::bit_cast<std::uint64_t>(b.patches[i][k])) {
        return false;
      }
    }
  }
  return true;
}

namespace dataset {

bool standardize(Eigen::Ref<Eigen::VectorXd> patch) {
  if (patch.size() == 0) return false;
  const double mean = patch.mean();
  patch.array() -= mean;
  const double variance = patch.squaredNorm() / static_cast<double>(patch.size());
  if (variance < kFlatVariance) {
    patch.setZero();
    return false;
  }
  patch /= std::sqrt(variance);
  return true;
}

Eigen::VectorXd flatten(const Image& patch) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(patch.size()));
  const auto values = patch.data();
  for (std::size_t i = 0; i < values.size(); ++i) out[static_cast<Eigen::Index>(i)] = values[i];
  return out;
}

Image unflatten(const Eigen::VectorXd& values, int edge) {
  if (static_cast<Eigen::Index>(edge) * edge != values.size()) {
    throw InvalidInput("vector length is not edge*edge");
  }
  Image out(edge, edge);
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = values[static_cast<Eigen::Index>(i)];
  return out;
}

InterestMask accumulate_difference_mask(std::span<const Image> frames, double threshold,
                                        int minComponentArea) {
  if (frames.size() < 2) throw InvalidInput("difference mask needs at least two frames");
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) throw InvalidInput("frames differ in dimensions");
  }
  const int width = frames.front().width();
  const int height = frames.front().height();

  Image accumulated(width, height, 0.0);
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const auto prev = frames[k - 1].data();
    const auto next = frames[k].data();
    auto acc = accumulated.data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::abs(next[i] - prev[i]);
  }

  cv::Mat bits(height, width, CV_8UC1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) bits.at<unsigned char>(y, x) = accumulated(x, y) > threshold;
  }

  InterestMask mask(width, height, 0);
  cv::Mat labels, stats, centroids;
  cv::connectedComponentsWithStats(bits, labels, stats, centroids, 4, CV_32S);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int label = labels.at<int>(y, x);
      if (label == 0) continue;
      mask(x, y) = stats.at<int>(label, cv::CC_STAT_AREA) >= minComponentArea;
    }
  }
  return mask;
}

namespace {

double window_ssd(const Image& a, int ax, int ay, const Image& b, int bx, int by, int edge) {
  double ssd = 0.0;
  for (int y = 0; y < edge; ++y) {
    for (int x = 0; x < edge; ++x) {
      const double d = a(ax + x, ay + y) - b(bx + x, by + y);
      ssd += d * d;
    }
  }
  return ssd;
}

}  // namespace

SamplingResult sample_track_sessions(std::span<const Image> frames, const InterestMask& mask,
                                     int edge, int nSessions, int nF, std::uint64_t seed,
                                     std::string_view sourceId) {
  if (frames.empty()) throw InvalidInput("no frames");
  const int width = frames.front().width();
  const int height = frames.front().height();
  if (edge < 1 || edge > std::min(width, height)) throw InvalidInput("patch edge exceeds frame");
  if (nF < 2 || nF > static_cast<int>(frames.size())) {
    throw InvalidInput("frames per session must be in [2, frame count]");
  }
  if (mask.width() != width || mask.height() != height) {
    throw InvalidInput("mask dimensions differ from frames");
  }
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) throw InvalidInput("frames differ in dimensions");
  }

  // Summed-area table of mask bits for O(1) window overlap queries.
  std::vector<int> integral(static_cast<std::size_t>(width + 1) * (height + 1), 0);
  auto sat = [&](int x, int y) -> int& {
    return integral[static_cast<std::size_t>(y) * (width + 1) + x];
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      sat(x + 1, y + 1) = mask(x, y) + sat(x, y + 1) + sat(x + 1, y) - sat(x, y);
    }
  }
  std::vector<std::pair<int, int>> candidates;
  for (int y = 0; y + edge <= height; ++y) {
    for (int x = 0; x + edge <= width; ++x) {
      const int count = sat(x + edge, y + edge) - sat(x, y + edge) - sat(x + edge, y) + sat(x, y);
      if (count > 0) candidates.emplace_back(x, y);
    }
  }

  SamplingResult result;
  if (candidates.empty()) {
    result.noInterest = true;
    return result;
  }

  constexpr int kSearchRadius = 2;
  constexpr int kAttemptsPerSession = 10;
  const int lastStart = static_cast<int>(frames.size()) - nF;
  const long maxAttempts = static_cast<long>(nSessions) * kAttemptsPerSession;
  for (long attempt = 0;
       static_cast<int>(result.sessions.size()) < nSessions && attempt < maxAttempts; ++attempt) {
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(attempt));
    const int start = std::uniform_int_distribution<int>(0, lastStart)(rng);
    const auto [x0, y0] = candidates[std::uniform_int_distribution<std::size_t>(
        0, candidates.size() - 1)(rng)];

    TrackSession session;
    session.edge = edge;
    session.sourceId = std::string(sourceId) + "#" + std::to_string(start + 1) + "@" +
                       std::to_string(x0) + "," + std::to_string(y0);
    int x = x0;
    int y = y0;
    bool flat = false;
    for (int f = 0; f < nF && !flat; ++f) {
      const Image& frame = frames[static_cast<std::size_t>(start + f)];
      if (f > 0) {
        const Image& prev = frames[static_cast<std::size_t>(start + f - 1)];
        double best = window_ssd(prev, x, y, frame, x, y, edge);
        int bestX = x;
        int bestY = y;
        for (int dy = -kSearchRadius; dy <= kSearchRadius; ++dy) {
          for (int dx = -kSearchRadius; dx <= kSearchRadius; ++dx) {
            const int nx = x + dx;
            const int ny = y + dy;
            if (nx < 0 || ny < 0 || nx + edge > width || ny + edge > height) continue;
            const double ssd = window_ssd(prev, x, y, frame, nx, ny, edge);
            if (ssd < best) {
              best = ssd;
              bestX = nx;
              bestY = ny;
            }
          }
        }
        x = bestX;
        y = bestY;
      }
      Eigen::VectorXd patch = flatten(crop(frame, x, y, edge, edge));
      flat = !standardize(patch);
      session.patches.push_back(std::move(patch));
    }
    if (flat) {
      ++result.discardedFlat;
      continue;
    }
    result.sessions.push_back(std::move(session));
  }
  return result;
}

std::vector<TrackSession> generate_synthetic_sessions(std::span<const Image> basePatches, int nF,
                                                      double maxShift, double maxRotationDeg,
                                                      std::uint64_t seed) {
  if (basePatches.empty()) throw InvalidInput("no base patches");
  if (nF < 2) throw InvalidInput("frames per session must be at least 2");
  if (maxShift < 0.0 || maxRotationDeg < 0.0) throw InvalidInput("negative trajectory bound");

  std::vector<TrackSession> sessions;
  sessions.reserve(basePatches.size());
  for (std::size_t i = 0; i < basePatches.size(); ++i) {
    const Image& base = basePatches[i];
    if (base.width() != base.height() || base.empty()) {
      throw InvalidInput("base patches must be square and nonempty");
    }
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> shift(-maxShift, maxShift);
    std::uniform_real_distribution<double> turn(-maxRotationDeg, maxRotationDeg);
    const double vx = shift(rng);
    const double vy = shift(rng);
    const double omega = turn(rng) * std::numbers::pi / 180.0;

    const int edge = base.width();
    const double c = (edge - 1) / 2.0;
    TrackSession session;
    session.edge = edge;
    session.sourceId = "synthetic#" + std::to_string(i);
    for (int f = 0; f < nF; ++f) {
      const double tx = f * vx;
      const double ty = f * vy;
      const double cs = std::cos(f * omega);
      const double sn = std::sin(f * omega);
      Image warped(edge, edge);
      for (int v = 0; v < edge; ++v) {
        for (int u = 0; u < edge; ++u) {
          // Inverse map: undo the translation, then rotate back about the patch center.
          const double px = u - c - tx;
          const double py = v - c - ty;
          const double sx = cs * px + sn * py + c;
          const double sy = -sn * px + cs * py + c;
          warped(u, v) = sample_bilinear_clamp(base, sx, sy);
        }
      }
      session.patches.push_back(flatten(warped));
    }
    sessions.push_back(std::move(session));
  }
  return sessions;
}

std::vector<Image> make_edge_patches(int count, int edge, std::uint64_t seed) {
  if (count < 0 || edge < 2) throw InvalidInput("bad edge patch request");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> offset(-edge / 4.0, edge / 4.0);
  std::uniform_real_distribution<double> softness(0.5, 1.5);
  std::bernoulli_distribution polarity(0.5);

  std::vector<Image> patches;
  patches.reserve(static_cast<std::size_t>(count));
  const double c = (edge - 1) / 2.0;
  for (int k = 0; k < count; ++k) {
    const double phi = angle(rng);
    const double nx = std::cos(phi);
    const double ny = std::sin(phi);
    const double d = offset(rng);
    const double width = softness(rng);
    const double sign = polarity(rng) ? 1.0 : -1.0;
    Image patch(edge, edge);
    for (int y = 0; y < edge; ++y) {
      for (int x = 0; x < edge; ++x) {
        const double s = nx * (x - c) + ny * (y - c) - d;
        patch(x, y) = 0.5 + 0.5 * sign * std::tanh(s / width);
      }
    }
    patches.push_back(std::move(patch));
  }
  return patches;
}

std::vector<TrackSession> standardize_sessions(std::vector<TrackSession> sessions) {
  std::vector<TrackSession> kept;
  kept.reserve(sessions.size());
  for (auto& session : sessions) {
    bool ok = true;
    for (auto& patch : session.patches) ok = standardize(patch) && ok;
    if (ok) kept.push_back(std::move(session));
  }
  return kept;
}

void export_sessions(std::span<const TrackSession> sessions, const std::filesystem::path& path) {
  const std::uint32_t nF = sessions.empty() ? 0 : static_cast<std::uint32_t>(sessions.front().frames());
  const std::uint32_t edge = sessions.empty() ? 0 : static_cast<std::uint32_t>(sessions.front().edge);
  for (const auto& s : sessions) {
    if (s.frames() != static_cast<int>(nF) || s.edge != static_cast<int>(edge) || s.edge <= 0) {
      throw InvalidInput("sessions must share frame count and a positive patch edge");
    }
    for (const auto& p : s.patches) {
      if (p.size() != static_cast<Eigen::Index>(edge) * edge) {
        throw InvalidInput("patch length does not match edge");
      }
    }
  }

  io::Writer out;
  out.magic("SLTK");
  out.u32(kSessionFileVersion);
  out.u32(static_cast<std::uint32_t>(sessions.size()));
  out.u32(nF);
  out.u32(edge);
  for (const auto& s : sessions) {
    for (const auto& p : s.patches) {
      for (Eigen::Index k = 0; k < p.size(); ++k) out.f64(p[k]);
    }
  }
  for (const auto& s : sessions) {
    out.u32(static_cast<std::uint32_t>(s.sourceId.size()));
    out.bytes(s.sourceId);
  }
  out.save(path);
}

std::vector<TrackSession> import_sessions(const std::filesystem::path& path) {
  auto in = io::Reader::open(path);
  in.expect_magic("SLTK");
  const std::size_t versionAt = in.offset();
  const auto version = in.u32("version");
  if (version != kSessionFileVersion) {
    throw FormatError("unsupported session file version " + std::to_string(version), versionAt);
  }
  const auto count = in.u32("session count");
  const auto nF = in.u32("frames per session");
  const std::size_t edgeAt = in.offset();
  const auto edge = in.u32("patch edge");
  if (count > 0 && (nF < 1 || edge < 1)) throw FormatError("zero-sized sessions", edgeAt);

  const std::uint64_t dim = static_cast<std::uint64_t>(edge) * edge;
  const std::uint64_t payload = static_cast<std::uint64_t>(count) * nF * dim * 8;
  if (payload > in.remaining()) throw FormatError("truncated payload", in.offset());

  std::vector<TrackSession> sessions(count);
  for (auto& s : sessions) {
    s.edge = static_cast<int>(edge);
    s.patches.assign(nF, Eigen::VectorXd(static_cast<Eigen::Index>(dim)));
    for (auto& p : s.patches) {
      for (Eigen::Index k = 0; k < p.size(); ++k) p[k] = in.f64("patch payload");
    }
  }
  for (auto& s : sessions) {
    const auto length = in.u32("source id length");
    s.sourceId = in.bytes(length, "source id");
  }
  in.expect_end();
  return sessions;
}

}  // namespace dataset
}  // namespace slowtrack

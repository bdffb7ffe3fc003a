#include "slowtrack/affine.hpp"

#include <algorithm>

namespace slowtrack {

AffineState AffineState::from_box(const Box& box) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw InvalidInput("degenerate box (zero area)");
  return {box.center_x(), box.center_y(), box.w / kTemplateEdge, box.h / box.w};
}

bool clamp_to_image(AffineState& state, int width, int height) {
  const auto clampAxis = [](double center, double size, int extent) {
    if (size >= extent) return extent / 2.0;
    return std::clamp(center, size / 2.0, extent - size / 2.0);
  };
  const double x = clampAxis(state.x, state.width(), width);
  const double y = clampAxis(state.y, state.height(), height);
  const bool moved = x != state.x || y != state.y;
  state.x = x;
  state.y = y;
  return moved;
}

Image crop_and_warp(const Image& frame, const AffineState& state) {
  if (!(state.scale > 0.0) || !(state.aspect > 0.0)) throw InvalidInput("non-positive scale or aspect");
  constexpr int kEdge = static_cast<int>(AffineState::kTemplateEdge);
  const Box box = state.box();
  const double sx = box.w / kEdge;
  const double sy = box.h / kEdge;
  Image out(kEdge, kEdge);
  for (int v = 0; v < kEdge; ++v) {
    // Continuous edge coordinate of the template pixel center, shifted to array indices.
    const double py = box.y + (v + 0.5) * sy - 0.5;
    for (int u = 0; u < kEdge; ++u) {
      const double px = box.x + (u + 0.5) * sx - 0.5;
      out(u, v) = sample_bilinear_zero(frame, px, py);
    }
  }
  return out;
}

}  // namespace slowtrack

#pragma once

#include "slowtrack/image.hpp"

namespace slowtrack {

/// Axis-aligned box: top-left corner and size, in pixels. Pixel i spans [i, i + 1).
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double center_x() const noexcept { return x + w / 2.0; }
  double center_y() const noexcept { return y + h / 2.0; }
  double area() const noexcept { return w * h; }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Particle state: box center, width relative to the 32-pixel template, and
/// height / width ratio.
struct AffineState {
  static constexpr double kTemplateEdge = 32.0;

  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;
  double aspect = 1.0;

  double width() const noexcept { return scale * kTemplateEdge; }
  double height() const noexcept { return width() * aspect; }
  Box box() const noexcept { return {x - width() / 2.0, y - height() / 2.0, width(), height()}; }

  /// Throws InvalidInput for zero-area boxes.
  static AffineState from_box(const Box& box);

  friend bool operator==(const AffineState&, const AffineState&) = default;
};

/// Moves the box center so the box lies inside a width x height image (centered when the
/// box is larger than the image). Returns true when the state had to move.
bool clamp_to_image(AffineState& state, int width, int height);

/// Bilinearly resamples the state's box to a 32 x 32 template. Samples falling outside
/// the frame read as zero.
Image crop_and_warp(const Image& frame, const AffineState& state);

}  // namespace slowtrack

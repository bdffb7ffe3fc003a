#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "slowtrack/errors.hpp"

namespace slowtrack {

/// Dense row-major 2-D grid. Pixel (x, y) is column x of row y.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidInput("negative grid dimensions");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Grayscale intensities, nominally in [0, 1].
using Image = Grid<double>;

/// Bilinear sample at continuous array coordinates (pixel centers at integers).
/// Neighbours that fall outside the image contribute zero.
double sample_bilinear_zero(const Image& image, double x, double y);

/// Bilinear sample with coordinates clamped to the image border.
double sample_bilinear_clamp(const Image& image, double x, double y);

/// Copies the w x h window whose top-left pixel is (x0, y0). The window must lie inside.
Image crop(const Image& image, int x0, int y0, int w, int h);

/// Bilinear resize onto a target grid, pixel-center aligned.
Image resize_bilinear(const Image& image, int width, int height);

/// Reads an 8-bit PNG/JPEG. Colour input is converted with luma weights 0.299/0.587/0.114
/// (channels as R, G, B), then scaled to [0, 1].
Image load_gray(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG; values are clamped to [0, 1] and rounded.
void save_png(const Image& image, const std::filesystem::path& path);

/// Image files (.png, .jpg, .jpeg) of a directory in lexicographic filename order.
std::vector<std::filesystem::path> list_sequence(const std::filesystem::path& dir);

/// Loads every frame of a sequence directory; all frames must share dimensions.
std::vector<Image> load_sequence(const std::filesystem::path& dir);

}  // namespace slowtrack

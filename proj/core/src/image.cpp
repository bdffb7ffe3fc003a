#include "slowtrack/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace slowtrack {

double sample_bilinear_zero(const Image& image, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;

  auto at = [&](int px, int py) { return image.contains(px, py) ? image(px, py) : 0.0; };

  double value = 0.0;
  // Skip zero-weight taps so integer-aligned samples reproduce pixels exactly.
  if (ax != 1.0 && ay != 1.0) value += (1.0 - ax) * (1.0 - ay) * at(x0, y0);
  if (ax != 0.0 && ay != 1.0) value += ax * (1.0 - ay) * at(x0 + 1, y0);
  if (ax != 1.0 && ay != 0.0) value += (1.0 - ax) * ay * at(x0, y0 + 1);
  if (ax != 0.0 && ay != 0.0) value += ax * ay * at(x0 + 1, y0 + 1);
  return value;
}

double sample_bilinear_clamp(const Image& image, double x, double y) {
  if (image.empty()) throw InvalidInput("sample from empty image");
  x = std::clamp(x, 0.0, static_cast<double>(image.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(image.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, image.width() - 1);
  const int y1 = std::min(y0 + 1, image.height() - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  double value = 0.0;
  if (ax != 1.0 && ay != 1.0) value += (1.0 - ax) * (1.0 - ay) * image(x0, y0);
  if (ax != 0.0 && ay != 1.0) value += ax * (1.0 - ay) * image(x1, y0);
  if (ax != 1.0 && ay != 0.0) value += (1.0 - ax) * ay * image(x0, y1);
  if (ax != 0.0 && ay != 0.0) value += ax * ay * image(x1, y1);
  return value;
}

Image crop(const Image& image, int x0, int y0, int w, int h) {
  if (w < 0 || h < 0 || x0 < 0 || y0 < 0 || x0 + w > image.width() ||
      y0 + h > image.height()) {
    throw InvalidInput("crop window outside image");
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = image(x0 + x, y0 + y);
  }
  return out;
}

Image resize_bilinear(const Image& image, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidInput("resize to empty grid");
  Image out(width, height);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out(x, y) = sample_bilinear_clamp(image, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
    }
  }
  return out;
}

Image load_gray(const std::filesystem::path& path) {
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw FormatError("cannot decode image " + path.string());
  if (raw.depth() != CV_8U) throw FormatError("expected 8-bit image: " + path.string());

  Image out(raw.cols, raw.rows);
  const int channels = raw.channels();
  for (int y = 0; y < raw.rows; ++y) {
    const auto* row = raw.ptr<unsigned char>(y);
    for (int x = 0; x < raw.cols; ++x) {
      const unsigned char* px = row + static_cast<std::ptrdiff_t>(x) * channels;
      double v = 0.0;
      if (channels == 1 || channels == 2) {
        v = px[0];
      } else {
        // OpenCV stores colour as B, G, R(, A).
        v = 0.299 * px[2] + 0.587 * px[1] + 0.114 * px[0];
      }
      out(x, y) = v / 255.0;
    }
  }
  return out;
}

void save_png(const Image& image, const std::filesystem::path& path) {
  cv::Mat mat(image.height(), image.width(), CV_8UC1);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < image.width(); ++x) {
      const double v = std::clamp(image(x, y), 0.0, 1.0);
      row[x] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }
  if (!cv::imwrite(path.string(), mat)) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

std::vector<std::filesystem::path> list_sequence(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw InvalidInput("sequence directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

std::vector<Image> load_sequence(const std::filesystem::path& dir) {
  std::vector<Image> frames;
  for (const auto& file : list_sequence(dir)) {
    frames.push_back(load_gray(file));
    if (!frames.back().same_shape(frames.front())) {
      throw InvalidInput("frame dimensions differ within sequence: " + file.string());
    }
  }
  if (frames.empty()) throw InvalidInput("no image files in " + dir.string());
  return frames;
}

}  // namespace slowtrack

#pragma once

#include <cstdint>
#include <vector>

namespace signscan {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// 8-bit RGB raster, row-major interleaved triples.
class RgbImage {
 public:
  RgbImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

  std::uint8_t& at(int x, int y, int channel) { return data_[3 * (static_cast<std::size_t>(y) * width_ + x) + channel]; }
  std::uint8_t at(int x, int y, int channel) const { return data_[3 * (static_cast<std::size_t>(y) * width_ + x) + channel]; }

  void set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &data_[3 * (static_cast<std::size_t>(y) * width_ + x)];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// Real-valued raster in [0,1], row-major.
class GrayImage {
 public:
  GrayImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<double>& data() const { return data_; }

 private:
  int width_;
  int height_;
  std::vector<double> data_;
};

/// Boolean raster, row-major, stored as 0/1 bytes.
class BinaryMask {
 public:
  BinaryMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

  bool get(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// An 8-connected foreground component with its bounding box.
struct Blob {
  std::vector<Point> pixels;  // discovery order
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }
  int area() const { return static_cast<int>(pixels.size()); }
};

/// Boundary pixels of a blob: foreground pixels with a background 8-neighbor.
struct EdgeSet {
  std::vector<Point> points;
};

enum class MorphOp { Open, Close };

/// All 8-connected foreground components with at least min_area pixels,
/// ordered by first pixel in row-major scan order.
std::vector<Blob> connected_components(const BinaryMask& mask, int min_area);

/// Morphological open (erode then dilate) or close (dilate then erode) with a
/// square structuring element of side 2*radius+1. Pixels outside the image
/// count as background for erosion.
BinaryMask morph_filter(const BinaryMask& mask, MorphOp op, int radius);

/// Blob pixels having at least one background 8-neighbor; the image border
/// counts as background.
EdgeSet extract_edges(const BinaryMask& mask, const Blob& blob);

}  // namespace signscan

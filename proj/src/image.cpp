#include "signscan/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace signscan {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
}

}  // namespace

RgbImage::RgbImage(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(3 * static_cast<std::size_t>(width) * height, 0);
}

GrayImage::GrayImage(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, 0.0);
}

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::vector<Blob> connected_components(const BinaryMask& mask, int min_area) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h, 0);
  std::vector<Blob> blobs;
  std::vector<Point> stack;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.get(x, y) || visited[static_cast<std::size_t>(y) * w + x]) continue;
      Blob blob;
      blob.x_min = blob.x_max = x;
      blob.y_min = blob.y_max = y;
      stack.clear();
      stack.push_back({x, y});
      visited[static_cast<std::size_t>(y) * w + x] = 1;
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        blob.pixels.push_back(p);
        blob.x_min = std::min(blob.x_min, p.x);
        blob.x_max = std::max(blob.x_max, p.x);
        blob.y_min = std::min(blob.y_min, p.y);
        blob.y_max = std::max(blob.y_max, p.y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (!mask.in_bounds(nx, ny) || !mask.get(nx, ny)) continue;
            auto& seen = visited[static_cast<std::size_t>(ny) * w + nx];
            if (seen) continue;
            seen = 1;
            stack.push_back({nx, ny});
          }
        }
      }
      if (blob.area() >= min_area) blobs.push_back(std::move(blob));
    }
  }
  return blobs;
}

namespace {

// Separable min/max over a (2r+1)-wide window. For erosion, out-of-image
// samples are background (false); for dilation they simply contribute nothing.
BinaryMask erode(const BinaryMask& in, int radius) {
  const int w = in.width();
  const int h = in.height();
  BinaryMask rows(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool all = true;
      for (int dx = -radius; dx <= radius && all; ++dx) {
        const int nx = x + dx;
        all = in.in_bounds(nx, y) && in.get(nx, y);
      }
      rows.set(x, y, all);
    }
  }
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool all = true;
      for (int dy = -radius; dy <= radius && all; ++dy) {
        const int ny = y + dy;
        all = ny >= 0 && ny < h && rows.get(x, ny);
      }
      out.set(x, y, all);
    }
  }
  return out;
}

BinaryMask dilate(const BinaryMask& in, int radius) {
  const int w = in.width();
  const int h = in.height();
  BinaryMask rows(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int dx = -radius; dx <= radius && !any; ++dx) {
        const int nx = x + dx;
        any = in.in_bounds(nx, y) && in.get(nx, y);
      }
      rows.set(x, y, any);
    }
  }
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int dy = -radius; dy <= radius && !any; ++dy) {
        const int ny = y + dy;
        any = ny >= 0 && ny < h && rows.get(x, ny);
      }
      out.set(x, y, any);
    }
  }
  return out;
}

}  // namespace

BinaryMask morph_filter(const BinaryMask& mask, MorphOp op, int radius) {
  if (radius < 1) throw std::invalid_argument("morph radius must be >= 1");
  if (op == MorphOp::Open) return dilate(erode(mask, radius), radius);
  return erode(dilate(mask, radius), radius);
}

EdgeSet extract_edges(const BinaryMask& mask, const Blob& blob) {
  EdgeSet edges;
  for (const Point& p : blob.pixels) {
    bool boundary = false;
    for (int dy = -1; dy <= 1 && !boundary; ++dy) {
      for (int dx = -1; dx <= 1 && !boundary; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = p.x + dx;
        const int ny = p.y + dy;
        boundary = !mask.in_bounds(nx, ny) || !mask.get(nx, ny);
      }
    }
    if (boundary) edges.points.push_back(p);
  }
  return edges;
}

}  // namespace signscan

#include "signscan/segmentation.hpp"

#include <cmath>
#include <stdexcept>

namespace signscan {

GrayImage enhance_color(const RgbImage& img, EnhanceChannel ch) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int r = img.at(x, y, 0);
      const int g = img.at(x, y, 1);
      const int b = img.at(x, y, 2);
      const int s = r + g + b;
      if (s == 0) continue;  // black carries no chromatic evidence
      const int diff = (ch == EnhanceChannel::Red) ? std::min(r - g, r - b) : std::min(b - g, b - r);
      if (diff > 0) out.at(x, y) = static_cast<double>(diff) / s;
    }
  }
  return out;
}

BinaryMask adaptive_threshold(const GrayImage& gray, double alpha) {
  const auto& v = gray.data();
  const double n = static_cast<double>(v.size());
  double sum = 0.0, sum_sq = 0.0;
  for (double x : v) {
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double variance = std::max(0.0, sum_sq / n - mean * mean);
  const double threshold = mean + alpha * std::sqrt(variance);

  BinaryMask mask(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      mask.set(x, y, gray.at(x, y) > threshold);
    }
  }
  return mask;
}

BinaryMask segment_mask(const RgbImage& img, EnhanceChannel ch, const SegmentationConfig& cfg) {
  if (cfg.alpha <= 0 || cfg.morph_radius < 1 || cfg.min_area < 1) throw std::invalid_argument("bad segmentation config");
  BinaryMask mask = adaptive_threshold(enhance_color(img, ch), cfg.alpha);
  mask = morph_filter(mask, MorphOp::Open, cfg.morph_radius);
  mask = morph_filter(mask, MorphOp::Close, cfg.morph_radius);
  return mask;
}

std::vector<Blob> segment(const RgbImage& img, EnhanceChannel ch, const SegmentationConfig& cfg) {
  return connected_components(segment_mask(img, ch, cfg), cfg.min_area);
}

}  // namespace signscan

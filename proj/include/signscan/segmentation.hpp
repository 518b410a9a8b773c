#pragma once

#include <vector>

#include "signscan/image.hpp"

namespace signscan {

enum class EnhanceChannel { Red, Blue };

struct SegmentationConfig {
  double alpha = 4.0;   // threshold multiplier on the standard deviation
  int morph_radius = 1;
  int min_area = 50;
};

/// Chromatic evidence map. Per pixel with S = R+G+B:
///   Red:  max(0, min(R-G, R-B) / S)
///   Blue: max(0, min(B-G, B-R) / S)
/// Black pixels (S = 0) map to 0.
GrayImage enhance_color(const RgbImage& img, EnhanceChannel ch);

/// Global threshold T = mean + alpha * population standard deviation;
/// mask is gray > T (strict).
BinaryMask adaptive_threshold(const GrayImage& gray, double alpha);

/// enhance -> threshold -> open -> close. The mask the ROI blobs live in.
BinaryMask segment_mask(const RgbImage& img, EnhanceChannel ch, const SegmentationConfig& cfg);

/// Full single-channel segmentation: segment_mask + connected components of
/// at least cfg.min_area pixels.
std::vector<Blob> segment(const RgbImage& img, EnhanceChannel ch, const SegmentationConfig& cfg);

}  // namespace signscan

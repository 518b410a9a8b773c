#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "signscan/image.hpp"

namespace signscan {

/// 32x32 binary patch, row-major.
struct Patch32 {
  static constexpr int kSize = 32;
  std::array<std::uint8_t, kSize * kSize> data{};

  bool get(int row, int col) const { return data[static_cast<std::size_t>(row) * kSize + col] != 0; }
  void set(int row, int col, bool v) { data[static_cast<std::size_t>(row) * kSize + col] = v ? 1 : 0; }
};

/// Normalized, symmetric gray-level co-occurrence matrix.
struct Glcm {
  int levels = 2;
  std::vector<double> p;  // levels x levels, row-major

  double at(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
  double& at(int i, int j) { return p[static_cast<std::size_t>(i) * levels + j]; }
};

struct GlcmOffset {
  int dx = 0;
  int dy = 0;
};

/// The four distance-1 offsets pooled by default.
std::span<const GlcmOffset> default_glcm_offsets();

struct HaralickFeatures {
  double hom = 0.0;
  double corr = 0.0;
  double var = 0.0;
  double diff_var = 0.0;
};

struct FeatureVector {
  static constexpr int kDims = 6;

  double hom = 0.0;
  double corr = 0.0;
  double var = 0.0;
  double diff_var = 0.0;
  double z00_mag = 0.0;
  double z10_mag = 0.0;

  std::array<double, kDims> to_array() const { return {hom, corr, var, diff_var, z00_mag, z10_mag}; }
};

/// Crop the blob's bounding box, pad the shorter side symmetrically with
/// background to a square, and nearest-neighbor sample to 32x32. Only pixels
/// belonging to the blob count as foreground.
Patch32 resize_binary(const BinaryMask& mask, const Blob& blob);

/// Co-occurrence counts over a quantized-level raster (levels in
/// [0, n_levels)), accumulated symmetrically over all offsets, normalized to
/// sum 1. Generic core behind the binary-patch overload.
Glcm glcm_from_levels(std::span<const int> levels, int width, int height, int n_levels,
                      std::span<const GlcmOffset> offsets);

/// GLCM of a binary patch (2 levels: background 0, foreground 1).
Glcm compute_glcm(const Patch32& patch, std::span<const GlcmOffset> offsets = default_glcm_offsets());

/// The four texture statistics: hom = sum p^2; corr = (sum ij p - mx*my)/(sx*sy)
/// with 0 when either marginal deviation vanishes; var = sum (i-mx)^2 p;
/// diff_var = sum k^2 p_{|x-y|}(k).
HaralickFeatures haralick_features(const Glcm& g);

/// Pseudo-Zernike moment of order n, repetition m over the unit disk
/// inscribed in the patch. Throws InvalidIndices when |m| > n.
std::complex<double> pseudo_zernike(const Patch32& patch, int n, int m);

/// Pseudo-Zernike radial polynomial R_nm(rho).
double pseudo_zernike_radial(int n, int m, double rho);

/// Haralick features of the default-offset GLCM plus |Z00|, |Z10|.
FeatureVector feature_vector(const Patch32& patch);

/// CSV rows: hom,corr,var,diff_var,z00,z10[,label]. A header row is written.
void write_features_csv(std::ostream& os, std::span<const std::pair<FeatureVector, int>> labeled);
std::vector<std::pair<FeatureVector, int>> read_features_csv(std::istream& is);

}  // namespace signscan

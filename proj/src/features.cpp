#include "signscan/features.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "signscan/errors.hpp"
#include "signscan/format.hpp"

namespace signscan {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr GlcmOffset kDefaultOffsets[] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};

}  // namespace

std::span<const GlcmOffset> default_glcm_offsets() { return kDefaultOffsets; }

Patch32 resize_binary(const BinaryMask& mask, const Blob& blob) {
  const int w = blob.width();
  const int h = blob.height();

  // local bitmap of blob membership (the bbox may contain other blobs)
  std::vector<std::uint8_t> local(static_cast<std::size_t>(w) * h, 0);
  for (const Point& p : blob.pixels) {
    local[static_cast<std::size_t>(p.y - blob.y_min) * w + (p.x - blob.x_min)] = 1;
  }
  (void)mask;

  const int size = std::max(w, h);
  const int pad_x = (size - w) / 2;
  const int pad_y = (size - h) / 2;

  Patch32 patch;
  for (int r = 0; r < Patch32::kSize; ++r) {
    // nearest-neighbor: source = floor((t + 0.5) * size / 32), exact in ints
    const int sy = (2 * r + 1) * size / (2 * Patch32::kSize) - pad_y;
    for (int c = 0; c < Patch32::kSize; ++c) {
      const int sx = (2 * c + 1) * size / (2 * Patch32::kSize) - pad_x;
      const bool fg = sx >= 0 && sx < w && sy >= 0 && sy < h && local[static_cast<std::size_t>(sy) * w + sx] != 0;
      patch.set(r, c, fg);
    }
  }
  return patch;
}

Glcm glcm_from_levels(std::span<const int> levels, int width, int height, int n_levels,
                      std::span<const GlcmOffset> offsets) {
  Glcm g;
  g.levels = n_levels;
  g.p.assign(static_cast<std::size_t>(n_levels) * n_levels, 0.0);
  double total = 0.0;
  for (const GlcmOffset& off : offsets) {
    for (int y = 0; y < height; ++y) {
      const int ny = y + off.dy;
      if (ny < 0 || ny >= height) continue;
      for (int x = 0; x < width; ++x) {
        const int nx = x + off.dx;
        if (nx < 0 || nx >= width) continue;
        const int i = levels[static_cast<std::size_t>(y) * width + x];
        const int j = levels[static_cast<std::size_t>(ny) * width + nx];
        g.at(i, j) += 1.0;
        g.at(j, i) += 1.0;
        total += 2.0;
      }
    }
  }
  if (total > 0.0) {
    for (double& v : g.p) v /= total;
  }
  return g;
}

Glcm compute_glcm(const Patch32& patch, std::span<const GlcmOffset> offsets) {
  std::vector<int> levels(Patch32::kSize * Patch32::kSize);
  for (int r = 0; r < Patch32::kSize; ++r) {
    for (int c = 0; c < Patch32::kSize; ++c) {
      levels[static_cast<std::size_t>(r) * Patch32::kSize + c] = patch.get(r, c) ? 1 : 0;
    }
  }
  return glcm_from_levels(levels, Patch32::kSize, Patch32::kSize, 2, offsets);
}

HaralickFeatures haralick_features(const Glcm& g) {
  const int n = g.levels;
  HaralickFeatures f;

  std::vector<double> px(n, 0.0), py(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = g.at(i, j);
      f.hom += p * p;
      px[i] += p;
      py[j] += p;
    }
  }

  double mx = 0.0, my = 0.0, ex2 = 0.0, ey2 = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += i * px[i];
    my += i * py[i];
    ex2 += static_cast<double>(i) * i * px[i];
    ey2 += static_cast<double>(i) * i * py[i];
  }
  const double sx = std::sqrt(std::max(0.0, ex2 - mx * mx));
  const double sy = std::sqrt(std::max(0.0, ey2 - my * my));

  double sum_ij = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = g.at(i, j);
      sum_ij += static_cast<double>(i) * j * p;
      f.var += (i - mx) * (i - mx) * p;
    }
  }
  f.corr = (sx * sy > 0.0) ? (sum_ij - mx * my) / (sx * sy) : 0.0;

  for (int k = 0; k < n; ++k) {
    double pk = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (std::abs(i - j) == k) pk += g.at(i, j);
      }
    }
    f.diff_var += static_cast<double>(k) * k * pk;
  }
  return f;
}

double pseudo_zernike_radial(int n, int m, double rho) {
  const int am = std::abs(m);
  // factorial table up to 2n+1
  std::vector<double> fact(static_cast<std::size_t>(2 * n + 2), 1.0);
  for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  double r = 0.0;
  for (int s = 0; s <= n - am; ++s) {
    const double num = fact[static_cast<std::size_t>(2 * n + 1 - s)];
    const double den = fact[static_cast<std::size_t>(s)] * fact[static_cast<std::size_t>(n + am + 1 - s)] *
                       fact[static_cast<std::size_t>(n - am - s)];
    const double coeff = ((s % 2 == 0) ? 1.0 : -1.0) * num / den;
    r += coeff * std::pow(rho, n - s);
  }
  return r;
}

std::complex<double> pseudo_zernike(const Patch32& patch, int n, int m) {
  if (n < 0 || std::abs(m) > n) throw InvalidIndices();
  constexpr int size = Patch32::kSize;
  constexpr double delta = (2.0 / size) * (2.0 / size);

  std::complex<double> sum{0.0, 0.0};
  for (int r = 0; r < size; ++r) {
    const double y = (2.0 * r + 1.0) / size - 1.0;
    for (int c = 0; c < size; ++c) {
      if (!patch.get(r, c)) continue;
      const double x = (2.0 * c + 1.0) / size - 1.0;
      const double rho = std::hypot(x, y);
      if (rho > 1.0) continue;
      const double phi = std::atan2(y, x);
      const double radial = pseudo_zernike_radial(n, m, rho);
      sum += radial * std::polar(1.0, -m * phi);
    }
  }
  return sum * ((n + 1) / kPi) * delta;
}

FeatureVector feature_vector(const Patch32& patch) {
  const HaralickFeatures h = haralick_features(compute_glcm(patch));
  FeatureVector fv;
  fv.hom = h.hom;
  fv.corr = h.corr;
  fv.var = h.var;
  fv.diff_var = h.diff_var;
  fv.z00_mag = std::abs(pseudo_zernike(patch, 0, 0));
  fv.z10_mag = std::abs(pseudo_zernike(patch, 1, 0));
  return fv;
}

void write_features_csv(std::ostream& os, std::span<const std::pair<FeatureVector, int>> labeled) {
  os << "hom,corr,var,diff_var,z00,z10,label\n";
  for (const auto& [fv, label] : labeled) {
    os << format_double(fv.hom) << ',' << format_double(fv.corr) << ',' << format_double(fv.var) << ','
       << format_double(fv.diff_var) << ',' << format_double(fv.z00_mag) << ',' << format_double(fv.z10_mag) << ','
       << label << '\n';
  }
}

std::vector<std::pair<FeatureVector, int>> read_features_csv(std::istream& is) {
  std::vector<std::pair<FeatureVector, int>> out;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("hom", 0) == 0) continue;  // header
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6 && fields.size() != 7) throw Error("bad feature CSV row: " + line);
    FeatureVector fv;
    fv.hom = parse_double(fields[0]);
    fv.corr = parse_double(fields[1]);
    fv.var = parse_double(fields[2]);
    fv.diff_var = parse_double(fields[3]);
    fv.z00_mag = parse_double(fields[4]);
    fv.z10_mag = parse_double(fields[5]);
    int label = 0;
    if (fields.size() == 7) {
      label = static_cast<int>(parse_long(fields[6]));
      if (label != 1 && label != -1) throw Error("bad label in feature CSV: " + fields[6]);
    }
    out.emplace_back(fv, label);
  }
  return out;
}

}  // namespace signscan

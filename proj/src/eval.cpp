#include "signscan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "signscan/errors.hpp"
#include "signscan/format.hpp"
#include "signscan/rng.hpp"

namespace signscan {

namespace {

constexpr double kPi = std::numbers::pi;

bool gate_geometry(const EllipseParams& e, const GroundTruth& g, double* dist_out) {
  const double dist = std::hypot(e.center.x - g.cx, e.center.y - g.cy);
  if (dist > 0.5 * g.radius) return false;
  const double ratio = std::max(e.semi_major, e.semi_minor) / g.radius;
  if (ratio < 0.6 || ratio > 1.4) return false;
  if (dist_out) *dist_out = dist;
  return true;
}

}  // namespace

MatchCounts match_detections(const std::vector<DetectionRecord>& dets,
                             const std::vector<GroundTruth>& gts) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].svm_score > dets[b].svm_score; });

  std::vector<char> used(gts.size(), 0);
  MatchCounts c;
  for (std::size_t di : order) {
    std::size_t best = gts.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (used[gi] || dets[di].image_id != gts[gi].image_id) continue;
      double dist = 0.0;
      if (!gate_geometry(dets[di].ellipse, gts[gi], &dist)) continue;
      if (dist < best_dist) {
        best = gi;
        best_dist = dist;
      }
    }
    if (best < gts.size()) {
      used[best] = 1;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<long>(gts.size()) - c.tp;
  return c;
}

std::pair<double, double> precision_recall(const MatchCounts& c) {
  const double precision = (c.tp + c.fp == 0) ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double recall = (c.tp + c.fn == 0) ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return {precision, recall};
}

std::vector<PrPoint> pr_curve(const std::vector<DetectionRecord>& dets,
                              const std::vector<GroundTruth>& gts) {
  std::vector<double> thresholds;
  thresholds.push_back(std::numeric_limits<double>::infinity());
  for (const DetectionRecord& d : dets) thresholds.push_back(d.svm_score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<PrPoint> out;
  out.reserve(thresholds.size());
  for (double th : thresholds) {
    std::vector<DetectionRecord> kept;
    for (const DetectionRecord& d : dets) {
      if (d.svm_score >= th) kept.push_back(d);
    }
    const auto [precision, recall] = precision_recall(match_detections(kept, gts));
    out.push_back({th, precision, recall});
  }
  return out;
}

namespace {

struct Placement {
  double cx = 0.0, cy = 0.0, r = 0.0;
};

bool fits(const std::vector<Placement>& placed, double cx, double cy, double r) {
  for (const Placement& p : placed) {
    if (std::hypot(cx - p.cx, cy - p.cy) < r + p.r + 4.0) return false;
  }
  return true;
}

constexpr std::uint8_t kRed[3] = {200, 20, 20};
constexpr std::uint8_t kBlue[3] = {20, 20, 200};
constexpr std::uint8_t kWhite[3] = {255, 255, 255};

enum SignKind { kRingCircle = 0, kRingOctagon = 1, kBlueDisk = 2 };

struct SignSpec {
  int kind = 0;
  int cx = 0, cy = 0, r = 0, t = 0;
  double phi = 0.0;
};

struct DistractorSpec {
  int kind = 0;  // 0 rectangle, 1 wobbled disk; both striped inside a solid border
  bool blue = false;
  int x0 = 0, y0 = 0, w = 0, h = 0;          // rectangle
  int cx = 0, cy = 0, r0 = 0;                // blob
  double phi1 = 0.0, phi2 = 0.0;             // boundary wobble phases
};

void validate(const SceneConfig& cfg) {
  if (cfg.width < 40 || cfg.height < 40) throw std::invalid_argument("scene: frame too small");
  if (cfg.n_signs < 1 || cfg.n_signs > 3) throw std::invalid_argument("scene: n_signs must be 1..3");
  if (cfg.n_distractors < 0) throw std::invalid_argument("scene: n_distractors must be nonnegative");
  if (!(cfg.noise_level >= 0.0 && cfg.noise_level <= 1.0)) {
    throw std::invalid_argument("scene: noise_level must be in [0,1]");
  }
}

std::vector<SignSpec> place_signs(const SceneConfig& cfg, Rng& rng, std::vector<Placement>& placed) {
  std::vector<SignSpec> specs;
  for (int i = 0; i < cfg.n_signs; ++i) {
    bool ok = false;
    SignSpec s;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      const int r = rng.uniform_int(10, 30);
      if (cfg.width - 3 - r < r + 2 || cfg.height - 3 - r < r + 2) continue;
      const int cx = rng.uniform_int(r + 2, cfg.width - 3 - r);
      const int cy = rng.uniform_int(r + 2, cfg.height - 3 - r);
      if (!fits(placed, cx, cy, r)) continue;
      s.cx = cx;
      s.cy = cy;
      s.r = r;
      ok = true;
    }
    if (!ok) throw LayoutFailure();
    s.kind = static_cast<int>(rng.below(3));
    if (s.kind != kBlueDisk) {
      // rim at least 5 px so the two rim boundaries stay resolvable as
      // separate curves; cap at 40% of the radius to keep the core visible
      s.t = rng.uniform_int(5, std::max(5, std::min(8, 2 * s.r / 5)));
    }
    if (s.kind == kRingOctagon) s.phi = rng.uniform(0.0, kPi / 4.0);
    placed.push_back({static_cast<double>(s.cx), static_cast<double>(s.cy), static_cast<double>(s.r)});
    specs.push_back(s);
  }
  return specs;
}

std::vector<DistractorSpec> place_distractors(const SceneConfig& cfg, Rng& rng,
                                              std::vector<Placement>& placed) {
  std::vector<DistractorSpec> specs;
  for (int i = 0; i < cfg.n_distractors; ++i) {
    DistractorSpec d;
    d.kind = static_cast<int>(rng.below(2));
    d.blue = rng.below(2) == 1;
    if (d.kind == 0) {
      d.w = rng.uniform_int(20, 44);
      d.h = rng.uniform_int(20, 44);
      if (cfg.width - 2 - d.w < 2 || cfg.height - 2 - d.h < 2) continue;
      const double bound = std::hypot(d.w, d.h) / 2.0;
      for (int attempt = 0; attempt < 100; ++attempt) {
        const int x0 = rng.uniform_int(2, cfg.width - 2 - d.w);
        const int y0 = rng.uniform_int(2, cfg.height - 2 - d.h);
        const double cx = x0 + d.w / 2.0;
        const double cy = y0 + d.h / 2.0;
        if (!fits(placed, cx, cy, bound)) continue;
        d.x0 = x0;
        d.y0 = y0;
        placed.push_back({cx, cy, bound});
        specs.push_back(d);
        break;
      }
    } else {
      d.r0 = rng.uniform_int(12, 25);
      d.phi1 = rng.uniform(0.0, 2.0 * kPi);
      d.phi2 = rng.uniform(0.0, 2.0 * kPi);
      const double bound = 1.05 * d.r0 + 1.0;
      const int margin = static_cast<int>(std::ceil(bound)) + 2;
      if (cfg.width - 1 - margin < margin || cfg.height - 1 - margin < margin) continue;
      for (int attempt = 0; attempt < 100; ++attempt) {
        const int cx = rng.uniform_int(margin, cfg.width - 1 - margin);
        const int cy = rng.uniform_int(margin, cfg.height - 1 - margin);
        if (!fits(placed, cx, cy, bound)) continue;
        d.cx = cx;
        d.cy = cy;
        placed.push_back({static_cast<double>(cx), static_cast<double>(cy), bound});
        specs.push_back(d);
        break;
      }
    }
  }
  return specs;
}

void render_background(RgbImage& img, const SceneConfig& cfg, Rng& rng) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      int v = 128;
      if (cfg.noise_level > 0.0) {
        v += static_cast<int>(std::lround(rng.normal(0.0, 255.0 * cfg.noise_level)));
      }
      const auto b = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      img.set_pixel(x, y, b, b, b);
    }
  }
}

// grate fill: 3 px bars in both directions leaving a 3x3 hole per 6x6 tile,
// in frame coordinates
bool grate_on(int x, int y) { return (x / 3) % 2 == 0 || (y / 3) % 2 == 0; }

void render_distractor(RgbImage& img, const DistractorSpec& d) {
  const std::uint8_t* col = d.blue ? kBlue : kRed;
  if (d.kind == 0) {
    for (int y = d.y0; y < d.y0 + d.h; ++y) {
      for (int x = d.x0; x < d.x0 + d.w; ++x) {
        const bool border = x < d.x0 + 3 || x >= d.x0 + d.w - 3 || y < d.y0 + 3 || y >= d.y0 + d.h - 3;
        if (border || grate_on(x, y)) img.set_pixel(x, y, col[0], col[1], col[2]);
      }
    }
    return;
  }
  const int reach = static_cast<int>(std::ceil(1.05 * d.r0)) + 1;
  for (int y = d.cy - reach; y <= d.cy + reach; ++y) {
    for (int x = d.cx - reach; x <= d.cx + reach; ++x) {
      if (!img.in_bounds(x, y)) continue;
      const double dx = x - d.cx;
      const double dy = y - d.cy;
      const double rho = std::hypot(dx, dy);
      const double theta = std::atan2(dy, dx);
      const double edge =
          d.r0 * (1.0 + 0.03 * std::sin(3.0 * theta + d.phi1) + 0.02 * std::sin(5.0 * theta + d.phi2));
      if (rho > edge) continue;
      if (rho > edge - 3.0 || grate_on(x, y)) img.set_pixel(x, y, col[0], col[1], col[2]);
    }
  }
}

void render_sign(RgbImage& img, const SignSpec& s) {
  if (s.kind == kRingOctagon) {
    const double apothem = s.r * std::cos(kPi / 8.0);
    double nx[8], ny[8];
    for (int k = 0; k < 8; ++k) {
      const double ang = s.phi + kPi / 8.0 + k * kPi / 4.0;
      nx[k] = std::cos(ang);
      ny[k] = std::sin(ang);
    }
    for (int y = s.cy - s.r; y <= s.cy + s.r; ++y) {
      for (int x = s.cx - s.r; x <= s.cx + s.r; ++x) {
        const double dx = x - s.cx;
        const double dy = y - s.cy;
        double m = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 8; ++k) m = std::max(m, dx * nx[k] + dy * ny[k]);
        if (m > apothem) continue;
        if (m > apothem - s.t) {
          img.set_pixel(x, y, kRed[0], kRed[1], kRed[2]);
        } else {
          img.set_pixel(x, y, kWhite[0], kWhite[1], kWhite[2]);
        }
      }
    }
    return;
  }
  const long r2 = static_cast<long>(s.r) * s.r;
  const long inner = static_cast<long>(s.r - s.t) * (s.r - s.t);
  for (int y = s.cy - s.r; y <= s.cy + s.r; ++y) {
    for (int x = s.cx - s.r; x <= s.cx + s.r; ++x) {
      const long dx = x - s.cx;
      const long dy = y - s.cy;
      const long d2 = dx * dx + dy * dy;
      if (d2 > r2) continue;
      if (s.kind == kBlueDisk) {
        img.set_pixel(x, y, kBlue[0], kBlue[1], kBlue[2]);
      } else if (d2 >= inner) {
        img.set_pixel(x, y, kRed[0], kRed[1], kRed[2]);
      } else {
        img.set_pixel(x, y, kWhite[0], kWhite[1], kWhite[2]);
      }
    }
  }
}

}  // namespace

Scene synth_scene(const SceneConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  std::vector<Placement> placed;
  const std::vector<SignSpec> signs = place_signs(cfg, rng, placed);
  const std::vector<DistractorSpec> distractors = place_distractors(cfg, rng, placed);

  Scene scene{RgbImage(cfg.width, cfg.height), {}};
  render_background(scene.image, cfg, rng);
  for (const DistractorSpec& d : distractors) render_distractor(scene.image, d);
  for (const SignSpec& s : signs) {
    render_sign(scene.image, s);
    GroundTruth gt;
    gt.cx = s.cx;
    gt.cy = s.cy;
    gt.radius = s.r;
    gt.shape = (s.kind == kRingOctagon) ? SignShape::Octagon : SignShape::Circle;
    gt.color = (s.kind == kBlueDisk) ? SignColor::Blue : SignColor::Red;
    scene.ground_truth.push_back(gt);
  }
  return scene;
}

RgbImage synth_distractor_scene(const SceneConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  std::vector<Placement> placed;
  const std::vector<DistractorSpec> distractors = place_distractors(cfg, rng, placed);
  RgbImage img(cfg.width, cfg.height);
  render_background(img, cfg, rng);
  for (const DistractorSpec& d : distractors) render_distractor(img, d);
  return img;
}

namespace {

struct BlobCandidates {
  EllipseParams ellipse;
  FeatureVector features;
};

std::vector<BlobCandidates> pipeline_candidates(const RgbImage& img, const PipelineConfig& cfg) {
  std::vector<BlobCandidates> out;
  std::uint64_t blob_ordinal = 0;
  for (EnhanceChannel ch : {EnhanceChannel::Red, EnhanceChannel::Blue}) {
    const BinaryMask mask = segment_mask(img, ch, cfg.seg);
    const std::vector<Blob> blobs = connected_components(mask, cfg.seg.min_area);
    for (const Blob& blob : blobs) {
      RhtConfig rcfg = cfg.rht;
      rcfg.rng_seed = cfg.rht.rng_seed ^ blob_ordinal;
      ++blob_ordinal;
      const EdgeSet edges = extract_edges(mask, blob);
      const std::vector<EllipseParams> found = rht_detect(edges, rcfg);
      if (found.empty()) continue;
      const FeatureVector fv = feature_vector(resize_binary(mask, blob));
      for (const EllipseParams& e : found) out.push_back({e, fv});
    }
  }
  return out;
}

}  // namespace

std::vector<DetectionRecord> run_pipeline(const RgbImage& img, const std::string& image_id,
                                          const PipelineConfig& cfg,
                                          const SignClassifier* classifier) {
  std::vector<DetectionRecord> records;
  for (const BlobCandidates& c : pipeline_candidates(img, cfg)) {
    DetectionRecord rec;
    rec.image_id = image_id;
    rec.ellipse = c.ellipse;
    if (classifier != nullptr) {
      rec.svm_score = classifier->score(c.features);
      rec.accepted = rec.svm_score >= 0.0;
    } else {
      rec.svm_score = c.ellipse.support;
      rec.accepted = true;
    }
    records.push_back(rec);
  }
  return records;
}

std::vector<std::pair<FeatureVector, int>> collect_training_samples(const Scene& scene,
                                                                    const PipelineConfig& cfg) {
  std::vector<std::pair<FeatureVector, int>> out;
  for (const BlobCandidates& c : pipeline_candidates(scene.image, cfg)) {
    bool is_sign = false;
    for (const GroundTruth& gt : scene.ground_truth) {
      if (gate_geometry(c.ellipse, gt, nullptr)) {
        is_sign = true;
        break;
      }
    }
    out.emplace_back(c.features, is_sign ? 1 : -1);
  }
  return out;
}

void write_detections(std::ostream& os, const std::vector<DetectionRecord>& dets) {
  for (const DetectionRecord& d : dets) {
    os << d.image_id << '\t' << format_double(d.ellipse.center.x) << '\t'
       << format_double(d.ellipse.center.y) << '\t' << format_double(d.ellipse.semi_major) << '\t'
       << format_double(d.ellipse.semi_minor) << '\t' << format_double(d.ellipse.theta) << '\t'
       << format_double(d.svm_score) << '\t' << (d.accepted ? 1 : 0) << '\n';
  }
}

std::vector<DetectionRecord> read_detections(std::istream& is) {
  std::vector<DetectionRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> f;
    std::string tok;
    while (ss >> tok) f.push_back(tok);
    if (f.size() != 8) throw IoError("bad detection record: " + line);
    DetectionRecord d;
    d.image_id = f[0];
    d.ellipse.center.x = parse_double(f[1]);
    d.ellipse.center.y = parse_double(f[2]);
    d.ellipse.semi_major = parse_double(f[3]);
    d.ellipse.semi_minor = parse_double(f[4]);
    d.ellipse.theta = parse_double(f[5]);
    d.svm_score = parse_double(f[6]);
    const long acc = parse_long(f[7]);
    if (acc != 0 && acc != 1) throw IoError("bad accepted flag: " + f[7]);
    d.accepted = acc == 1;
    out.push_back(d);
  }
  return out;
}

void write_ground_truth(std::ostream& os, const std::vector<GroundTruth>& gts) {
  for (const GroundTruth& g : gts) {
    os << g.image_id << '\t' << format_double(g.cx) << '\t' << format_double(g.cy) << '\t'
       << format_double(g.radius) << '\t' << (g.shape == SignShape::Circle ? "circle" : "octagon")
       << '\t' << (g.color == SignColor::Red ? "red" : "blue") << '\n';
  }
}

std::vector<GroundTruth> read_ground_truth(std::istream& is) {
  std::vector<GroundTruth> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> f;
    std::string tok;
    while (ss >> tok) f.push_back(tok);
    if (f.size() != 6) throw IoError("bad ground-truth record: " + line);
    GroundTruth g;
    g.image_id = f[0];
    g.cx = parse_double(f[1]);
    g.cy = parse_double(f[2]);
    g.radius = parse_double(f[3]);
    if (!(g.radius > 0.0)) throw IoError("ground-truth radius must be positive");
    if (f[4] == "circle") g.shape = SignShape::Circle;
    else if (f[4] == "octagon") g.shape = SignShape::Octagon;
    else throw IoError("bad shape: " + f[4]);
    if (f[5] == "red") g.color = SignColor::Red;
    else if (f[5] == "blue") g.color = SignColor::Blue;
    else throw IoError("bad color: " + f[5]);
    out.push_back(g);
  }
  return out;
}

void write_pr_csv(std::ostream& os, const std::vector<PrPoint>& points) {
  os << "threshold,precision,recall\n";
  for (const PrPoint& p : points) {
    os << format_double(p.threshold) << ',' << format_double(p.precision) << ','
       << format_double(p.recall) << '\n';
  }
}

void draw_ellipse(RgbImage& img, const EllipseParams& e, std::uint8_t r, std::uint8_t g,
                  std::uint8_t b) {
  const double ct = std::cos(e.theta);
  const double st = std::sin(e.theta);
  const int steps = std::max(64, static_cast<int>(std::ceil(4.0 * kPi * e.semi_major)));
  for (int i = 0; i < steps; ++i) {
    const double t = 2.0 * kPi * i / steps;
    const double px = e.semi_major * std::cos(t);
    const double py = e.semi_minor * std::sin(t);
    const int x = static_cast<int>(std::lround(e.center.x + ct * px - st * py));
    const int y = static_cast<int>(std::lround(e.center.y + st * px + ct * py));
    if (img.in_bounds(x, y)) img.set_pixel(x, y, r, g, b);
  }
}

}  // namespace signscan

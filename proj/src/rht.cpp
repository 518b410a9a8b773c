#include "signscan/rht.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>

#include "signscan/errors.hpp"
#include "signscan/rng.hpp"

namespace signscan {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kParallelEps = 1e-9;

// Principal direction of a 2x2 symmetric scatter [[sxx,sxy],[sxy,syy]].
Vec2 principal_direction(double sxx, double sxy, double syy) {
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double lam_max = tr / 2.0 + disc;
  // eigenvector for lam_max; pick the better-conditioned expression
  Vec2 dir;
  if (std::abs(sxy) > 1e-300) {
    dir = (std::abs(lam_max - sxx) > std::abs(lam_max - syy)) ? Vec2{sxy, lam_max - sxx} : Vec2{lam_max - syy, sxy};
  } else {
    dir = (sxx >= syy) ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
  }
  const double n = dir.norm();
  if (n == 0.0) return {1.0, 0.0};
  dir = dir * (1.0 / n);
  // canonical sign so identical windows give identical directions
  if (dir.x < 0.0 || (dir.x == 0.0 && dir.y < 0.0)) dir = dir * -1.0;
  return dir;
}

std::optional<TangentLine> try_tangent(const std::vector<Point>& points, Point p, int radius) {
  double sx = 0.0, sy = 0.0;
  int n = 0;
  for (const Point& q : points) {
    if (std::abs(q.x - p.x) <= radius && std::abs(q.y - p.y) <= radius) {
      sx += q.x;
      sy += q.y;
      ++n;
    }
  }
  if (n < 3) return std::nullopt;
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const Point& q : points) {
    if (std::abs(q.x - p.x) <= radius && std::abs(q.y - p.y) <= radius) {
      const double dx = q.x - mx;
      const double dy = q.y - my;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
    }
  }
  return TangentLine{{static_cast<double>(p.x), static_cast<double>(p.y)}, principal_direction(sxx, sxy, syy)};
}

std::optional<Vec2> intersect_lines(Vec2 p1, Vec2 d1, Vec2 p2, Vec2 d2) {
  const double denom = d1.cross(d2);
  if (std::abs(denom) < kParallelEps) return std::nullopt;
  const double t = (p2 - p1).cross(d2) / denom;
  return p1 + d1 * t;
}

std::optional<Vec2> try_center(Vec2 a, Vec2 b, Vec2 c, const TangentLine& ta, const TangentLine& tb,
                               const TangentLine& tc) {
  const auto s = intersect_lines(ta.point, ta.direction, tb.point, tb.direction);
  if (!s) return std::nullopt;
  const auto n = intersect_lines(tb.point, tb.direction, tc.point, tc.direction);
  if (!n) return std::nullopt;
  const Vec2 t = (a + b) * 0.5;
  const Vec2 m = (b + c) * 0.5;

  Vec2 d_st = t - *s;
  Vec2 d_nm = m - *n;
  const double len_st = d_st.norm();
  const double len_nm = d_nm.norm();
  if (len_st < 1e-12 || len_nm < 1e-12) return std::nullopt;
  d_st = d_st * (1.0 / len_st);
  d_nm = d_nm * (1.0 / len_nm);
  if (std::abs(d_st.cross(d_nm)) < kParallelEps) return std::nullopt;
  return intersect_lines(*s, d_st, *n, d_nm);
}

enum class FitFailure { Singular, NotEllipse };

// Minimum-norm least-squares solve of the 3x3 conic system. Consistent
// rank-deficient systems (e.g. symmetric point placements) still resolve;
// inconsistent ones report Singular.
std::optional<ConicAbc> try_fit_conic(double x1, double y1, double x2, double y2, double x3, double y3,
                                      FitFailure* failure) {
  Eigen::Matrix3d m;
  m << x1 * x1, 2.0 * x1 * y1, y1 * y1,
       x2 * x2, 2.0 * x2 * y2, y2 * y2,
       x3 * x3, 2.0 * x3 * y3, y3 * y3;
  const Eigen::Vector3d rhs = Eigen::Vector3d::Ones();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  svd.setThreshold(1e-12);
  const Eigen::Vector3d sol = svd.solve(rhs);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m * sol - rhs).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    if (failure) *failure = FitFailure::Singular;
    return std::nullopt;
  }
  const ConicAbc abc{sol(0), sol(1), sol(2)};
  if (abc.a * abc.c - abc.b * abc.b <= 0.0 || abc.a <= 0.0) {
    if (failure) *failure = FitFailure::NotEllipse;
    return std::nullopt;
  }
  return abc;
}

std::optional<EllipseParams> try_conic_to_geometric(const ConicCoeffs& coeffs) {
  const double a = coeffs.a, b = coeffs.b, c = coeffs.c;
  if (a * c - b * b <= 0.0 || a <= 0.0) return std::nullopt;
  const double tr = a + c;
  const double det = a * c - b * b;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double lam_min = tr / 2.0 - disc;  // major axis: A = 1/sqrt(lam_min)
  const double lam_max = tr / 2.0 + disc;
  if (lam_min <= 0.0) return std::nullopt;

  EllipseParams e;
  e.center = coeffs.center;
  e.semi_major = 1.0 / std::sqrt(lam_min);
  e.semi_minor = 1.0 / std::sqrt(lam_max);

  double theta = 0.0;
  if (std::abs(b) > 1e-12) {
    // eigenvector for lam_min
    const Vec2 v = (std::abs(lam_min - a) > std::abs(lam_min - c)) ? Vec2{b, lam_min - a} : Vec2{lam_min - c, b};
    theta = std::atan2(v.y, v.x);
  } else if (a > c) {
    theta = kPi / 2.0;  // minor eigenvalue belongs to y
  }
  theta = std::fmod(theta, kPi);
  if (theta < 0.0) theta += kPi;
  if (theta >= kPi) theta = 0.0;
  e.theta = theta;
  return e;
}

double ramanujan_perimeter(double a, double b) {
  return kPi * (3.0 * (a + b) - std::sqrt((3.0 * a + b) * (a + 3.0 * b)));
}

// Gradient-scaled residual of the quadratic form: first-order estimate of
// the geometric distance from point to ellipse.
double approx_distance(const ConicCoeffs& k, double px, double py) {
  const double dx = px - k.center.x;
  const double dy = py - k.center.y;
  const double q = k.a * dx * dx + 2.0 * k.b * dx * dy + k.c * dy * dy;
  const double gx = 2.0 * (k.a * dx + k.b * dy);
  const double gy = 2.0 * (k.b * dx + k.c * dy);
  const double grad = std::hypot(gx, gy);
  if (grad < 1e-12) return std::numeric_limits<double>::infinity();
  return std::abs(q - 1.0) / grad;
}

}  // namespace

TangentLine estimate_tangent(const EdgeSet& edges, Point p, int radius) {
  auto t = try_tangent(edges.points, p, radius);
  if (!t) throw InsufficientNeighbors();
  return *t;
}

Vec2 ellipse_center(Vec2 a, Vec2 b, Vec2 c, const TangentLine& ta, const TangentLine& tb, const TangentLine& tc) {
  auto center = try_center(a, b, c, ta, tb, tc);
  if (!center) throw DegenerateSample();
  return *center;
}

ConicAbc fit_conic(double x1, double y1, double x2, double y2, double x3, double y3) {
  FitFailure failure = FitFailure::Singular;
  auto abc = try_fit_conic(x1, y1, x2, y2, x3, y3, &failure);
  if (!abc) {
    if (failure == FitFailure::Singular) throw SingularSystem();
    throw NotAnEllipse();
  }
  return *abc;
}

EllipseParams conic_to_geometric(const ConicCoeffs& coeffs) {
  auto e = try_conic_to_geometric(coeffs);
  if (!e) throw NotAnEllipse();
  return *e;
}

ConicCoeffs geometric_to_conic(const EllipseParams& e) {
  const double ct = std::cos(e.theta);
  const double st = std::sin(e.theta);
  const double ia = 1.0 / (e.semi_major * e.semi_major);
  const double ib = 1.0 / (e.semi_minor * e.semi_minor);
  ConicCoeffs k;
  k.a = ct * ct * ia + st * st * ib;
  k.c = st * st * ia + ct * ct * ib;
  k.b = st * ct * (ia - ib);
  k.center = e.center;
  return k;
}

double verify_candidate(const EdgeSet& edges, const EllipseParams& e, double eps) {
  if (edges.points.empty()) return 0.0;
  const ConicCoeffs k = geometric_to_conic(e);
  int count = 0;
  for (const Point& p : edges.points) {
    if (approx_distance(k, p.x, p.y) <= eps) ++count;
  }
  const double perimeter = ramanujan_perimeter(e.semi_major, e.semi_minor);
  if (perimeter <= 0.0) return 0.0;
  return std::clamp(count / perimeter, 0.0, 1.0);
}

namespace {

struct Cell {
  double p, q, a_axis, b_axis, theta;
  int count;
};

// Least-squares general conic over the candidate's supporting edge points;
// averages away the scatter of the individual three-point hypotheses.
std::optional<EllipseParams> try_refine(const std::vector<Point>& pts, const EllipseParams& cand,
                                        const RhtConfig& cfg) {
  const ConicCoeffs kc = geometric_to_conic(cand);
  // a x^2 + 2b xy + c y^2 + d x + e y = 1 in coordinates centered on the
  // candidate, which keeps the normal equations well conditioned
  Eigen::Matrix<double, 5, 5> ata = Eigen::Matrix<double, 5, 5>::Zero();
  Eigen::Matrix<double, 5, 1> atb = Eigen::Matrix<double, 5, 1>::Zero();
  int n = 0;
  for (const Point& p : pts) {
    if (approx_distance(kc, p.x, p.y) > cfg.support_eps) continue;
    const double x = p.x - cand.center.x;
    const double y = p.y - cand.center.y;
    Eigen::Matrix<double, 5, 1> row;
    row << x * x, 2.0 * x * y, y * y, x, y;
    ata += row * row.transpose();
    atb += row;
    ++n;
  }
  if (n < 6) return std::nullopt;

  const Eigen::LDLT<Eigen::Matrix<double, 5, 5>> solver(ata);
  if (solver.info() != Eigen::Success) return std::nullopt;
  const Eigen::Matrix<double, 5, 1> sol = solver.solve(atb);
  const double a = sol(0), b = sol(1), c = sol(2), d = sol(3), e = sol(4);

  const double det = a * c - b * b;
  if (!(det > 0.0) || !(a > 0.0)) return std::nullopt;
  // center is the stationary point of the quadric
  const double cx = (b * e - c * d) / (2.0 * det);
  const double cy = (b * d - a * e) / (2.0 * det);
  const double k = 1.0 - (a * cx * cx + 2.0 * b * cx * cy + c * cy * cy + d * cx + e * cy);
  if (!(k > 0.0)) return std::nullopt;

  const auto geo = try_conic_to_geometric(
      {a / k, b / k, c / k, {cand.center.x + cx, cand.center.y + cy}});
  if (!geo) return std::nullopt;
  if (geo->semi_minor < cfg.min_axis || geo->semi_major / geo->semi_minor > cfg.max_aspect) {
    return std::nullopt;
  }
  return geo;
}

double theta_distance(double t1, double t2) {
  double d = std::abs(t1 - t2);
  d = std::fmod(d, kPi);
  return std::min(d, kPi - d);
}

// circular running mean with period pi
double theta_merge(double cell_theta, double new_theta, int new_count) {
  double delta = new_theta - cell_theta;
  while (delta > kPi / 2.0) delta -= kPi;
  while (delta < -kPi / 2.0) delta += kPi;
  double merged = cell_theta + delta / new_count;
  merged = std::fmod(merged, kPi);
  if (merged < 0.0) merged += kPi;
  return merged;
}

}  // namespace

std::vector<EllipseParams> rht_detect(const EdgeSet& edges, const RhtConfig& cfg) {
  std::vector<EllipseParams> out;
  std::vector<Point> pts = edges.points;
  std::vector<Cell> cells;
  Rng rng(cfg.rng_seed);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const std::size_t n = pts.size();
    if (n < 3) break;

    std::size_t i = rng.below(n);
    std::size_t j = rng.below(n);
    while (j == i) j = rng.below(n);
    std::size_t k = rng.below(n);
    while (k == i || k == j) k = rng.below(n);

    const auto ta = try_tangent(pts, pts[i], cfg.tangent_radius);
    const auto tb = try_tangent(pts, pts[j], cfg.tangent_radius);
    const auto tc = try_tangent(pts, pts[k], cfg.tangent_radius);
    if (!ta || !tb || !tc) continue;

    const Vec2 pa{static_cast<double>(pts[i].x), static_cast<double>(pts[i].y)};
    const Vec2 pb{static_cast<double>(pts[j].x), static_cast<double>(pts[j].y)};
    const Vec2 pc{static_cast<double>(pts[k].x), static_cast<double>(pts[k].y)};
    const auto center = try_center(pa, pb, pc, *ta, *tb, *tc);
    if (!center) continue;

    const auto abc = try_fit_conic(pa.x - center->x, pa.y - center->y, pb.x - center->x, pb.y - center->y,
                                   pc.x - center->x, pc.y - center->y, nullptr);
    if (!abc) continue;

    const auto geo = try_conic_to_geometric({abc->a, abc->b, abc->c, *center});
    if (!geo) continue;
    if (geo->semi_minor < cfg.min_axis || geo->semi_major / geo->semi_minor > cfg.max_aspect) continue;

    // accumulate into the first matching cell, else open a new one
    Cell* hit = nullptr;
    for (Cell& cell : cells) {
      if (std::abs(cell.p - geo->center.x) <= cfg.center_tol && std::abs(cell.q - geo->center.y) <= cfg.center_tol &&
          std::abs(cell.a_axis - geo->semi_major) <= cfg.axis_tol &&
          std::abs(cell.b_axis - geo->semi_minor) <= cfg.axis_tol &&
          theta_distance(cell.theta, geo->theta) <= cfg.theta_tol) {
        hit = &cell;
        break;
      }
    }
    if (hit) {
      hit->count += 1;
      const double w = 1.0 / hit->count;
      hit->p += (geo->center.x - hit->p) * w;
      hit->q += (geo->center.y - hit->q) * w;
      hit->a_axis += (geo->semi_major - hit->a_axis) * w;
      hit->b_axis += (geo->semi_minor - hit->b_axis) * w;
      hit->theta = theta_merge(hit->theta, geo->theta, hit->count);
    } else {
      cells.push_back({geo->center.x, geo->center.y, geo->semi_major, geo->semi_minor, geo->theta, 1});
      hit = &cells.back();
    }

    if (hit->count < cfg.min_score) continue;

    EllipseParams cand;
    cand.center = {hit->p, hit->q};
    cand.semi_major = hit->a_axis;
    cand.semi_minor = hit->b_axis;
    cand.theta = hit->theta;
    cand.score = hit->count;

    EdgeSet current;
    current.points = pts;
    double support = verify_candidate(current, cand, cfg.support_eps);
    if (const auto refined = try_refine(pts, cand, cfg)) {
      const double refined_support = verify_candidate(current, *refined, cfg.support_eps);
      if (refined_support >= support) {
        cand.center = refined->center;
        cand.semi_major = refined->semi_major;
        cand.semi_minor = refined->semi_minor;
        cand.theta = refined->theta;
        support = refined_support;
      }
    }
    if (support >= cfg.min_support) {
      cand.support = support;
      // edge pixels are foreground centers next to background, so the
      // continuous boundary runs about half a pixel further out
      EllipseParams emitted = cand;
      emitted.semi_major += 0.5;
      emitted.semi_minor += 0.5;
      out.push_back(emitted);
      // remove the evidence this sign consumed: supporting points and
      // anything inside the ellipse (the sign's interior, e.g. inner rim
      // edges), so the same sign is not re-detected
      const ConicCoeffs kc = geometric_to_conic(cand);
      std::erase_if(pts, [&](const Point& p) {
        const double dx = p.x - kc.center.x;
        const double dy = p.y - kc.center.y;
        const double qform = kc.a * dx * dx + 2.0 * kc.b * dx * dy + kc.c * dy * dy;
        return qform < 1.0 || approx_distance(kc, p.x, p.y) <= cfg.support_eps;
      });
      cells.clear();
    } else {
      // verified junk: drop the cell so it cannot re-trigger every hit
      cells.erase(cells.begin() + (hit - cells.data()));
    }
  }

  // when the inner rim boundary of a ring is accepted before the outer one,
  // both survive the removal step; keep only the outermost of nested results
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out[a].semi_major * out[a].semi_minor > out[b].semi_major * out[b].semi_minor;
  });
  std::vector<EllipseParams> kept;
  for (const std::size_t idx : order) {
    const EllipseParams& e = out[idx];
    bool nested = false;
    for (const EllipseParams& big : kept) {
      const ConicCoeffs kc = geometric_to_conic(big);
      const double dx = e.center.x - kc.center.x;
      const double dy = e.center.y - kc.center.y;
      if (kc.a * dx * dx + 2.0 * kc.b * dx * dy + kc.c * dy * dy < 1.0) {
        nested = true;
        break;
      }
    }
    if (!nested) kept.push_back(e);
  }
  out = std::move(kept);

  std::stable_sort(out.begin(), out.end(),
                   [](const EllipseParams& a, const EllipseParams& b) { return a.support > b.support; });
  return out;
}

}  // namespace signscan

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "signscan/image.hpp"

namespace signscan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

/// Centered conic a*dx^2 + 2b*dx*dy + c*dy^2 = 1 about (center.x, center.y).
/// Ellipse iff a*c - b^2 > 0 and a > 0.
struct ConicCoeffs {
  double a = 0.0, b = 0.0, c = 0.0;
  Vec2 center;
};

struct EllipseParams {
  Vec2 center;
  double semi_major = 0.0;  // A >= B > 0
  double semi_minor = 0.0;
  double theta = 0.0;  // orientation of the major axis, [0, pi)
  int score = 0;       // accumulator hit count
  double support = 0.0;  // verified perimeter coverage, [0,1]
};

/// Line through `point` with unit `direction`.
struct TangentLine {
  Vec2 point;
  Vec2 direction;
};

struct RhtConfig {
  int max_iters = 2000;
  int tangent_radius = 3;    // Chebyshev window for the tangent fit
  double center_tol = 2.0;   // accumulator matching tolerances
  double axis_tol = 2.0;
  double theta_tol = 0.1;
  int min_score = 3;         // hits before verification
  double support_eps = 1.5;  // max point-to-ellipse distance counted as support
  double min_support = 0.5;
  double min_axis = 5.0;     // reject B below this
  double max_aspect = 1.5;   // reject A/B above this
  std::uint64_t rng_seed = 0;
};

/// Total-least-squares tangent direction from the edge points within
/// Chebyshev distance `radius` of p. Throws InsufficientNeighbors when the
/// window holds fewer than 3 points.
TangentLine estimate_tangent(const EdgeSet& edges, Point p, int radius);

/// Ellipse center from three boundary points and their tangents (intersect
/// the two lines through tangent-intersection and chord-midpoint pairs).
/// Throws DegenerateSample on parallel tangents or parallel construction lines.
Vec2 ellipse_center(Vec2 a, Vec2 b, Vec2 c, const TangentLine& ta, const TangentLine& tb, const TangentLine& tc);

struct ConicAbc {
  double a = 0.0, b = 0.0, c = 0.0;
};

/// Solves [[x^2, 2xy, y^2]] [a b c]^T = 1 for three center-translated points.
/// Throws SingularSystem when the system is inconsistent and NotAnEllipse
/// when the solution fails a*c - b^2 > 0, a > 0.
ConicAbc fit_conic(double x1, double y1, double x2, double y2, double x3, double y3);

/// Geometric parameters from conic coefficients: eigenvalues of [[a,b],[b,c]]
/// give the semi-axes, the minor eigenvector the orientation.
/// Throws NotAnEllipse.
EllipseParams conic_to_geometric(const ConicCoeffs& coeffs);

/// Inverse of conic_to_geometric.
ConicCoeffs geometric_to_conic(const EllipseParams& e);

/// Fraction of the ideal perimeter (Ramanujan estimate) covered by edge
/// points within distance eps of the ellipse, clamped to [0,1]. Distance is
/// the gradient-scaled residual of the quadratic form.
double verify_candidate(const EdgeSet& edges, const EllipseParams& e, double eps);

/// Randomized Hough Transform: sample point triples, build candidate
/// ellipses, accumulate agreeing hypotheses, verify against the edge
/// evidence, and emit accepted ellipses sorted by support (descending).
/// Deterministic in (edges, cfg).
std::vector<EllipseParams> rht_detect(const EdgeSet& edges, const RhtConfig& cfg);

}  // namespace signscan

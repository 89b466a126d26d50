#pragma once
// The admissible region of the (mass, energy) plane, the indicator
// functional D built on the distance to its complement, membership in the
// scattering set, and the quantitative virial floor along the flow.
//
// The region keeps points left of the critical mass and below the threshold
// curve: Omega = {(c, h) : 0 <= c < c_max, h < m_c}. Its complement is
// approached through three features: the vertical line c = c_max, the graph
// of the tabulated curve, and the epigraph above it. Left of the tabulated
// range the curve climbs without bound, so no boundary piece is synthesized
// there; queries in that corner see the tabulated part and the vertical
// line only.
//
//   D(c, h) = h + (h + c) / dist((c, h), Omega^c)   inside the region,
//   D       = infinity                              outside.
//
// D is zero exactly at the origin, finite exactly on the region, and
// increases toward the boundary; for fields with K >= 0 its finiteness
// characterizes the scattering set {M < c_max, H < m_M, K > 0}.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "cqnls/core.hpp"
#include "cqnls/functionals.hpp"
#include "cqnls/groundstate.hpp"

namespace cqnls {

// Immutable after construction; all queries are pure and shareable across
// threads.
struct Region {
  McCurve curve;
  double c_max = 0.0;
  // curve knots plus the exact right endpoint (c_max, 0); strictly
  // decreasing in the second component
  std::vector<std::array<double, 2>> boundary_polyline;
};

inline Region make_region(McCurve curve) {
  if (curve.points.empty())
    fail("mei.bad_curve", "region needs a tabulated threshold curve");
  if (!(curve.c_max > curve.points.back().c))
    fail("mei.bad_curve", "critical mass must exceed the last tabulated mass");
  for (size_t i = 0; i + 1 < curve.points.size(); ++i)
    if (!(curve.points[i].c < curve.points[i + 1].c) ||
        !(curve.points[i].m_c > curve.points[i + 1].m_c))
      fail("mei.bad_curve", "curve must be strictly decreasing");
  if (!(curve.points.back().m_c > 0.0))
    fail("mei.bad_curve", "threshold values must be positive");
  // derived data; refit so hand-assembled curves query safely
  std::vector<double> xs, ys;
  for (const auto& p : curve.points) {
    xs.push_back(p.c);
    ys.push_back(p.m_c);
  }
  curve.interpolation = detail::fit_monotone_cubic(xs, ys);
  Region r;
  r.c_max = curve.c_max;
  for (const auto& p : curve.points)
    r.boundary_polyline.push_back({p.c, p.m_c});
  r.boundary_polyline.push_back({curve.c_max, 0.0});
  r.curve = std::move(curve);
  return r;
}

namespace detail {

// Height of the complement boundary over c in [first knot, c_max]:
// interpolated curve inside the table, straight closure to (c_max, 0)
// beyond the last knot.
inline double boundary_height(const Region& r, double c) {
  const auto& last = r.boundary_polyline[r.boundary_polyline.size() - 2];
  if (c <= last[0]) return r.curve.eval_mc(c);
  const double t = (c - last[0]) / (r.c_max - last[0]);
  return last[1] * (1.0 - t);
}

inline double point_segment_dist(double px, double py, double ax, double ay,
                                 double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len_sq = dx * dx + dy * dy;
  double t = len_sq > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len_sq : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  const double ex = ax + t * dx - px, ey = ay + t * dy - py;
  return std::hypot(ex, ey);
}

}  // namespace detail

inline bool region_contains(const Region& r, double c, double h) {
  if (r.boundary_polyline.empty())
    fail("mei.bad_curve", "region was not built from a curve");
  if (!(c >= 0.0) || !(c < r.c_max)) return false;
  if (c < r.boundary_polyline.front()[0]) return true;  // curve unbounded here
  return h < detail::boundary_height(r, c);
}

// Euclidean distance from (c, h) to the complement, against the vertical
// critical-mass line and the threshold graph; 0 outside the region. A coarse
// pass over the knot polyline brackets the nearest stretch of the graph;
// refinement passes re-sample the bracket through the interpolant. Every
// chord lies in the complement, so the result never undershoots, and each
// pass shrinks the chords tenfold and their sagitta overshoot a hundredfold.
inline double dist_to_complement(const Region& r, double c, double h) {
  if (!region_contains(r, c, h)) return 0.0;
  const auto& poly = r.boundary_polyline;
  size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    const double d = detail::point_segment_dist(c, h, poly[i][0], poly[i][1],
                                                poly[i + 1][0], poly[i + 1][1]);
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  best = std::min(best, r.c_max - c);
  double lo = poly[nearest > 0 ? nearest - 1 : 0][0];
  double hi = poly[std::min(nearest + 2, poly.size() - 1)][0];
  for (int pass = 0; pass < 4; ++pass) {
    constexpr int m = 40;
    double arg = lo;
    double cx = lo, cy = detail::boundary_height(r, lo);
    for (int j = 1; j <= m; ++j) {
      const double nx = lo + (hi - lo) * j / m;
      const double ny = detail::boundary_height(r, nx);
      const double d = detail::point_segment_dist(c, h, cx, cy, nx, ny);
      if (d < best) {
        best = d;
        arg = cx;
      }
      cx = nx;
      cy = ny;
    }
    // keep two chords of slack on both sides so the bracket tolerates an
    // argmin displaced by the chord error of this pass
    const double w = (hi - lo) / m;
    lo = std::max(poly.front()[0], arg - 2.0 * w);
    hi = std::min(poly.back()[0], arg + 3.0 * w);
  }
  return best;
}

struct MeiValue {
  double value = 0.0;       // +infinity outside the region
  double distance = 0.0;    // distance to the complement; 0 outside
  bool admissible = false;  // equivalent to value being finite
};

inline MeiValue mei_D(const Region& r, double c, double h) {
  MeiValue out;
  out.distance = dist_to_complement(r, c, h);
  if (out.distance > 0.0) {
    out.admissible = true;
    out.value = h + (h + c) / out.distance;
  } else {
    out.value = std::numeric_limits<double>::infinity();
  }
  return out;
}

inline MeiValue mei_D(const Region& r, const Field& u) {
  const FunctionalReport f = evaluate(u);
  return mei_D(r, f.mass, f.energy);
}

// Membership in the scattering set {M < c_max, H < m_M, K > 0} with the
// three margins. Margins within 1e-6 of zero flag the report indeterminate:
// the boolean is then a coin toss of roundoff and should not be trusted.
struct SetAReport {
  bool in_A = false;
  bool indeterminate = false;
  double mass = 0.0, energy = 0.0, virial = 0.0;
  double m_of_mass = 0.0;      // interpolated threshold at this mass
  double margin_mass = 0.0;    // c_max - M
  double margin_energy = 0.0;  // m_M - H
  double margin_virial = 0.0;  // K
};

inline SetAReport in_set_A(const Region& r, const Field& u) {
  if (r.boundary_polyline.empty())
    fail("mei.bad_curve", "region was not built from a curve");
  const FunctionalReport f = evaluate(u);
  SetAReport rep;
  rep.mass = f.mass;
  rep.energy = f.energy;
  rep.virial = f.virial;
  rep.margin_mass = r.c_max - f.mass;
  rep.margin_virial = f.virial;
  const double tol = 1e-6;
  if (rep.margin_mass <= 0.0) {
    // supercritical mass decides membership without the curve
    rep.m_of_mass = std::numeric_limits<double>::quiet_NaN();
    rep.margin_energy = std::numeric_limits<double>::quiet_NaN();
    rep.indeterminate = std::abs(rep.margin_mass) <= tol;
    return rep;
  }
  if (r.curve.extrapolated(f.mass))
    fail("mei.mass_out_of_range",
         "mass " + format_double(f.mass) +
             " is outside the tabulated threshold curve");
  rep.m_of_mass = r.curve.eval_mc(f.mass);
  rep.margin_energy = rep.m_of_mass - f.energy;
  rep.in_A = rep.margin_energy > 0.0 && rep.margin_virial > 0.0;
  rep.indeterminate = std::abs(rep.margin_mass) <= tol ||
                      std::abs(rep.margin_energy) <= tol ||
                      std::abs(rep.margin_virial) <= tol;
  return rep;
}

// Uniform-in-time virial floor for admissible K-positive data with mass
// below critical: with delta = 1 - (M/c_max)^2,
//   K(u(t)) >= min{delta H(0), (m_M - H(0)) / (sqrt(2/delta) - 1)}.
// Degenerates to 0 at zero energy and at threshold energy.
inline double k_lower_bound(const Region& r, double mass0, double energy0) {
  if (r.boundary_polyline.empty())
    fail("mei.bad_curve", "region was not built from a curve");
  if (!(mass0 >= 0.0) || !(mass0 < r.c_max))
    fail("mei.mass_supercritical",
         "virial floor needs mass below the critical mass");
  if (r.curve.extrapolated(mass0))
    fail("mei.mass_out_of_range",
         "mass " + format_double(mass0) +
             " is outside the tabulated threshold curve");
  const double ratio = mass0 / r.c_max;
  const double delta = 1.0 - ratio * ratio;
  const double drop = delta * energy0;
  const double gap =
      (r.curve.eval_mc(mass0) - energy0) / (std::sqrt(2.0 / delta) - 1.0);
  return std::min(drop, gap);
}

// Classification report for one field against a region. D serializes as a
// number when finite and as the string "inf" otherwise; the virial floor is
// null unless membership holds (the bound assumes admissible data).
inline json classification_json(const Region& r, const Field& u) {
  const SetAReport rep = in_set_A(r, u);
  const MeiValue d = mei_D(r, rep.mass, rep.energy);
  json j;
  j["mass"] = rep.mass;
  j["energy"] = rep.energy;
  j["virial"] = rep.virial;
  j["mQ_mass"] = rep.m_of_mass;
  j["margins"] = json{{"mass", rep.margin_mass},
                      {"energy", rep.margin_energy},
                      {"virial", rep.margin_virial},
                      {"indeterminate", rep.indeterminate}};
  j["in_A"] = rep.in_A;
  if (d.admissible)
    j["D"] = d.value;
  else
    j["D"] = "inf";
  if (rep.in_A)
    j["k_lower_bound"] = k_lower_bound(r, rep.mass, rep.energy);
  else
    j["k_lower_bound"] = nullptr;
  return j;
}

}  // namespace cqnls

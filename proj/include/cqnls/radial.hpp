#pragma once
// Radial shooting engine for the unit-frequency stationary profiles
//   S'' + S'/r = S - mu3 S^3 - mu5 S^5,  S'(0) = 0,  S > 0,  S(inf) = 0.
// Every frequency reduces to this form: u solving -lap u + w u = u^3 + u^5
// equals sqrt(w) v(sqrt(w) x) with v the (mu3 = 1, mu5 = w) unit profile, so
// shots always march an O(1)-scale decay e^{-r} regardless of w.
//
// Bisection separates central values whose trajectories cross zero from those
// that turn back up; the turn is detected through the mechanical energy
// E = S'^2/2 + U(S), U(S) = -S^2/2 + mu3 S^4/4 + mu5 S^6/6, which decreases
// along r and must stay nonnegative for the trajectory to ever reach S = 0.
// Past the matching radius the profile continues as c K0(r), the decaying
// solution of the linearized equation.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "cqnls/core.hpp"
#include "cqnls/generators.hpp"
#include "cqnls/grid.hpp"

namespace cqnls {

struct RadialProfile {
  double dr = 0.0;
  std::vector<double> s, sp, spp;  // value, S', S'' at r_i = i dr
  double central = 0.0;            // s[0]
  double mu3 = 0.0, mu5 = 0.0;
  double tail_c = 0.0;   // S(r) = tail_c K0(r) for r >= tail_r
  double tail_r = 0.0;
  double tail_mismatch = 0.0;  // relative S' defect at the matching radius

  // Quintic Hermite inside the table (second derivatives come free from the
  // equation, and the two extra orders keep the interpolation error below
  // what the spectral Laplacian of the sampled field would amplify), K0 tail
  // beyond it.
  double eval(double r) const {
    r = std::abs(r);
    const double t = r / dr;
    const size_t i = size_t(t);
    if (i + 1 >= s.size()) {
      if (r > 650.0) return 0.0;  // K0 underflows
      return tail_c * std::cyl_bessel_k(0.0, r);
    }
    const double x = t - double(i);
    const double x2 = x * x, x3 = x2 * x, x4 = x3 * x, x5 = x4 * x;
    const double a0 = 1.0 - 10.0 * x3 + 15.0 * x4 - 6.0 * x5;
    const double a1 = x - 6.0 * x3 + 8.0 * x4 - 3.0 * x5;
    const double a2 = 0.5 * (x2 - 3.0 * x3 + 3.0 * x4 - x5);
    const double b0 = 10.0 * x3 - 15.0 * x4 + 6.0 * x5;
    const double b1 = -4.0 * x3 + 7.0 * x4 - 3.0 * x5;
    const double b2 = 0.5 * (x3 - 2.0 * x4 + x5);
    return a0 * s[i] + a1 * dr * sp[i] + a2 * dr * dr * spp[i] +
           b0 * s[i + 1] + b1 * dr * sp[i + 1] + b2 * dr * dr * spp[i + 1];
  }
};

namespace detail {

struct RadialOde {
  double mu3, mu5;

  double rhs(double s) const {
    const double s2 = s * s;
    return s - mu3 * s2 * s - mu5 * s2 * s2 * s;
  }
  double rhs_deriv(double s) const {
    const double s2 = s * s;
    return 1.0 - 3.0 * mu3 * s2 - 5.0 * mu5 * s2 * s2;
  }
  double potential(double s) const {
    const double s2 = s * s;
    return -0.5 * s2 + 0.25 * mu3 * s2 * s2 + mu5 * s2 * s2 * s2 / 6.0;
  }

  // Series start S = a + (g/4) r^2 + c4 r^4 with g = rhs(a),
  // 16 c4 = rhs'(a) g / 4.
  void series(double a, double r, double& s_out, double& p_out) const {
    const double g = rhs(a);
    const double c4 = rhs_deriv(a) * g / 64.0;
    s_out = a + 0.25 * g * r * r + c4 * r * r * r * r;
    p_out = 0.5 * g * r + 4.0 * c4 * r * r * r;
  }

  // One RK4 step of (s, p)' = (p, rhs(s) - p/r).
  void step(double r, double h, double& s, double& p) const {
    const auto f = [this](double rr, double ss, double pp, double& ds,
                          double& dp) {
      ds = pp;
      dp = rhs(ss) - pp / rr;
    };
    double k1s, k1p, k2s, k2p, k3s, k3p, k4s, k4p;
    f(r, s, p, k1s, k1p);
    f(r + 0.5 * h, s + 0.5 * h * k1s, p + 0.5 * h * k1p, k2s, k2p);
    f(r + 0.5 * h, s + 0.5 * h * k2s, p + 0.5 * h * k2p, k3s, k3p);
    f(r + h, s + h * k3s, p + h * k3p, k4s, k4p);
    s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  }

  // +1: crossed zero (central value too large). -1: energy went negative, the
  // trajectory can never reach zero (too small). r_max cap counts as -1.
  int classify(double a, double h, double r_max) const {
    double s, p;
    series(a, h, s, p);
    for (double r = h; r < r_max; r += h) {
      step(r, h, s, p);
      if (!std::isfinite(s)) fail("radial.diverged", "shot diverged");
      if (s < 0.0) return 1;
      if (0.5 * p * p + potential(s) < 0.0) return -1;
    }
    return -1;
  }
};

}  // namespace detail

// Positive zero of the potential: central values must exceed it for the
// trajectory to carry enough energy to reach S = 0.
inline double radial_potential_zero(double mu3, double mu5) {
  if (mu3 <= 0.0 && mu5 <= 0.0)
    fail("radial.bad_nonlinearity", "needs a focusing power");
  double t;  // t = S^2 solving mu5 t^2/6 + mu3 t/4 - 1/2 = 0
  if (mu5 <= 0.0) {
    t = 2.0 / mu3;
  } else {
    const double b = mu3 / 4.0;
    t = (-b + std::sqrt(b * b + 2.0 * mu5 / 3.0)) / (mu5 / 3.0);
  }
  return std::sqrt(t);
}

inline RadialProfile solve_radial_ground(double mu3, double mu5) {
  const detail::RadialOde ode{mu3, mu5};
  const double h = 5e-4;  // RK4 step
  const int stride = 16;  // table spacing in steps
  const double r_max = 40.0;

  const double s_zero = radial_potential_zero(mu3, mu5);
  double lo = s_zero * 1.0001;
  if (ode.classify(lo, h, r_max) != -1)
    fail("radial.bracket_failure", "lower bracket does not undershoot");
  double hi = lo;
  bool bracketed = false;
  for (int k = 0; k < 60; ++k) {
    hi *= 1.3;
    if (ode.classify(hi, h, r_max) == 1) {
      bracketed = true;
      break;
    }
    lo = hi;
  }
  if (!bracketed) fail("radial.bracket_failure", "no crossing found in scan");

  for (int it = 0; it < 64 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ode.classify(mid, h, r_max) == 1 ? hi : lo) = mid;
  }
  const double a = lo;  // undershoot side: decays without crossing

  RadialProfile prof;
  prof.dr = stride * h;
  prof.central = a;
  prof.mu3 = mu3;
  prof.mu5 = mu5;
  prof.s.push_back(a);
  prof.sp.push_back(0.0);
  prof.spp.push_back(0.5 * ode.rhs(a));  // from S = a + rhs(a) r^2/4 + ...

  double s, p;
  ode.series(a, h, s, p);
  const double thresh = 3e-5 * a;
  size_t i_patch = 0;
  const size_t max_nodes = size_t(r_max / prof.dr);
  for (size_t node = 1; node <= max_nodes && i_patch == 0; ++node) {
    for (int k = (node == 1 ? 1 : 0); k < stride; ++k) {
      const double r = (double(node - 1) * stride + k) * h;
      ode.step(r, h, s, p);
    }
    prof.s.push_back(s);
    prof.sp.push_back(p);
    prof.spp.push_back(ode.rhs(s) - p / (double(node) * prof.dr));
    if (s <= thresh || s < 0.0 || p > 0.0) i_patch = node;
  }
  if (i_patch == 0) fail("radial.no_decay", "profile never reached the tail");
  // If the trajectory turned or crossed first, match at the smallest |S|.
  if (prof.s[i_patch] > thresh || prof.s[i_patch] < 0.0) {
    size_t best = i_patch;
    for (size_t i = i_patch / 2; i <= i_patch; ++i)
      if (std::abs(prof.s[i]) < std::abs(prof.s[best])) best = i;
    i_patch = best;
  }

  const double r_patch = double(i_patch) * prof.dr;
  prof.tail_c = prof.s[i_patch] / std::cyl_bessel_k(0.0, r_patch);
  prof.tail_r = r_patch;
  const double sp_tail = -prof.tail_c * std::cyl_bessel_k(1.0, r_patch);
  prof.tail_mismatch = std::abs(prof.sp[i_patch] - sp_tail) /
                       std::max(std::abs(prof.sp[i_patch]), 1e-300);

  prof.s.resize(i_patch + 1);
  prof.sp.resize(i_patch + 1);
  prof.spp.resize(i_patch + 1);
  const size_t i_end = i_patch + size_t(28.0 / prof.dr);
  for (size_t i = i_patch + 1; i <= i_end; ++i) {
    const double r = double(i) * prof.dr;
    const double k0 = std::cyl_bessel_k(0.0, r);
    const double k1 = std::cyl_bessel_k(1.0, r);
    prof.s.push_back(prof.tail_c * k0);
    prof.sp.push_back(-prof.tail_c * k1);
    prof.spp.push_back(prof.tail_c * (k0 + k1 / r));  // K0'' = K0 + K1/r
  }
  return prof;
}

// 2 pi int f(r) r dr over the stored table by composite Simpson.
namespace detail {
template <typename F>
double radial_integral(const RadialProfile& prof, F f) {
  const size_t n = prof.s.size();
  long double acc = 0.0L;
  size_t i = 0;
  for (; i + 2 < n; i += 2) {
    const double r0 = double(i) * prof.dr, r1 = r0 + prof.dr,
                 r2 = r0 + 2.0 * prof.dr;
    acc += (long double)(prof.dr / 3.0) *
           ((long double)(f(i) * r0) + 4.0L * (long double)(f(i + 1) * r1) +
            (long double)(f(i + 2) * r2));
  }
  if (i + 2 == n) {  // one interval left: trapezoid on tail-level values
    const double r0 = double(i) * prof.dr, r1 = r0 + prof.dr;
    acc += (long double)(0.5 * prof.dr) *
           ((long double)(f(i) * r0) + (long double)(f(i + 1) * r1));
  }
  return double(2.0L * (long double)M_PI * acc);
}
}  // namespace detail

struct RadialMoments {
  double m2, m4, m6;  // L^2, L^4, L^6 norms to their powers
  double grad;        // gradient norm squared
};

inline RadialMoments radial_moments(const RadialProfile& prof) {
  const auto& s = prof.s;
  const auto& sp = prof.sp;
  RadialMoments m;
  m.m2 = detail::radial_integral(prof, [&](size_t i) { return s[i] * s[i]; });
  m.m4 = detail::radial_integral(
      prof, [&](size_t i) { return s[i] * s[i] * s[i] * s[i]; });
  m.m6 = detail::radial_integral(prof, [&](size_t i) {
    const double q = s[i] * s[i];
    return q * q * q;
  });
  m.grad =
      detail::radial_integral(prof, [&](size_t i) { return sp[i] * sp[i]; });
  return m;
}

// Shared solves: the Townes profile (cubic), the quintic profile, and the
// unit-frequency cubic-quintic family keyed by the quintic coupling.
inline std::shared_ptr<const RadialProfile> townes_profile() {
  static const auto p =
      std::make_shared<const RadialProfile>(solve_radial_ground(1.0, 0.0));
  return p;
}

inline std::shared_ptr<const RadialProfile> quintic_profile() {
  static const auto p =
      std::make_shared<const RadialProfile>(solve_radial_ground(0.0, 1.0));
  return p;
}

inline std::shared_ptr<const RadialProfile> cq_profile(double beta) {
  static std::mutex mu;
  static std::map<double, std::shared_ptr<const RadialProfile>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(beta);
  if (it != cache.end()) return it->second;
  auto p = std::make_shared<const RadialProfile>(solve_radial_ground(1.0, beta));
  cache.emplace(beta, p);
  return p;
}

// Physical cubic-quintic ground state quantities at frequency w, via the
// scaling u = sqrt(w) v(sqrt(w) x): mass is invariant, the gradient and L^4
// terms pick up w, the L^6 term w^2.
struct CqGround {
  double omega;
  double mass_sq, grad, f4, f6;
};

inline CqGround cq_ground_quantities(double omega) {
  if (!(omega > 0.0)) fail("radial.bad_omega", "omega must be positive");
  const RadialMoments m = radial_moments(*cq_profile(omega));
  return CqGround{omega, m.m2, omega * m.grad, omega * m.m4,
                  omega * omega * m.m6};
}

// mass(omega) is strictly decreasing on the ground branch, from M(Q) at
// omega -> 0 to 0 as omega -> infinity; invert by bisection.
inline double cq_omega_of_mass(double mass, double rel_tol = 1e-12) {
  if (!(mass > 0.0)) fail("radial.bad_mass", "mass must be positive");
  const double target = mass * mass;
  double lo = 1e-6, hi = 1.0;
  while (cq_ground_quantities(hi).mass_sq > target) {
    hi *= 4.0;
    if (hi > 1e12) fail("radial.mass_too_small", "no omega matches this mass");
  }
  if (cq_ground_quantities(lo).mass_sq < target)
    fail("radial.mass_too_large", "mass at or above the critical value");
  for (int it = 0; it < 60 && hi - lo > rel_tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cq_ground_quantities(mid).mass_sq > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Closed-form source A v(k|x|) built on a radial table; closed under T_lambda
// and amplitude rescaling, so ground-state fields dilate analytically.
class RadialSource : public Generator {
 public:
  RadialSource(std::shared_ptr<const RadialProfile> prof, double amp, double k)
      : prof_(std::move(prof)), amp_(amp), k_(k) {}

  cplx eval(double x, double y) const override {
    return cplx(amp_ * prof_->eval(k_ * std::sqrt(x * x + y * y)), 0.0);
  }
  std::shared_ptr<const Generator> dilated(double lambda) const override {
    return std::make_shared<RadialSource>(prof_, amp_ * lambda, k_ * lambda);
  }
  std::shared_ptr<const Generator> amplified(double a) const override {
    return std::make_shared<RadialSource>(prof_, amp_ * a, k_);
  }

 private:
  std::shared_ptr<const RadialProfile> prof_;
  double amp_, k_;
};

// Sample the physical profile sqrt(w) v(sqrt(w)|x|) on a 2D grid.
inline Field resample_radial(std::shared_ptr<const RadialProfile> prof,
                             const GridSpec& spec, double omega) {
  const double sw = std::sqrt(omega);
  return sample(spec, std::make_shared<RadialSource>(std::move(prof), sw, sw));
}

}  // namespace cqnls

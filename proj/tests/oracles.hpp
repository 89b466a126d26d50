#pragma once
// Test-side oracles, independent of the library's solvers.
//
// Analytic Gaussian integrals: for u = a e^{-|x|^2/(2 sigma^2)} in 2D,
//   ||u||_2^2 = pi a^2 sigma^2, ||u||_4^4 = pi a^4 sigma^2 / 2,
//   ||u||_6^6 = pi a^6 sigma^2 / 3, ||grad u||_2^2 = pi a^2 (sigma-free).
//
// Townes oracle: plain fixed-step RK4 shooting for Q'' + Q'/r - Q + Q^3 = 0,
// bisecting the central value between decay and sign change. Deliberately a
// different integrator and bracket logic from the library's radial solver.

#include <cmath>
#include <vector>

namespace oracles {

struct GaussianNorms {
  double l2_sq, l4_4, l6_6, grad_sq;
};

inline GaussianNorms gaussian_norms(double a = 1.0, double sigma = 1.0) {
  const double s2 = sigma * sigma;
  return {M_PI * a * a * s2, M_PI * a * a * a * a * s2 / 2.0,
          M_PI * std::pow(a, 6) * s2 / 3.0, M_PI * a * a};
}

struct TownesOracle {
  double q0 = 0.0;       // central value
  double mass_sq = 0.0;  // 2 pi  integral of Q^2 r dr
};

// Classification: +1 means the profile crossed zero (central value too big),
// -1 means it turned back upward while positive (too small).
inline int townes_shot(double a, double h, double r_max,
                       std::vector<double>* qs = nullptr) {
  double q = a, p = 0.0, r = h;
  // series start: q(r) = a + (a - a^3) r^2 / 4
  q = a + (a - a * a * a) * h * h / 4.0;
  p = (a - a * a * a) * h / 2.0;
  if (qs) {
    qs->push_back(a);
    qs->push_back(q);
  }
  auto f = [](double r_, double q_, double p_) {
    return -p_ / r_ + q_ - q_ * q_ * q_;
  };
  while (r < r_max) {
    const double k1q = p, k1p = f(r, q, p);
    const double k2q = p + 0.5 * h * k1p, k2p = f(r + 0.5 * h, q + 0.5 * h * k1q, p + 0.5 * h * k1p);
    const double k3q = p + 0.5 * h * k2p, k3p = f(r + 0.5 * h, q + 0.5 * h * k2q, p + 0.5 * h * k2p);
    const double k4q = p + h * k3p, k4p = f(r + h, q + h * k3q, p + h * k3p);
    q += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
    p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    r += h;
    if (qs) qs->push_back(q);
    if (q < 0.0) return +1;
    if (p > 0.0 && q > 0.0) return -1;
  }
  return -1;  // never crossed: treat as undershoot-side
}

inline TownesOracle townes_oracle() {
  const double h = 5e-4, r_max = 25.0;
  double lo = 1.5, hi = 3.5;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    (townes_shot(mid, h, r_max) > 0 ? hi : lo) = mid;
  }
  const double a = 0.5 * (lo + hi);
  std::vector<double> qs;
  townes_shot(a, h, r_max, &qs);
  // trapezoid mass on the stored path; stop once the tail is sub-roundoff
  double acc = 0.0;
  for (size_t i = 1; i < qs.size(); ++i) {
    const double r0 = (i - 1) * h, r1 = i * h;
    if (std::abs(qs[i]) < 1e-12 && r1 > 10.0) break;
    acc += 0.5 * h * (qs[i - 1] * qs[i - 1] * r0 + qs[i] * qs[i] * r1);
  }
  return {a, 2.0 * M_PI * acc};
}

// Same shooting scheme for the quintic equation W'' + W'/r - W + W^5 = 0,
// whose mass squared gives the best constant of the sextic interpolation
// inequality as (4/3) * (mass_sq)^2.
inline int quintic_shot(double a, double h, double r_max,
                        std::vector<double>* ws = nullptr) {
  auto cube5 = [](double q) { return q * q * q * q * q; };
  double q = a + (a - cube5(a)) * h * h / 4.0;
  double p = (a - cube5(a)) * h / 2.0;
  double r = h;
  if (ws) {
    ws->push_back(a);
    ws->push_back(q);
  }
  auto f = [&](double r_, double q_, double p_) {
    return -p_ / r_ + q_ - cube5(q_);
  };
  while (r < r_max) {
    const double k1q = p, k1p = f(r, q, p);
    const double k2q = p + 0.5 * h * k1p, k2p = f(r + 0.5 * h, q + 0.5 * h * k1q, p + 0.5 * h * k1p);
    const double k3q = p + 0.5 * h * k2p, k3p = f(r + 0.5 * h, q + 0.5 * h * k2q, p + 0.5 * h * k2p);
    const double k4q = p + h * k3p, k4p = f(r + h, q + h * k3q, p + h * k3p);
    q += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
    p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    r += h;
    if (ws) ws->push_back(q);
    if (q < 0.0) return +1;
    if (p > 0.0 && q > 0.0) return -1;
  }
  return -1;
}

inline TownesOracle quintic_oracle() {
  const double h = 5e-4, r_max = 25.0;
  double lo = 1.5, hi = 3.5;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    (quintic_shot(mid, h, r_max) > 0 ? hi : lo) = mid;
  }
  const double a = 0.5 * (lo + hi);
  std::vector<double> ws;
  quintic_shot(a, h, r_max, &ws);
  double acc = 0.0;
  for (size_t i = 1; i < ws.size(); ++i) {
    const double r0 = (i - 1) * h, r1 = i * h;
    if (std::abs(ws[i]) < 1e-12 && r1 > 10.0) break;
    acc += 0.5 * h * (ws[i - 1] * ws[i - 1] * r0 + ws[i] * ws[i] * r1);
  }
  return {a, 2.0 * M_PI * acc};
}

}  // namespace oracles

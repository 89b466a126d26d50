#pragma once
// Conserved and variational quantities of the focusing-focusing cubic-quintic
// NLS in 2D, plus the mass-preserving scaling family T_lambda u = lambda u(lambda x).
//
//   M(u) = ||u||_2                      (the norm itself)
//   H(u) = 1/2 ||grad u||^2 - 1/4 ||u||_4^4 - 1/6 ||u||_6^6
//   K(u) = ||grad u||^2 - 1/2 ||u||_4^4 - 2/3 ||u||_6^6
//   I(u) = H - K/2 = ||u||_6^6 / 6  >= 0
//   S_omega(u) = omega/2 M^2 + H
//
// Along the fiber lambda -> T_lambda u both H and K are quartic polynomials:
//   K(T_lambda u) = a2 lambda^2 - a4 lambda^4,  a2 = ||grad u||^2 - 1/2||u||_4^4, a4 = 2/3 ||u||_6^6
//   H(T_lambda u) = h2 lambda^2 - h4 lambda^4,  h2 = a2/2 + ... see fiber_coeffs
// K has exactly one positive zero lambda_star when a2 > 0, which the
// subcritical mass condition guarantees.

#include <cmath>
#include <optional>

#include "cqnls/generators.hpp"
#include "cqnls/grid.hpp"

namespace cqnls {

struct FunctionalReport {
  double mass = 0.0;      // M = ||u||_2
  double energy = 0.0;    // H
  double virial = 0.0;    // K
  double residual = 0.0;  // I = ||u||_6^6/6, equals energy - virial/2
  std::optional<double> lyapunov;  // S_omega when omega supplied
};

struct FiberCoeffs {
  double a2 = 0.0, a4 = 0.0;  // K(T_l u) = a2 l^2 - a4 l^4
  double h2 = 0.0, h4 = 0.0;  // H(T_l u) = h2 l^2 - h4 l^4
  double k_at(double l) const { return l * l * (a2 - a4 * l * l); }
  double h_at(double l) const { return l * l * (h2 - h4 * l * l); }
};

inline FunctionalReport evaluate(const Field& u,
                                 std::optional<double> omega = std::nullopt) {
  require_finite(u, "evaluate");
  const double m2 = lp_norm_p(u, 2);
  const double f4 = lp_norm_p(u, 4);
  const double f6 = lp_norm_p(u, 6);
  const double g = grad_norm_sq(u);
  FunctionalReport r;
  r.mass = std::sqrt(m2);
  r.energy = 0.5 * g - 0.25 * f4 - f6 / 6.0;
  r.virial = g - 0.5 * f4 - (2.0 / 3.0) * f6;
  r.residual = f6 / 6.0;  // nonnegative by construction; equals H - K/2
  if (omega) r.lyapunov = 0.5 * (*omega) * m2 + r.energy;
  return r;
}

inline FiberCoeffs fiber_coeffs(const Field& u) {
  const double f4 = lp_norm_p(u, 4);
  const double f6 = lp_norm_p(u, 6);
  const double g = grad_norm_sq(u);
  return FiberCoeffs{g - 0.5 * f4, (2.0 / 3.0) * f6,
                     0.5 * g - 0.25 * f4, f6 / 6.0};
}

// T_lambda u. Analytic re-evaluation when the field carries a closed-form
// source, trigonometric resampling otherwise. Warns when the result leaks
// spectral mass into the Nyquist band (lambda too aggressive for the grid).
inline Field scale(const Field& u, double lambda) {
  if (!(lambda > 0.0))
    fail("scale.bad_lambda", "T_lambda requires lambda > 0");
  require_finite(u, "scale");
  Field out;
  if (u.source) {
    out = sample(u.spec, u.source->dilated(lambda));
  } else {
    out.spec = u.spec;
    out.values = dilate_samples(u.spec, u.values, lambda);
    for (cplx& z : out.values) z *= lambda;
  }
  if (nyquist_fraction(u.spec, fft2(u.spec, out.values)) > 1e-6)
    warnings::emit("scale: rescaled field leaks past the Nyquist band "
                   "(lambda = " + std::to_string(lambda) + ")");
  return out;
}

// Unique positive zero of lambda -> K(T_lambda u):
//   lambda* = sqrt(3 (2||grad u||^2 - ||u||_4^4) / (4 ||u||_6^6)).
// Requires u != 0 and 2||grad u||^2 - ||u||_4^4 > 0; the latter holds for all
// u with M(u) < M(Q) and fails signal a mass-constraint violation.
inline double lambda_star(const Field& u) {
  const double f4 = lp_norm_p(u, 4);
  const double f6 = lp_norm_p(u, 6);
  const double g = grad_norm_sq(u);
  if (f6 == 0.0 && g == 0.0)
    fail("lambda_star.zero_field", "lambda_star undefined for the zero field");
  const double num = 2.0 * g - f4;
  if (!(num > 0.0))
    fail("lambda_star.gradient_deficit",
         "2||grad u||^2 - ||u||_4^4 <= 0; mass constraint M(u) < M(Q) violated");
  if (!(f6 > 0.0))
    fail("lambda_star.zero_field", "||u||_6 = 0 with nonzero gradient");
  return std::sqrt(3.0 * num / (4.0 * f6));
}

// ||grad u||^2 ||u||_2^2 / ||u||_4^4, infimized by the cubic ground state.
inline double gn_quotient_quartic(const Field& u) {
  const double f4 = lp_norm_p(u, 4);
  if (!(f4 > 0.0)) fail("gn.zero_field", "quartic GN quotient needs u != 0");
  return grad_norm_sq(u) * lp_norm_p(u, 2) / f4;
}

// ||grad u||^4 ||u||_2^2 / ||u||_6^6, infimized by the quintic ground state.
inline double gn_quotient_sextic(const Field& u) {
  const double f6 = lp_norm_p(u, 6);
  if (!(f6 > 0.0)) fail("gn.zero_field", "sextic GN quotient needs u != 0");
  const double g = grad_norm_sq(u);
  return g * g * lp_norm_p(u, 2) / f6;
}

// Variational derivative of H: g = -(laplacian u + |u|^2 u + |u|^4 u), so that
// d/de H(u + e v)|_0 = Re <g, v>.
inline Field energy_gradient(const Field& u) {
  Field lap = spectral_laplacian(u);
  Field g = make_field(u.spec);
  for (size_t i = 0; i < u.values.size(); ++i) {
    const double a2 = std::norm(u.values[i]);
    g.values[i] = -(lap.values[i] + (a2 + a2 * a2) * u.values[i]);
  }
  return g;
}

}  // namespace cqnls

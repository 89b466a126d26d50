#pragma once
// Periodic square grid [-L/2, L/2)^2 with spectral differentiation and
// quadrature. Fields are row-major complex samples, values[iy*n + ix], with
// x = -L/2 + ix*dx. Transforms use the unitary-pair convention: forward
// carries weight 1, inverse carries 1/N^2; integrate() carries the quadrature
// weight dx^2 explicitly. The Gagliardo-Nirenberg quotients downstream are
// normalization-sensitive, so this convention is part of the contract.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "cqnls/core.hpp"

namespace cqnls {

struct GridSpec {
  int n_points = 0;         // samples per axis, power of two, >= 8
  double box_length = 0.0;  // L

  double spacing() const { return box_length / n_points; }
  int size() const { return n_points * n_points; }
  double quad_weight() const { return spacing() * spacing(); }

  // Node coordinate along one axis.
  double coord(int i) const { return -0.5 * box_length + i * spacing(); }

  // Signed frequencies 2*pi*f/L, f = i for i < n/2 and i - n otherwise.
  // Contains 0 and is antisymmetric except for the lone -n/2 Nyquist entry.
  std::vector<double> wavenumbers() const {
    std::vector<double> k(n_points);
    const double base = 2.0 * M_PI / box_length;
    for (int i = 0; i < n_points; ++i) {
      int f = (i < n_points / 2) ? i : i - n_points;
      k[i] = base * f;
    }
    return k;
  }

  bool operator==(const GridSpec& o) const {
    return n_points == o.n_points && box_length == o.box_length;
  }
};

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

inline GridSpec make_grid(int n_points, double box_length) {
  if (n_points < 8 || !is_power_of_two(n_points))
    fail("grid.bad_n", "n_points must be a power of two >= 8, got " +
                           std::to_string(n_points));
  if (!(box_length > 0.0))
    fail("grid.bad_length", "box_length must be positive");
  return GridSpec{n_points, box_length};
}

class Generator;  // closed-form field source, see generators.hpp

struct Field {
  GridSpec spec;
  std::vector<cplx> values;
  // Closed-form provenance; lets scale() re-evaluate analytically instead of
  // resampling. Never serialized.
  std::shared_ptr<const Generator> source;
};

inline Field make_field(const GridSpec& spec) {
  return Field{spec, std::vector<cplx>(spec.size(), cplx{0.0, 0.0}), nullptr};
}

inline void require_finite(const Field& u, const char* where) {
  for (const cplx& v : u.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail("field.not_finite", std::string(where) + ": field has NaN/Inf entries");
}

inline void require_same_grid(const Field& a, const Field& b, const char* where) {
  if (!(a.spec == b.spec))
    fail("field.grid_mismatch", std::string(where) + ": fields on different grids");
}

// ---------------------------------------------------------------------------
// FFT backend. Plans are cached per (length, sign); creation is serialized
// because the FFTW planner is not thread-safe, execution via execute_dft is.
// FFTW_ESTIMATE keeps plan choice deterministic across runs.

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache c;
    return c;
  }

  fftw_plan plan2d(int n, int sign) { return get(key2d(n, sign), n, sign, true); }
  fftw_plan plan1d(int len, int sign) { return get(key1d(len, sign), len, sign, false); }

 private:
  std::mutex mu_;
  std::map<int64_t, fftw_plan> plans_;

  static int64_t key2d(int n, int sign) { return (int64_t(n) << 3) | (sign > 0 ? 1 : 0) | 4; }
  static int64_t key1d(int len, int sign) { return (int64_t(len) << 3) | (sign > 0 ? 1 : 0); }

  fftw_plan get(int64_t key, int n, int sign, bool two_d) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const size_t count = two_d ? size_t(n) * n : size_t(n);
    fftw_complex* a = fftw_alloc_complex(count);
    fftw_complex* b = fftw_alloc_complex(count);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan p = two_d ? fftw_plan_dft_2d(n, n, a, b, sign, flags)
                        : fftw_plan_dft_1d(n, a, b, sign, flags);
    fftw_free(a);
    fftw_free(b);
    if (!p) fail("fft.plan_failed", "FFTW plan creation failed");
    plans_.emplace(key, p);
    return p;
  }
};

inline fftw_complex* as_fftw(std::vector<cplx>& v) {
  return reinterpret_cast<fftw_complex*>(v.data());
}
inline fftw_complex* as_fftw(const std::vector<cplx>& v) {
  return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(v.data()));
}

}  // namespace detail

// Forward transform, weight 1.
inline std::vector<cplx> fft2(const GridSpec& spec, const std::vector<cplx>& in) {
  std::vector<cplx> out(in.size());
  fftw_plan p = detail::PlanCache::instance().plan2d(spec.n_points, FFTW_FORWARD);
  fftw_execute_dft(p, detail::as_fftw(in), detail::as_fftw(out));
  return out;
}

// Inverse transform, weight 1/N^2 (unitary pair with fft2).
inline std::vector<cplx> ifft2(const GridSpec& spec, const std::vector<cplx>& in) {
  std::vector<cplx> out(in.size());
  fftw_plan p = detail::PlanCache::instance().plan2d(spec.n_points, FFTW_BACKWARD);
  fftw_execute_dft(p, detail::as_fftw(in), detail::as_fftw(out));
  const double scale = 1.0 / double(spec.size());
  for (cplx& z : out) z *= scale;
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature. Long double accumulation keeps the Parseval identity and the
// analytic-integral checks at the 1e-13 level on 256^2 grids.

inline double integrate(const Field& f) {
  long double acc = 0.0L;
  for (const cplx& v : f.values) acc += v.real();
  return double(acc) * f.spec.quad_weight();
}

inline double lp_norm_p(const Field& u, int p) {
  if (p != 2 && p != 4 && p != 6)
    fail("grid.bad_lp", "lp_norm_p supports p in {2,4,6}, got " + std::to_string(p));
  long double acc = 0.0L;
  for (const cplx& v : u.values) {
    long double s = (long double)(v.real()) * v.real() + (long double)(v.imag()) * v.imag();
    if (p == 4) s *= s;
    if (p == 6) s = s * s * s;
    acc += s;
  }
  return double(acc) * u.spec.quad_weight();
}

// <f, g> = integral of f * conj(g).
inline cplx inner_product(const Field& f, const Field& g) {
  require_same_grid(f, g, "inner_product");
  long double re = 0.0L, im = 0.0L;
  for (size_t i = 0; i < f.values.size(); ++i) {
    cplx z = f.values[i] * std::conj(g.values[i]);
    re += z.real();
    im += z.imag();
  }
  return cplx(double(re), double(im)) * f.spec.quad_weight();
}

// Fraction of spectral mass sitting in the Nyquist band (either axis index
// at n/2). The resolution warnings key off this.
inline double nyquist_fraction(const GridSpec& spec, const std::vector<cplx>& hat) {
  const int n = spec.n_points;
  long double total = 0.0L, band = 0.0L;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      long double m = std::norm(hat[size_t(iy) * n + ix]);
      total += m;
      if (ix == n / 2 || iy == n / 2) band += m;
    }
  if (total == 0.0L) return 0.0;
  return double(band / total);
}

// ||grad u||_2^2 as sum |k|^2 |u_hat|^2 with the unitary-pair weights; exact
// on the discrete torus. Emits a warning when the Nyquist band carries more
// than 1e-6 of the spectral mass (field under-resolved).
inline double grad_norm_sq(const Field& u) {
  std::vector<cplx> hat = fft2(u.spec, u.values);
  const int n = u.spec.n_points;
  const std::vector<double> k = u.spec.wavenumbers();
  if (nyquist_fraction(u.spec, hat) > 1e-6)
    warnings::emit("grad_norm_sq: Nyquist-band energy fraction exceeds 1e-6; "
                   "field under-resolved on this grid");
  long double acc = 0.0L;
  for (int iy = 0; iy < n; ++iy) {
    const double ky2 = k[iy] * k[iy];
    for (int ix = 0; ix < n; ++ix) {
      const double k2 = k[ix] * k[ix] + ky2;
      acc += k2 * (long double)std::norm(hat[size_t(iy) * n + ix]);
    }
  }
  return double(acc) * u.spec.quad_weight() / double(u.spec.size());
}

// ---------------------------------------------------------------------------
// Spectral derivative fields. First derivatives zero the Nyquist line (the
// odd-order multiplier has no consistent sign there); the Laplacian keeps its
// full |k|^2 magnitude.

namespace detail {

inline std::vector<double> odd_multipliers(const GridSpec& spec) {
  std::vector<double> k = spec.wavenumbers();
  k[spec.n_points / 2] = 0.0;
  return k;
}

}  // namespace detail

inline Field spectral_dx(const Field& u) {
  std::vector<cplx> hat = fft2(u.spec, u.values);
  const int n = u.spec.n_points;
  const std::vector<double> k = detail::odd_multipliers(u.spec);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) hat[size_t(iy) * n + ix] *= cplx(0.0, k[ix]);
  return Field{u.spec, ifft2(u.spec, hat), nullptr};
}

inline Field spectral_dy(const Field& u) {
  std::vector<cplx> hat = fft2(u.spec, u.values);
  const int n = u.spec.n_points;
  const std::vector<double> k = detail::odd_multipliers(u.spec);
  for (int iy = 0; iy < n; ++iy) {
    const cplx iky(0.0, k[iy]);
    for (int ix = 0; ix < n; ++ix) hat[size_t(iy) * n + ix] *= iky;
  }
  return Field{u.spec, ifft2(u.spec, hat), nullptr};
}

inline Field spectral_laplacian(const Field& u) {
  std::vector<cplx> hat = fft2(u.spec, u.values);
  const int n = u.spec.n_points;
  const std::vector<double> k = u.spec.wavenumbers();
  for (int iy = 0; iy < n; ++iy) {
    const double ky2 = k[iy] * k[iy];
    for (int ix = 0; ix < n; ++ix)
      hat[size_t(iy) * n + ix] *= -(k[ix] * k[ix] + ky2);
  }
  return Field{u.spec, ifft2(u.spec, hat), nullptr};
}

// ---------------------------------------------------------------------------
// Trigonometric resampling of u at the dilated nodes lambda*x, separable per
// axis via the chirp-z transform (Bluestein). Evaluates the periodic trig
// interpolant exactly (up to roundoff); the Nyquist coefficient is dropped,
// and nodes that land outside the fundamental cell (lambda > 1) produce zero
// rather than the wrapped value. Cost: O(n^2 log n) per axis. Returns samples
// of u(lambda*x) WITHOUT the T_lambda amplitude prefactor; scale() applies it.

namespace detail {

// One axis: given length-n samples f, return g_i = f_interp(lambda * x_i)
// where x_i = -L/2 + i dx. Index algebra: with xi := (lambda x_i + L/2)/dx
// = s + lambda*i, s = (1-lambda) n/2, the interpolant is
//   g_i = (1/n) sum_m F_m e^{2 pi i m (s + lambda i)/n},  m signed,
// a chirp-z evaluation handled by Bluestein with kernel W = e^{-2 pi i lambda/n}.
class CztDilate {
 public:
  CztDilate(int n, double lambda) : n_(n), lambda_(lambda), nc_(2 * n) {
    // Kernel beta[tau] = W^{tau^2/2} = e^{-i pi lambda tau^2 / n} arranged
    // 2n-periodically for tau in [-n/2, 3n/2).
    beta_.resize(nc_);
    for (int tp = 0; tp < nc_; ++tp) {
      const double tau = (tp < 3 * n_ / 2) ? tp : tp - nc_;
      beta_[tp] = chirp(tau * tau);
    }
    fftw_plan fwd = PlanCache::instance().plan1d(nc_, FFTW_FORWARD);
    beta_hat_.resize(nc_);
    fftw_execute_dft(fwd, as_fftw(beta_), as_fftw(beta_hat_));
    // Per-output phase W^{-i^2/2} and per-input phase for signed m:
    // A_m = F_m e^{i pi m (1-lambda)}, a_m = A_m W^{-m^2/2}.
    out_phase_.resize(n_);
    for (int i = 0; i < n_; ++i) out_phase_[i] = std::conj(chirp(double(i) * i));
    in_phase_.resize(n_);
    for (int mu = 0; mu < n_; ++mu) {
      const int m = mu - n_ / 2;
      const cplx shift = std::polar(1.0, M_PI * m * (1.0 - lambda_));
      in_phase_[mu] = shift * std::conj(chirp(double(m) * m));
    }
  }

  // In and out may alias.
  void apply(const cplx* in, cplx* out) const {
    std::vector<cplx> f(in, in + n_);
    std::vector<cplx> F(n_);
    fftw_plan f_fwd = PlanCache::instance().plan1d(n_, FFTW_FORWARD);
    fftw_execute_dft(f_fwd, as_fftw(f), as_fftw(F));

    std::vector<cplx> a(nc_, cplx{0.0, 0.0});
    for (int mu = 0; mu < n_; ++mu) {
      const int m = mu - n_ / 2;
      if (m == -n_ / 2) continue;  // drop Nyquist
      a[mu] = F[(mu + n_ / 2) % n_] * in_phase_[mu];
    }
    fftw_plan c_fwd = PlanCache::instance().plan1d(nc_, FFTW_FORWARD);
    fftw_plan c_bwd = PlanCache::instance().plan1d(nc_, FFTW_BACKWARD);
    std::vector<cplx> ah(nc_);
    fftw_execute_dft(c_fwd, as_fftw(a), as_fftw(ah));
    for (int t = 0; t < nc_; ++t) ah[t] *= beta_hat_[t];
    std::vector<cplx> conv(nc_);
    fftw_execute_dft(c_bwd, as_fftw(ah), as_fftw(conv));
    const double norm = 1.0 / (double(nc_) * double(n_));
    for (int i = 0; i < n_; ++i) {
      // For lambda > 1 the node lambda*x_i can leave the fundamental cell;
      // the periodic interpolant would wrap content in from the far side.
      // The true field there sits below the source's boundary amplitude, so
      // zero is the honest value.
      const double pos = lambda_ * (i - n_ / 2);
      if (pos < -0.5 * n_ || pos >= 0.5 * n_) {
        out[i] = cplx{0.0, 0.0};
        continue;
      }
      out[i] = conv[i + n_ / 2] * out_phase_[i] * norm;
    }
  }

 private:
  cplx chirp(double t_sq) const {
    // e^{-i pi lambda t^2 / n}, argument reduced in double (t^2 exact below 2^53)
    return std::polar(1.0, -M_PI * std::fmod(lambda_ * t_sq / n_, 2.0));
  }

  int n_;
  double lambda_;
  int nc_;
  std::vector<cplx> beta_, beta_hat_, out_phase_, in_phase_;
};

}  // namespace detail

inline std::vector<cplx> dilate_samples(const GridSpec& spec,
                                        const std::vector<cplx>& values,
                                        double lambda) {
  const int n = spec.n_points;
  detail::CztDilate czt(n, lambda);
  std::vector<cplx> work = values;
  std::vector<cplx> row(n);
  for (int iy = 0; iy < n; ++iy) {  // x pass
    czt.apply(&work[size_t(iy) * n], row.data());
    std::copy(row.begin(), row.end(), &work[size_t(iy) * n]);
  }
  std::vector<cplx> col(n), col_out(n);
  for (int ix = 0; ix < n; ++ix) {  // y pass
    for (int iy = 0; iy < n; ++iy) col[iy] = work[size_t(iy) * n + ix];
    czt.apply(col.data(), col_out.data());
    for (int iy = 0; iy < n; ++iy) work[size_t(iy) * n + ix] = col_out[iy];
  }
  return work;
}

inline double sup_norm(const Field& u) {
  double m = 0.0;
  for (const cplx& v : u.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace cqnls

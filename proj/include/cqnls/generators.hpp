#pragma once
// Closed-form field sources. A Field built from a Generator keeps a pointer
// to it, so the mass-preserving rescale can re-evaluate analytically instead
// of resampling; lambda sweeps then stay alias-free by construction.

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "cqnls/grid.hpp"

namespace cqnls {

class Generator {
 public:
  virtual ~Generator() = default;
  virtual cplx eval(double x, double y) const = 0;
  // T_lambda g = lambda * g(lambda x) as a new closed form.
  virtual std::shared_ptr<const Generator> dilated(double lambda) const = 0;
  virtual std::shared_ptr<const Generator> amplified(double a) const = 0;
};

// Sum of modulated Gaussian packets a * exp(-|x-c|^2/(2 sigma^2) + i k.x + i phase).
// Closed under both T_lambda and amplitude rescaling.
class GaussianPack : public Generator {
 public:
  struct Packet {
    double amp_re = 1.0, amp_im = 0.0;
    double cx = 0.0, cy = 0.0;
    double sigma = 1.0;
    double kx = 0.0, ky = 0.0;
  };

  explicit GaussianPack(std::vector<Packet> packets) : packets_(std::move(packets)) {}

  cplx eval(double x, double y) const override {
    cplx acc{0.0, 0.0};
    for (const Packet& p : packets_) {
      const double dx = x - p.cx, dy = y - p.cy;
      const double env = std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma));
      const double phase = p.kx * x + p.ky * y;
      acc += cplx(p.amp_re, p.amp_im) * env * std::polar(1.0, phase);
    }
    return acc;
  }

  std::shared_ptr<const Generator> dilated(double lambda) const override {
    std::vector<Packet> out = packets_;
    for (Packet& p : out) {
      p.amp_re *= lambda;
      p.amp_im *= lambda;
      p.cx /= lambda;
      p.cy /= lambda;
      p.sigma /= lambda;
      p.kx *= lambda;
      p.ky *= lambda;
    }
    return std::make_shared<GaussianPack>(std::move(out));
  }

  std::shared_ptr<const Generator> amplified(double a) const override {
    std::vector<Packet> out = packets_;
    for (Packet& p : out) {
      p.amp_re *= a;
      p.amp_im *= a;
    }
    return std::make_shared<GaussianPack>(std::move(out));
  }

  const std::vector<Packet>& packets() const { return packets_; }

 private:
  std::vector<Packet> packets_;
};

inline Field sample(const GridSpec& spec, std::shared_ptr<const Generator> gen) {
  Field f = make_field(spec);
  const int n = spec.n_points;
  for (int iy = 0; iy < n; ++iy) {
    const double y = spec.coord(iy);
    for (int ix = 0; ix < n; ++ix)
      f.values[size_t(iy) * n + ix] = gen->eval(spec.coord(ix), y);
  }
  f.source = std::move(gen);
  return f;
}

// The reference Gaussian e^{-|x|^2/2}: closed-form norms pi, pi/2, pi/3 and
// gradient norm pi anchor many tests.
inline Field unit_gaussian(const GridSpec& spec) {
  return sample(spec, std::make_shared<GaussianPack>(
                          std::vector<GaussianPack::Packet>{{}}));
}

// Random pack confined to the box core: centers within L/8, widths ~ O(1),
// gentle modulation, so both the field and its moderate dilations remain
// resolved and boundary-negligible.
inline std::shared_ptr<const GaussianPack> random_pack(std::mt19937_64& rng,
                                                       const GridSpec& spec,
                                                       int max_packets = 3,
                                                       bool real_valued = false) {
  std::uniform_int_distribution<int> npack(1, max_packets);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cmax = spec.box_length / 8.0;
  std::vector<GaussianPack::Packet> ps(npack(rng));
  for (auto& p : ps) {
    const double mag = 0.3 + 0.7 * unit(rng);
    const double ph = real_valued ? 0.0 : 2.0 * M_PI * unit(rng);
    p.amp_re = mag * std::cos(ph);
    p.amp_im = mag * std::sin(ph);
    p.cx = cmax * (2.0 * unit(rng) - 1.0);
    p.cy = cmax * (2.0 * unit(rng) - 1.0);
    p.sigma = 0.9 + 1.3 * unit(rng);
    if (!real_valued) {
      p.kx = 1.5 * (2.0 * unit(rng) - 1.0);
      p.ky = 1.5 * (2.0 * unit(rng) - 1.0);
    }
  }
  return std::make_shared<GaussianPack>(std::move(ps));
}

}  // namespace cqnls

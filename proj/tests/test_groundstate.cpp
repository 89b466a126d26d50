#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "cqnls/groundstate.hpp"
#include "oracles.hpp"

using namespace cqnls;

namespace {

// Minimizers are reused across test cases; cold-start each mass once.
const GroundState& sc(double frac) {
  static std::map<double, GroundState> cache;
  auto it = cache.find(frac);
  if (it == cache.end())
    it = cache.emplace(frac, minimize_mc(frac * townes_mass(), {}, 1e-7))
             .first;
  return it->second;
}

double h_of(const Field& u) {
  return 0.5 * grad_norm_sq(u) - 0.25 * lp_norm_p(u, 4) -
         lp_norm_p(u, 6) / 6.0;
}

double k_of(const Field& u) {
  return grad_norm_sq(u) - 0.5 * lp_norm_p(u, 4) -
         (2.0 / 3.0) * lp_norm_p(u, 6);
}

}  // namespace

TEST_CASE("cubic ground state matches an independent shooting oracle",
          "[groundstate]") {
  const oracles::TownesOracle oracle = oracles::townes_oracle();
  GroundState gs = shoot_Q(1e-6);

  const double center = sup_norm(gs.profile);
  std::printf("Q(0) lib=%.8f oracle=%.8f  M(Q)^2 lib=%.8f oracle=%.8f\n",
              center, oracle.q0, gs.mass * gs.mass, oracle.mass_sq);
  CHECK(center == Catch::Approx(2.2062).epsilon(1e-3));
  CHECK(center == Catch::Approx(oracle.q0).epsilon(1e-6));
  CHECK(gs.mass * gs.mass == Catch::Approx(11.70).epsilon(1e-3));
  CHECK(gs.mass * gs.mass == Catch::Approx(oracle.mass_sq).epsilon(1e-5));

  // best quartic interpolation constant equals half the critical mass squared
  const double cgn = gn_quotient_quartic(gs.profile);
  std::printf("C_GN=%.8f  M(Q)^2/2=%.8f\n", cgn, 0.5 * oracle.mass_sq);
  CHECK(cgn == Catch::Approx(0.5 * oracle.mass_sq).epsilon(5e-3));

  CHECK(gs.omega == 1.0);
  CHECK(gs.virial_residual < 1e-8 * grad_norm_sq(gs.profile));
  CHECK(gs.equation_residual < 1e-6);
}

TEST_CASE("shoot_Q rejects out-of-range tolerances", "[groundstate]") {
  for (double bad : {0.0, -1e-6, 2e-4}) {
    try {
      shoot_Q(bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == "groundstate.bad_tolerance");
    }
  }
}

TEST_CASE("radial oracle satisfies its equation and the virial identity",
          "[groundstate]") {
  for (double w : {0.5, 1.0, 1.7525}) {
    GroundState gs = ode_oracle(w);
    std::printf("ode_oracle w=%.4f mass=%.8f eqres=%.3e |K|/G=%.3e\n", w,
                gs.mass, gs.equation_residual,
                gs.virial_residual / grad_norm_sq(gs.profile));
    CHECK(gs.equation_residual < 1e-6);
    CHECK(gs.virial_residual < 1e-6 * grad_norm_sq(gs.profile));
    CHECK(gs.mass > 0.0);
    CHECK(gs.omega == w);
  }
  CHECK_THROWS_AS(ode_oracle(0.0), Error);
  CHECK_THROWS_AS(ode_oracle(-2.0), Error);
}

TEST_CASE("oracle and minimizer describe the same family", "[groundstate]") {
  const GroundState& min = sc(0.5);
  GroundState orc = ode_oracle(min.omega);
  std::printf("c=0.5MQ: minimizer mass=%.8f oracle mass=%.8f omega=%.6f\n",
              min.mass, orc.mass, min.omega);
  CHECK(orc.mass == Catch::Approx(min.mass).epsilon(1e-2));
}

TEST_CASE("minimizer lands exactly on the constraint manifold",
          "[groundstate]") {
  const double mq = townes_mass();
  for (double frac : {0.35, 0.5, 0.9}) {
    const GroundState& gs = sc(frac);
    const double g = grad_norm_sq(gs.profile);
    std::printf("c=%.2fMQ m_c=%.10f omega=%.6f |K|/G=%.3e eqres=%.3e\n", frac,
                gs.energy, gs.omega, k_of(gs.profile) / g,
                gs.equation_residual);
    CHECK(std::abs(k_of(gs.profile)) <= 1e-8 * g);
    CHECK(std::abs(gs.mass - frac * mq) <= 1e-10 * frac * mq);
    CHECK(gs.equation_residual < 1e-6);
    CHECK(gs.virial_residual < 1e-8 * g);
    CHECK(gs.omega > 0.0);

    // positive and radially nonincreasing through the profile's core
    const GridSpec& spec = gs.profile.spec;
    const int n = spec.n_points;
    const int row = n / 2;
    double prev = 0.0;
    for (int ix = n / 2; ix < n; ++ix) {
      const double v = gs.profile.values[size_t(row) * n + ix].real();
      const double r = spec.coord(ix);
      if (r > 0.4 * spec.box_length) break;
      CHECK(v > 0.0);
      if (ix > n / 2) CHECK(v <= prev * (1.0 + 1e-12) + 1e-14);
      prev = v;
    }
  }
}

TEST_CASE("minimizer rejects endpoint masses and bad tolerances",
          "[groundstate]") {
  const double mq = townes_mass();
  for (double frac : {0.01, 0.999, -0.5}) {
    try {
      minimize_mc(frac * mq, {}, 1e-6);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == "groundstate.c_out_of_range");
    }
  }
  CHECK_THROWS_AS(minimize_mc(0.5 * mq, {}, 0.0), Error);
  CHECK_THROWS_AS(minimize_mc(0.5 * mq, {}, -1e-7), Error);
}

TEST_CASE("gradient and energy obey the critical-mass bounds",
          "[groundstate]") {
  const double mq2 = oracles::townes_oracle().mass_sq;
  const double mw2 = oracles::quintic_oracle().mass_sq;
  const double cgn_hat = (4.0 / 3.0) * mw2 * mw2;
  std::printf("M(W)^2=%.8f  Cgn_hat=%.8f\n", mw2, cgn_hat);
  CHECK(mw2 == Catch::Approx(3.98345).epsilon(1e-4));

  for (double frac : {0.35, 0.5, 0.9}) {
    const GroundState& gs = sc(frac);
    const double c2 = gs.mass * gs.mass;
    const double g = grad_norm_sq(gs.profile);
    const double grad_lb = cgn_hat * (1.0 / c2 - 1.0 / mq2);
    const double mc_lb = 0.25 * (1.0 - c2 / mq2) * g;
    std::printf("c=%.2fMQ G=%.6f >= %.6f ; m_c=%.8f >= %.8f\n", frac, g,
                grad_lb, gs.energy, mc_lb);
    CHECK(g >= grad_lb);
    CHECK(gs.energy >= mc_lb);
  }
}

TEST_CASE("each minimizer is a strict fiber mountain pass", "[groundstate]") {
  for (double frac : {0.5, 0.9}) {
    const GroundState& gs = sc(frac);
    for (double l : {0.8, 0.9, 1.1, 1.25}) {
      Field v = scale(gs.profile, l);
      const double h = h_of(v), k = k_of(v);
      CHECK(h < gs.energy);
      if (l < 1.0) CHECK(k > 0.0);
      if (l > 1.0) CHECK(k < 0.0);
    }
  }
}

TEST_CASE("relaxing the virial constraint to K <= 0 cannot go lower",
          "[groundstate]") {
  const GroundState& gs = sc(0.5);
  const double c = gs.mass;
  const GridSpec& spec = gs.profile.spec;
  std::mt19937_64 rng(7211);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  int checked = 0;
  for (int t = 0; t < 10; ++t) {
    // perturb, restore the mass, then compress past the fiber peak so the
    // virial goes nonpositive
    Field v = gs.profile;
    const double eps = 0.02 + 0.10 * unit(rng);
    const double sx = 0.6 + 1.0 * unit(rng);
    const double cx = 2.0 * (unit(rng) - 0.5), cy = 2.0 * (unit(rng) - 0.5);
    const int n = spec.n_points;
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double x = spec.coord(ix) - cx, y = spec.coord(iy) - cy;
        v.values[size_t(iy) * n + ix] +=
            eps * std::exp(-(x * x + y * y) / (2.0 * sx * sx));
      }
    v.source = nullptr;
    const double m = std::sqrt(lp_norm_p(v, 2));
    for (auto& z : v.values) z *= c / m;
    const double ls = lambda_star(v);
    for (double push : {1.0, 1.05, 1.25}) {
      Field w = scale(v, ls * push);
      const double k = k_of(w);
      if (k > 1e-10) continue;  // only the relaxed set is in scope
      const double relaxed = h_of(w) - 0.5 * k;
      CHECK(relaxed >= gs.energy - 1e-3 * (1.0 + gs.energy));
      ++checked;
    }
  }
  CHECK(checked >= 15);
}

TEST_CASE("warm and cold starts agree at interior masses", "[groundstate]") {
  const double mq = townes_mass();
  // warm-start each mass from the minimizer of a neighbouring mass
  const double fracs[3] = {0.45, 0.6, 0.8};
  const double seeds[3] = {0.5, 0.5, 0.9};
  for (int i = 0; i < 3; ++i) {
    GroundState cold = minimize_mc(fracs[i] * mq, {}, 1e-7);
    GroundState warm =
        minimize_mc(fracs[i] * mq, sc(seeds[i]).profile, 1e-7);
    const double rel = std::abs(warm.energy - cold.energy) / cold.energy;
    std::printf("c=%.2fMQ cold=%.10f warm=%.10f rel=%.2e\n", fracs[i],
                cold.energy, warm.energy, rel);
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("threshold curve is strictly decreasing with endpoint bounds",
          "[groundstate]") {
  const double mq = townes_mass();
  std::vector<double> cs;
  for (double f : {0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.95})
    cs.push_back(f * mq);
  McCurve curve = tabulate_mc(cs, 1e-7);

  REQUIRE(curve.points.size() == cs.size());
  CHECK(curve.c_max == Catch::Approx(mq).epsilon(1e-12));
  for (size_t i = 0; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].m_c > 0.0);
    CHECK(curve.points[i].c > 0.0);
    CHECK(curve.points[i].c < mq);
    if (i) {
      CHECK(curve.points[i].c > curve.points[i - 1].c);
      CHECK(curve.points[i].m_c < curve.points[i - 1].m_c);
    }
  }

  const double m01 = curve.points.front().m_c;
  const double m09 = curve.points[6].m_c;
  std::printf("m(0.1MQ)=%.6f m(0.9MQ)=%.6f ratio=%.1f\n", m01, m09,
              m01 / m09);
  CHECK(m01 > 10.0 * m09);

  // upper bound near the critical mass
  const double mq2 = mq * mq;
  CHECK(curve.points[6].m_c <= (3.0 / 64.0) * mq2 * (1.0 - 0.9 * 0.9));
  CHECK(curve.points[7].m_c <= (3.0 / 64.0) * mq2 * (1.0 - 0.95 * 0.95));

  // interpolation consistency against a direct solve off the knots
  const double cq = 0.57 * mq;
  GroundState direct = minimize_mc(cq, {}, 1e-7);
  CHECK_FALSE(curve.extrapolated(cq));
  CHECK(curve.eval_mc(cq) ==
        Catch::Approx(direct.energy).epsilon(5e-3));
  CHECK(curve.extrapolated(0.05 * mq));
  CHECK(curve.extrapolated(0.97 * mq));
  CHECK(curve.eval_mc(0.97 * mq) > 0.0);
  CHECK(curve.eval_mc(0.99 * mq) < curve.eval_mc(0.97 * mq));

  // persistence round trip preserves the table and the interpolant
  nlohmann::json j = mc_curve_to_json(curve);
  McCurve back = mc_curve_from_json(j);
  REQUIRE(back.points.size() == curve.points.size());
  for (size_t i = 0; i < curve.points.size(); ++i) {
    CHECK(back.points[i].c == curve.points[i].c);
    CHECK(back.points[i].m_c == curve.points[i].m_c);
    CHECK(back.points[i].omega == curve.points[i].omega);
  }
  for (double f : {0.15, 0.4, 0.77})
    CHECK(back.eval_mc(f * mq) == Catch::Approx(curve.eval_mc(f * mq))
                                      .epsilon(1e-12));
}

TEST_CASE("tabulate_mc validates its input", "[groundstate]") {
  const double mq = townes_mass();
  CHECK_THROWS_AS(tabulate_mc({0.5 * mq, 0.3 * mq}, 1e-6), Error);
  CHECK_THROWS_AS(tabulate_mc({0.3 * mq, 0.3 * mq}, 1e-6), Error);
  CHECK_THROWS_AS(tabulate_mc({}, 1e-6), Error);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "cqnls/generators.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/io.hpp"
#include "oracles.hpp"

using namespace cqnls;

TEST_CASE("make_grid validates and lays out frequencies", "[grid]") {
  GridSpec g = make_grid(64, 32.0);
  CHECK(g.spacing() == 0.5);
  CHECK(g.spacing() * g.n_points == g.box_length);

  GridSpec small = make_grid(8, 8.0);
  auto k = small.wavenumbers();
  const double base = 2.0 * M_PI / 8.0;
  CHECK(k[0] == 0.0);
  CHECK(k[1] == Catch::Approx(base));
  CHECK(k[7] == Catch::Approx(-base));
  CHECK(k[4] == Catch::Approx(-4 * base));  // lone Nyquist entry
  for (int i = 1; i < 4; ++i) CHECK(k[8 - i] == Catch::Approx(-k[i]));

  CHECK_THROWS_AS(make_grid(63, 32.0), Error);
  CHECK_THROWS_AS(make_grid(4, 32.0), Error);
  CHECK_THROWS_AS(make_grid(64, 0.0), Error);
  CHECK_THROWS_AS(make_grid(64, -1.0), Error);
}

TEST_CASE("integrate: box area, Gaussian, zero, linearity", "[grid]") {
  GridSpec g = make_grid(64, 16.0);
  Field ones = make_field(g);
  for (auto& v : ones.values) v = 1.0;
  CHECK(integrate(ones) == Catch::Approx(256.0).epsilon(1e-14));

  GridSpec g2 = make_grid(128, 16.0);
  Field sq = make_field(g2);  // e^{-|x|^2}, integral pi
  for (int iy = 0; iy < g2.n_points; ++iy)
    for (int ix = 0; ix < g2.n_points; ++ix) {
      const double x = g2.coord(ix), y = g2.coord(iy);
      sq.values[size_t(iy) * g2.n_points + ix] = std::exp(-(x * x + y * y));
    }
  CHECK(integrate(sq) == Catch::Approx(M_PI).epsilon(1e-10));

  CHECK(integrate(make_field(g)) == 0.0);

  std::mt19937_64 rng(11);
  Field f = sample(g2, random_pack(rng, g2, 2, true));
  Field h = sample(g2, random_pack(rng, g2, 2, true));
  Field combo = make_field(g2);
  for (size_t i = 0; i < combo.values.size(); ++i)
    combo.values[i] = 2.5 * f.values[i] - 0.75 * h.values[i];
  CHECK(integrate(combo) ==
        Catch::Approx(2.5 * integrate(f) - 0.75 * integrate(h)).margin(1e-13));
}

TEST_CASE("lp_norm_p on the reference Gaussian", "[grid]") {
  GridSpec g = make_grid(128, 16.0);
  Field u = unit_gaussian(g);
  auto ref = oracles::gaussian_norms();
  CHECK(lp_norm_p(u, 2) == Catch::Approx(ref.l2_sq).epsilon(1e-12));
  CHECK(lp_norm_p(u, 4) == Catch::Approx(ref.l4_4).epsilon(1e-12));
  CHECK(lp_norm_p(u, 6) == Catch::Approx(ref.l6_6).epsilon(1e-12));
  CHECK_THROWS_AS(lp_norm_p(u, 3), Error);
  CHECK_THROWS_AS(lp_norm_p(u, 8), Error);
}

TEST_CASE("grad_norm_sq: plane wave, Gaussian, constant", "[grid]") {
  GridSpec g = make_grid(64, 16.0);
  Field pw = make_field(g);
  const double kx = 2.0 * M_PI / 16.0 * 3, ky = 2.0 * M_PI / 16.0 * (-2);
  for (int iy = 0; iy < g.n_points; ++iy)
    for (int ix = 0; ix < g.n_points; ++ix)
      pw.values[size_t(iy) * g.n_points + ix] =
          std::polar(1.0, kx * g.coord(ix) + ky * g.coord(iy));
  const double k2 = kx * kx + ky * ky;
  CHECK(grad_norm_sq(pw) == Catch::Approx(k2 * 256.0).epsilon(1e-12));

  GridSpec g2 = make_grid(128, 16.0);
  CHECK(grad_norm_sq(unit_gaussian(g2)) == Catch::Approx(M_PI).epsilon(1e-10));

  Field c = make_field(g);
  for (auto& v : c.values) v = cplx(0.7, -0.3);
  CHECK(grad_norm_sq(c) < 1e-20);
}

TEST_CASE("grad_norm_sq warns on Nyquist-band content", "[grid]") {
  GridSpec g = make_grid(32, 8.0);
  Field noisy = make_field(g);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& v : noisy.values) v = cplx(d(rng), d(rng));
  warnings::drain();
  grad_norm_sq(noisy);
  auto w = warnings::drain();
  REQUIRE_FALSE(w.empty());
  CHECK(w[0].find("Nyquist") != std::string::npos);

  warnings::drain();
  grad_norm_sq(unit_gaussian(make_grid(128, 16.0)));
  CHECK(warnings::drain().empty());
}

TEST_CASE("Parseval identity on random band-limited fields", "[grid]") {
  GridSpec g = make_grid(128, 32.0);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Field u = sample(g, random_pack(rng, g));
    auto hat = fft2(g, u.values);
    long double acc = 0.0L;
    for (const cplx& z : hat) acc += std::norm(z);
    const double spectral = double(acc) * g.quad_weight() / g.size();
    CHECK(lp_norm_p(u, 2) == Catch::Approx(spectral).epsilon(1e-12));
  }
}

TEST_CASE("spectral derivatives match closed forms", "[grid]") {
  GridSpec g = make_grid(128, 16.0);
  Field u = unit_gaussian(g);
  Field ux = spectral_dx(u);
  double sup = 0.0;
  for (int iy = 0; iy < g.n_points; ++iy)
    for (int ix = 0; ix < g.n_points; ++ix) {
      const double x = g.coord(ix), y = g.coord(iy);
      const double exact = -x * std::exp(-(x * x + y * y) / 2.0);
      sup = std::max(sup, std::abs(ux.values[size_t(iy) * g.n_points + ix] - exact));
    }
  CHECK(sup < 1e-10);

  Field pw = make_field(g);
  const double kx = 2.0 * M_PI / 16.0 * 5, ky = 2.0 * M_PI / 16.0 * 2;
  for (int iy = 0; iy < g.n_points; ++iy)
    for (int ix = 0; ix < g.n_points; ++ix)
      pw.values[size_t(iy) * g.n_points + ix] =
          std::polar(1.0, kx * g.coord(ix) + ky * g.coord(iy));
  Field lap = spectral_laplacian(pw);
  const double k2 = kx * kx + ky * ky;
  double err = 0.0;
  for (size_t i = 0; i < pw.values.size(); ++i)
    err = std::max(err, std::abs(lap.values[i] + k2 * pw.values[i]));
  CHECK(err < 1e-9);
}

TEST_CASE("dilated resampling is exact for lambda = 1 and matches closed forms",
          "[grid]") {
  GridSpec g = make_grid(128, 24.0);
  std::mt19937_64 rng(23);
  Field u = sample(g, random_pack(rng, g));
  auto same = dilate_samples(g, u.values, 1.0);
  double sup = 0.0, ref = 0.0;
  for (size_t i = 0; i < same.size(); ++i) {
    sup = std::max(sup, std::abs(same[i] - u.values[i]));
    ref = std::max(ref, std::abs(u.values[i]));
  }
  CHECK(sup < 1e-12 * ref);

  // Gaussian against the analytic dilation, both compression and expansion
  Field gau = unit_gaussian(g);
  for (double lambda : {2.0, 0.77}) {
    auto resampled = dilate_samples(g, gau.values, lambda);
    double err = 0.0;
    for (int iy = 0; iy < g.n_points; ++iy)
      for (int ix = 0; ix < g.n_points; ++ix) {
        const double x = lambda * g.coord(ix), y = lambda * g.coord(iy);
        const double exact = std::exp(-(x * x + y * y) / 2.0);
        err = std::max(err, std::abs(resampled[size_t(iy) * g.n_points + ix] - exact));
      }
    CHECK(err < 1e-9);
  }
}

TEST_CASE("field files round-trip exactly in both flavors", "[grid][io]") {
  GridSpec g = make_grid(16, 4.0);
  Field u = make_field(g);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& v : u.values) v = cplx(d(rng) * 1e-3, d(rng) * 1e7);

  const char* path = "roundtrip.field";
  write_field(path, u);
  Field back = read_field(path);
  REQUIRE(back.spec == g);
  for (size_t i = 0; i < u.values.size(); ++i) {
    CHECK(back.values[i].real() == u.values[i].real());
    CHECK(back.values[i].imag() == u.values[i].imag());
  }

  const char* jpath = "roundtrip.json";
  write_field(jpath, u, json::object(), /*pure_json=*/true);
  Field back2 = read_field(jpath);
  for (size_t i = 0; i < u.values.size(); ++i)
    CHECK(back2.values[i] == u.values[i]);

  std::remove(path);
  std::remove(jpath);
}

TEST_CASE("field file errors are reported with codes", "[grid][io]") {
  CHECK_THROWS_AS(read_field("does_not_exist.field"), Error);

  write_text_file("bad_header.field", "not json\n0,0\n");
  CHECK_THROWS_AS(read_field("bad_header.field"), Error);
  std::remove("bad_header.field");

  write_text_file("truncated.field",
                  "{\"n_points\": 16, \"box_length\": 4.0}\n1.0,2.0\n");
  CHECK_THROWS_AS(read_field("truncated.field"), Error);
  std::remove("truncated.field");
}

TEST_CASE("non-finite fields are rejected at API boundaries", "[grid]") {
  GridSpec g = make_grid(16, 4.0);
  Field u = make_field(g);
  u.values[5] = cplx(std::nan(""), 0.0);
  CHECK_THROWS_AS(write_field("nan.field", u), Error);
}

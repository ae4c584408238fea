#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kinreg/claw.hpp"
#include "kinreg/error.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace kinreg::claw;
namespace oracle = kt::oracle;
using kinreg::Exec;

namespace {

ClawProblem burgers_riemann(double amplitude) {
  ClawProblem p;
  p.flux = FluxSpec::from_id("burgers", amplitude, 1.0);
  p.u0 = {"riemann", {1.0, 0.0, 0.5}};
  p.T = 0.5;
  return p;
}

double l1_error_vs_exact(std::size_t n_x) {
  const auto f = solve(burgers_riemann(0.0), n_x, 0.45);
  const double t = f.t0 + f.dt * static_cast<double>(f.n_t - 1);
  double e = 0.0;
  for (std::size_t i = 0; i < n_x; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * f.dx;
    e += std::abs(f.at(f.n_t - 1, i) - oracle::burgers_riemann_exact(x, t)) * f.dx;
  }
  return e;
}

std::vector<double> step_data(kt::Gen& g, std::size_t n) {
  std::vector<double> u(n);
  const int pieces = g.integer(2, 8);
  std::vector<double> levels = g.vector(pieces, -1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) u[i] = levels[i * pieces / n] + 0.1 * g.uniform(-1.0, 1.0);
  return u;
}

double l1_diff(const std::vector<double>& a, const std::vector<double>& b, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * dx;
}

}  // namespace

TEST_SUITE("claw") {

TEST_CASE("flux registry and well-posedness") {
  const auto b = FluxSpec::from_id("burgers", 0.5, 1.0);
  CHECK(b.A(0.25, 2.0) == doctest::Approx(1.5 * 2.0));
  CHECK(b.a_extra(0.3, 0.0) == 0.0);
  CHECK_THROWS_AS(FluxSpec::from_id("burgers", 1.0, 1.0), kinreg::InvalidInput);
  CHECK_THROWS_AS(FluxSpec::from_id("nope", 0.1, 1.0), kinreg::InvalidInput);

  const auto wb = flux_wellposedness_check(b, 1.1, 128, 65, true);
  CHECK(wb.valid);
  REQUIRE(wb.drift_nondeg.has_value());
  CHECK_FALSE(wb.drift_nondeg->degenerate);
  CHECK(wb.drift_nondeg->alpha_hat == doctest::Approx(1.0).epsilon(0.1));

  const auto wl = flux_wellposedness_check(FluxSpec::from_id("linear", 0.5, 1.0), 1.1, 128, 65, true);
  CHECK(wl.valid);
  REQUIRE(wl.drift_nondeg.has_value());
  CHECK(wl.drift_nondeg->degenerate);

  const auto ws = flux_wellposedness_check(FluxSpec::from_id("shifted_burgers", 0.5, 1.0), 1.1, 128, 65, false);
  CHECK_FALSE(ws.valid);
  CHECK(ws.max_abs_a_extra_at_zero > 0.1);
}

TEST_CASE("constant states are fixed points of the homogeneous flux") {
  for (const char* id : {"burgers", "linear", "cubic"}) {
    ClawProblem p;
    p.flux = FluxSpec::from_id(id, 0.0, 1.0);
    p.u0 = {"constant", {0.7}};
    p.T = 0.3;
    const auto f = solve(p, 128, 0.45);
    for (double v : f.u) CHECK(v == 0.7);
  }
}

TEST_CASE("Burgers Riemann shock sits at x = 0.75 at T = 0.5") {
  const std::size_t n = 1024;
  const auto f = solve(burgers_riemann(0.0), n, 0.45);
  std::size_t cross = 0;
  for (std::size_t i = n / 2; i + 1 < n; ++i)
    if (f.at(f.n_t - 1, i) >= 0.5 && f.at(f.n_t - 1, i + 1) < 0.5) cross = i;
  const double x = (static_cast<double>(cross) + 1.0) * f.dx;
  CHECK(std::abs(x - 0.75) <= 2.0 * f.dx);
  CHECK(f.cfl_used <= 1.0);
}

TEST_CASE("mass is conserved per step") {
  for (double a : {0.0, 0.5}) {
    auto p = burgers_riemann(a);
    p.u0 = {"square_wave", {-0.5, 1.0, 0.2, 0.6}};
    const auto f = solve(p, 512, 0.45);
    for (std::size_t t = 1; t < f.n_t; ++t) CHECK(std::abs(f.mass(t) - f.mass(t - 1)) < 1e-12);
  }
}

TEST_CASE("L1 contraction over 1000 steps") {
  kt::Gen g(41);
  for (int trial = 0; trial < 4; ++trial) {
    const auto flux = FluxSpec::from_id(trial % 2 == 0 ? "burgers" : "cubic", 0.5, 1.0);
    const std::size_t n = 256;
    const double dx = 1.0 / n;
    auto u = step_data(g, n), v = step_data(g, n);
    double M = 0.0;
    for (std::size_t i = 0; i < n; ++i) M = std::max({M, std::abs(u[i]), std::abs(v[i])});
    const double dt = 0.45 * dx / flux.speed_bound(M);
    std::vector<double> nu, nv, iface;
    double prev = l1_diff(u, v, dx);
    for (int s = 0; s < 1000; ++s) {
      llf_step(flux, dx, dt, u, nu, iface, Exec::Serial);
      llf_step(flux, dx, dt, v, nv, iface, Exec::Serial);
      u.swap(nu);
      v.swap(nv);
      const double d = l1_diff(u, v, dx);
      CHECK(d <= prev + 1e-13);
      prev = d;
    }
  }
}

TEST_CASE("maximum principle for the homogeneous flux") {
  kt::Gen g(42);
  for (int trial = 0; trial < 4; ++trial) {
    ClawProblem p;
    p.flux = FluxSpec::from_id("burgers", 0.0, 1.0);
    const double lo = g.uniform(-1.0, 0.0), hi = g.uniform(0.1, 1.0);
    p.u0 = {"square_wave", {lo, hi, g.uniform(0.1, 0.4), g.uniform(0.5, 0.9)}};
    p.T = 0.4;
    const auto f = solve(p, 256, 0.45);
    for (double v : f.u) {
      CHECK(v >= lo - 1e-14);
      CHECK(v <= hi + 1e-14);
    }
  }
}

TEST_CASE("grid convergence rate for the Burgers Riemann problem") {
  std::vector<double> xs, ys;
  for (std::size_t n : {256, 512, 1024, 2048}) {
    xs.push_back(std::log2(static_cast<double>(n)));
    ys.push_back(std::log2(l1_error_vs_exact(n)));
  }
  const double mx = (xs[0] + xs[1] + xs[2] + xs[3]) / 4.0, my = (ys[0] + ys[1] + ys[2] + ys[3]) / 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < 4; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  CHECK(-sxy / sxx >= 0.7);
}

TEST_CASE("serial and parallel steps agree bitwise") {
  kt::Gen g(43);
  const auto flux = FluxSpec::from_id("burgers", 0.5, 1.0);
  const auto u = step_data(g, 4096);
  std::vector<double> a, b, ia, ib;
  const double sa = llf_step(flux, 1.0 / 4096, 1e-4, u, a, ia, Exec::Serial);
  const double sb = llf_step(flux, 1.0 / 4096, 1e-4, u, b, ib, Exec::Parallel);
  CHECK(sa == sb);
  CHECK(a == b);
}

TEST_CASE("solver input validation") {
  auto p = burgers_riemann(0.5);
  CHECK_THROWS_AS(solve(p, 32, 0.45), kinreg::InvalidInput);
  CHECK_THROWS_AS(solve(p, 256, 1.0), kinreg::InvalidInput);
  p.extent = 2.0;
  CHECK_THROWS_AS(solve(p, 256, 0.45), kinreg::InvalidInput);
}

TEST_CASE("kinetic function sign structure and layer-cake identities") {
  auto p = burgers_riemann(0.5);
  p.u0 = {"square_wave", {-0.8, 1.0, 0.2, 0.6}};
  const auto f = resample_time(solve(p, 256, 0.45), 256);
  const auto chi = kinetic_chi(f, 128, 0.1);
  for (std::size_t t = 0; t < f.n_t; t += 17) {
    for (std::size_t x = 0; x < f.n_x; x += 3) {
      double sum = 0.0;
      for (std::size_t l = 0; l < chi.lambda.size(); ++l) {
        const int c = chi.chi(t, x, l);
        CHECK((c == -1 || c == 0 || c == 1));
        CHECK(chi.lambda[l] * c >= 0.0);
        sum += c * chi.dlambda;
      }
      CHECK(std::abs(sum - f.at(t, x)) <= chi.dlambda);
    }
  }

  const double M = f.max_abs();
  const auto plateau = velocity_average(chi, f, {"plateau", {M, 0.1}});
  for (std::size_t i = 0; i < f.u.size(); ++i) CHECK(std::abs(plateau.u[i] - f.u[i]) <= chi.dlambda);
  const auto zero = velocity_average(chi, f, {"zero", {}});
  for (double v : zero.u) CHECK(v == 0.0);
  const auto ident = velocity_average(chi, f, {"identity", {}});
  for (std::size_t i = 0; i < f.u.size(); ++i)
    CHECK(std::abs(ident.u[i] - 0.5 * f.u[i] * f.u[i]) <= chi.dlambda);

  auto z = f;
  std::fill(z.u.begin(), z.u.end(), 0.0);
  const auto cz = kinetic_chi(z, 64, 0.5);
  for (std::size_t l = 0; l < cz.lambda.size(); ++l) CHECK(cz.chi(3, 5, l) == 0);
}

TEST_CASE("time resampling onto cell-centred levels") {
  const auto f = solve(burgers_riemann(0.5), 128, 0.45);
  const auto r = resample_time(f, 128);
  CHECK(r.n_t == 128);
  CHECK(r.dt == doctest::Approx(0.5 / 128));
  CHECK(r.t0 == doctest::Approx(0.25 / 128));
  const auto g = as_grid_function(r);
  CHECK(g.dims == 2);
  CHECK(g.extent[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(as_grid_function(f), kinreg::InvalidInput);
}

TEST_CASE("pipeline: Burgers with heterogeneous speed and Riemann data") {
  const auto rep = pipeline_regularity(burgers_riemann(0.5), {});
  REQUIRE(rep.applicable);
  REQUIRE(rep.alpha.has_value());
  CHECK(rep.alpha->alpha_hat >= 0.9);
  CHECK(rep.alpha->alpha_hat <= 1.1);
  CHECK(rep.beta0_pred > 0.0);
  CHECK(rep.beta0_pred <= 0.05);
  REQUIRE(rep.spectrum_r.has_value());
  REQUIRE(rep.spectrum_r->beta_hat.has_value());
  CHECK(*rep.spectrum_r->beta_hat > 0.0);
  CHECK(rep.verdict);
}

TEST_CASE("pipeline: smooth bump before the shock passes by a wide margin") {
  ClawProblem p;
  p.flux = FluxSpec::from_id("burgers", 0.5, 1.0);
  p.u0 = {"smooth_bump", {0.0, 0.2, 0.5, 0.08}};
  p.T = 0.1;
  const auto rep = pipeline_regularity(p, {});
  REQUIRE(rep.applicable);
  REQUIRE(rep.spectrum_r.has_value());
  // the space-time cutoff caps the decay of smooth data, so no underflow
  REQUIRE(rep.spectrum_r->beta_hat.has_value());
  CHECK(*rep.spectrum_r->beta_hat > 20.0 * rep.beta0_pred);
  CHECK(rep.verdict);
}

TEST_CASE("pipeline: lambda-constant drift is inapplicable") {
  ClawProblem p;
  p.flux = FluxSpec::from_id("linear", 0.5, 1.0);
  p.u0 = {"riemann", {1.0, 0.0, 0.5}};
  const auto rep = pipeline_regularity(p, {});
  CHECK_FALSE(rep.applicable);
  REQUIRE(rep.alpha.has_value());
  CHECK(rep.alpha->degenerate);
  CHECK(rep.message.find("degenerate") != std::string::npos);
  CHECK_FALSE(rep.verdict);

  p.flux = FluxSpec::from_id("shifted_burgers", 0.5, 1.0);
  const auto bad = pipeline_regularity(p, {});
  CHECK_FALSE(bad.applicable);
  CHECK_FALSE(bad.wellposedness.valid);
}

}  // TEST_SUITE

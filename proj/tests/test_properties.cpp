#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "kinreg/claw.hpp"
#include "kinreg/exponents.hpp"
#include "kinreg/lpa.hpp"
#include "kinreg/nondeg.hpp"
#include "support/gen.hpp"

using kinreg::Exec;
namespace ex = kinreg::exponents;
namespace nd = kinreg::nondeg;
namespace lp = kinreg::lpa;
namespace cl = kinreg::claw;

namespace {

constexpr double kPi = std::numbers::pi;

lp::GridFunction random_field(kt::Gen& g, int dims, std::size_t n) {
  auto u = lp::GridFunction::zeros(dims, n, {1.0, 1.0});
  for (auto& v : u.values) v = g.uniform(-1.0, 1.0);
  return u;
}

// naive DFT of a 1D grid function
std::vector<std::complex<double>> dft(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += v[i] * std::polar(1.0, -2.0 * kPi * static_cast<double>((k * i) % n) / static_cast<double>(n));
    out[k] = s;
  }
  return out;
}

}  // namespace

TEST_SUITE("properties") {

TEST_CASE("derived parameters equalize lines 1-2, 1-3 and (LOW) 1-4") {
  kt::Gen g(101);
  for (int i = 0; i < 1000; ++i) {
    const auto p = g.params(g.coin());
    const double r = 1.0 + (p.r_limit() - 1.0) * g.uniform(0.01, 0.99);
    const double eps = g.uniform(0.0, 1.0);
    const auto l = ex::constraint_lines(p, ex::make_choice(p, r, eps)).lines;
    CHECK(std::abs(l[0] - l[1]) < 1e-12);
    CHECK(std::abs(l[0] - l[2]) < 1e-12);
    if (p.branch() == ex::Branch::Low) {
      CHECK(std::abs(l[0] - l[3]) < 1e-12);
    } else {
      CHECK(ex::derived_params(p, r, eps).sigma == 0.0);
    }
  }
}

TEST_CASE("eps bounds are strictly monotone in r") {
  kt::Gen g(102);
  for (int i = 0; i < 40; ++i) {
    const auto p = g.params(g.coin());
    double up = 1e300, lo = -1e300;
    for (int k = 1; k < 100; ++k) {
      const double r = 1.0 + (p.r_limit() - 1.0) * k / 100.0;
      const double u = std::min(ex::eps_upper1(p, r), ex::eps_upper2(p, r));
      CHECK(u < up);
      up = u;
      if (p.branch() == ex::Branch::Low) {
        const double l = ex::eps_lower(p, r);
        CHECK(l > lo);
        lo = l;
      }
    }
  }
}

TEST_CASE("beta0 is unchanged by the seed order") {
  kt::Gen g(103);
  for (int i = 0; i < 8; ++i) {
    const auto p = g.params(g.coin());
    const auto a = ex::optimize_beta0(p);
    ex::OptimizeOptions o;
    o.seed_rotation = static_cast<unsigned>(g.integer(1, 4000));
    o.exec = Exec::Parallel;
    CHECK(std::abs(ex::optimize_beta0(p, o).beta0 - a.beta0) < 1e-9);
  }
}

TEST_CASE("omega is nondecreasing in nu and bounded by |L|") {
  kt::Gen g(104);
  for (int i = 0; i < 6; ++i) {
    const char* id = i % 2 == 0 ? "k_lambda" : "k_lambda_squared";
    const double a = g.uniform(0.0, 0.9);
    const double half = g.uniform(0.5, 2.0);
    const auto f = nd::DriftField::registered(id, {a, 1.0}, {{0.0}, {1.0}}, {{-half}, {half}});
    const auto nus = nd::geometric_nus(g.uniform(0.1, 0.5), g.uniform(0.3, 0.8), 8);
    const auto c = nd::omega_curve(f, nus, {9, 180, 1024});
    for (std::size_t k = 1; k < c.omega_values.size(); ++k) CHECK(c.omega_values[k] <= c.omega_values[k - 1]);
    for (double w : c.omega_values) CHECK(w <= 2.0 * half + 1e-12);
  }
}

TEST_CASE("band multipliers commute and contract") {
  kt::Gen g(105);
  for (int i = 0; i < 20; ++i) {
    const int dims = g.integer(1, 2);
    const auto u = random_field(g, dims, dims == 1 ? 256 : 32);
    const int jt = static_cast<int>(std::floor(lp::nyquist_band(u)));
    const lp::DyadicFilterBank bank(jt);
    const int j = g.integer(0, jt), k = g.integer(0, jt);
    const auto ab = lp::apply_band(lp::apply_band(u, bank, j), bank, k);
    const auto ba = lp::apply_band(lp::apply_band(u, bank, k), bank, j);
    double diff = 0.0;
    for (std::size_t t = 0; t < ab.values.size(); ++t) diff = std::max(diff, std::abs(ab.values[t] - ba.values[t]));
    CHECK(diff < 1e-14);
    CHECK(lp::lr_norm(lp::apply_band(u, bank, j), 2.0) <= lp::lr_norm(u, 2.0) * (1.0 + 1e-12));
  }
}

TEST_CASE("r = 2 spectrum equals band-restricted spectral energy") {
  kt::Gen g(106);
  for (int i = 0; i < 5; ++i) {
    const std::size_t n = 256;
    const auto u = random_field(g, 1, n);
    const auto U = dft(u.values);
    const int jt = static_cast<int>(std::floor(lp::nyquist_band(u)));
    const lp::DyadicFilterBank bank(jt);
    const auto spec = lp::dyadic_spectrum(u, bank, 2.0, {1, 0});
    for (int j = 0; j <= jt; ++j) {
      double e = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double kk = k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
        const double m = bank.phi(j, 2.0 * kPi * std::abs(kk));
        e += m * m * std::norm(U[k]);
      }
      const double want = std::sqrt(e / static_cast<double>(n) / static_cast<double>(n));
      CHECK(std::abs(spec.norms[j] - want) <= 1e-10 * std::max(1.0, want));
    }
  }
}

TEST_CASE("Gagliardo seminorm is invariant under cyclic shifts") {
  kt::Gen g(107);
  for (int i = 0; i < 6; ++i) {
    const int dims = g.integer(1, 2);
    const std::size_t n = dims == 1 ? 256 : 16;
    const auto u = random_field(g, dims, n);
    auto v = u;
    const std::size_t s0 = static_cast<std::size_t>(g.integer(1, static_cast<int>(n) - 1));
    const std::size_t s1 = dims == 1 ? 0 : static_cast<std::size_t>(g.integer(0, static_cast<int>(n) - 1));
    if (dims == 1) {
      std::rotate(v.values.begin(), v.values.begin() + static_cast<std::ptrdiff_t>(s0), v.values.end());
    } else {
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) v.values[a * n + b] = u.values[((a + s0) % n) * n + (b + s1) % n];
    }
    const double s = g.uniform(0.1, 0.9), q = g.uniform(1.0, 3.0);
    for (Exec e : {Exec::Serial, Exec::Parallel}) {
      const double x = lp::gagliardo_seminorm(u, s, q, e).seminorm;
      const double y = lp::gagliardo_seminorm(v, s, q, e).seminorm;
      CHECK(std::abs(x - y) <= 1e-12 * x);
    }
  }
}

TEST_CASE("plateau velocity average recovers every solver output") {
  kt::Gen g(108);
  const char* data[] = {"riemann", "square_wave", "smooth_bump"};
  for (int i = 0; i < 6; ++i) {
    cl::ClawProblem p;
    p.flux = cl::FluxSpec::from_id(g.coin() ? "burgers" : "cubic", g.uniform(0.0, 0.8), 1.0);
    p.u0.id = data[i % 3];
    if (p.u0.id == "riemann") p.u0.params = {g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0), 0.5};
    if (p.u0.id == "square_wave") p.u0.params = {g.uniform(-1.0, 0.0), g.uniform(0.0, 1.0), 0.2, 0.7};
    if (p.u0.id == "smooth_bump") p.u0.params = {g.uniform(-0.5, 0.5), g.uniform(0.2, 1.0), 0.5, 0.1};
    p.T = g.uniform(0.05, 0.3);
    const auto f = cl::resample_time(cl::solve(p, 128, 0.45), 128);
    const double M = f.max_abs();
    const std::size_t nl = static_cast<std::size_t>(g.integer(32, 256));
    const auto chi = cl::kinetic_chi(f, nl, 0.1 * M);
    const auto back = cl::velocity_average(chi, f, {"plateau", {M, 0.1 * M}});
    double diff = 0.0;
    for (std::size_t k = 0; k < f.u.size(); ++k) diff = std::max(diff, std::abs(back.u[k] - f.u[k]));
    CHECK(diff <= chi.dlambda);
  }
}

}  // TEST_SUITE

// One PASS/FAIL line per acceptance criterion. Tolerances and time limits
// are fixed here; the process exits non-zero if any line fails.

#include <algorithm>
#include <array>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "kinreg/claw.hpp"
#include "kinreg/exponents.hpp"
#include "kinreg/lpa.hpp"
#include "kinreg/nondeg.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
namespace ex = kinreg::exponents;
namespace nd = kinreg::nondeg;
namespace lp = kinreg::lpa;
namespace cl = kinreg::claw;
namespace oracle = kt::oracle;
using kinreg::Exec;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              secs, limit_s, in_time ? "" : ", too slow");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

oracle::Params to_oracle(const ex::ProblemParams& p) { return {p.alpha, p.p, p.dim_total, p.kappa_abs}; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome anchor() {
  const ex::ProblemParams p{0.5, 2.0, 2, 1};
  const auto rep = ex::optimize_beta0(p);
  const double r0 = ex::find_r0(p);
  const bool ok = rep.feasible && rep.beta0 >= 0.015 && rep.beta0 <= 0.017 && r0 == 2.0 && rep.r0 == 2.0;
  return {ok, fmt("beta0 = %.6f", rep.beta0) + fmt(", r0 = %.17g", r0)};
}

Outcome oracle_equivalence() {
  kt::Gen g(2024);
  double worst_beta = 0.0, worst_r0 = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto p = g.params(i % 2 == 0);
    const auto q = to_oracle(p);
    const auto rep = ex::optimize_beta0(p);
    if (!rep.feasible) return {false, "optimizer reported infeasible"};
    const double r0_ref = oracle::r0_dense(q, 1000000);
    const double grid = oracle::beta_grid_max(q, r0_ref, 400);
    worst_beta = std::max(worst_beta, std::abs(rep.beta0 - grid));
    worst_r0 = std::max(worst_r0, std::abs(ex::find_r0(p) - r0_ref));
  }
  return {worst_beta <= 1e-3 && worst_r0 <= 1e-6,
          fmt("max |beta0 - grid| = %.2e (tol 1e-3)", worst_beta) + fmt(", max |r0 - dense| = %.2e (tol 1e-6)", worst_r0)};
}

Outcome substitution() {
  kt::Gen g(7);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = g.params(g.coin());
    const double r = 1.0 + (p.r_limit() - 1.0) * g.uniform(0.01, 0.99);
    const double eps = g.uniform(0.0, 1.0);
    const auto l = ex::constraint_lines(p, ex::make_choice(p, r, eps)).lines;
    worst = std::max({worst, std::abs(l[0] - l[1]), std::abs(l[0] - l[2])});
    if (p.branch() == ex::Branch::Low) worst = std::max(worst, std::abs(l[0] - l[3]));
  }
  return {worst < 1e-12, fmt("max residual %.2e over 1000 samples (tol 1e-12)", worst)};
}

Outcome nondegeneracy() {
  const nd::Box K{{0.0}, {1.0}}, L{{-1.0}, {1.0}};
  const auto nus = nd::geometric_nus(0.25, 0.5, 10);
  const nd::Sampling s{};
  const double cell = L.measure() / s.n_lambda;
  double worst_gap = 0.0, alpha[2] = {0.0, 0.0};
  for (int power : {1, 2}) {
    const auto f = nd::DriftField::registered(power == 1 ? "lambda" : "lambda_squared", {}, K, L);
    const auto curve = nd::omega_curve(f, nus, s);
    alpha[power - 1] = nd::fit_alpha(curve).alpha_hat;
    for (std::size_t i = 0; i < nus.size(); ++i) {
      const double want = oracle::omega_exact(power, nus[i], -1.0, 1.0, 200000);
      const double tol = 2.0 * cell;
      worst_gap = std::max(worst_gap, std::abs(curve.omega_values[i] - want) / tol);
    }
  }
  const auto c = nd::DriftField::registered("constant", {0.7}, K, L);
  const bool degenerate = nd::fit_alpha(nd::omega_curve(c, nus, s)).degenerate;
  const bool ok = alpha[0] >= 0.9 && alpha[0] <= 1.1 && alpha[1] >= 0.45 && alpha[1] <= 0.6 && degenerate &&
                  worst_gap <= 1.0;
  return {ok, fmt("alpha(lambda) = %.4f", alpha[0]) + fmt(", alpha(lambda^2) = %.4f", alpha[1]) +
                  ", constant degenerate = " + (degenerate ? "yes" : "no") +
                  fmt(", oracle gap %.2f of tolerance", worst_gap)};
}

Outcome littlewood_paley() {
  kt::Gen g(11);
  // reconstruction of band-limited signals
  double recon = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::array<double, 3>> terms;
    for (int t = 0; t < 10; ++t) terms.push_back({double(g.integer(0, 40)), g.uniform(-1, 1), g.uniform(0, 2 * kPi)});
    const auto u = lp::GridFunction::sample1d(512, 1.0, [&](double x) {
      double v = 0.0;
      for (const auto& t : terms) v += t[1] * std::cos(2.0 * kPi * t[0] * x + t[2]);
      return v;
    });
    const int jt = static_cast<int>(std::floor(lp::nyquist_band(u)));
    const lp::DyadicFilterBank bank(jt);
    std::vector<double> sum(u.n, 0.0);
    for (int j = 0; j <= jt; ++j) {
      const auto b = lp::apply_band(u, bank, j);
      for (std::size_t i = 0; i < u.n; ++i) sum[i] += b.values[i];
    }
    for (std::size_t i = 0; i < u.n; ++i) recon = std::max(recon, std::abs(sum[i] - u.values[i]));
  }
  // Gaussian window against the closed form
  double gauss = 0.0;
  for (int dims : {1, 2})
    for (int j : {0, 2, 4}) gauss = std::max(gauss, lp::gaussian_reference_check(j, 0.5, dims).max_rel_error);
  // indicator slope and Plancherel band norms
  const std::size_t n = 4096;
  auto ind = lp::GridFunction::zeros(1, n, {1.0, 1.0});
  for (std::size_t i = 1000; i < 2600; ++i) ind.values[i] = 1.0;
  const int jt = static_cast<int>(std::floor(lp::nyquist_band(ind)));
  const auto spec = lp::dyadic_spectrum(ind, lp::DyadicFilterBank(jt), 2.0, {3, jt - 1});
  const auto want = oracle::indicator_band_norms(n, 1.0, 1000, 2600, jt);
  double band_err = 0.0;
  for (std::size_t j = 0; j < want.size(); ++j)
    band_err = std::max(band_err, std::abs(spec.norms[j] - want[j]) / std::max(want[j], 1e-300));
  const double slope = spec.beta_hat.value_or(-1.0);
  // Gagliardo seminorm of cos against the spectral integral
  const auto c = lp::GridFunction::sample1d(1024, 1.0, [](double x) { return std::cos(2.0 * kPi * x); });
  const double s = 0.5;
  boost::math::quadrature::tanh_sinh<double> quad;
  const double ref = std::sqrt(2.0 * quad.integrate(
                                         [s](double h) {
                                           const double q = std::sin(kPi * h) / h;
                                           return 2.0 * q * q * std::pow(h, 1.0 - 2.0 * s);
                                         },
                                         0.0, 0.5));
  const double gag = std::abs(lp::gagliardo_seminorm(c, s, 2.0).seminorm / ref - 1.0);
  const bool ok = recon < 1e-10 && gauss < 1e-6 && std::abs(slope - 0.5) <= 0.05 && band_err < 1e-10 && gag < 0.02;
  return {ok, fmt("reconstruction %.1e", recon) + fmt(", gaussian %.1e", gauss) + fmt(", slope %.4f", slope) +
                  fmt(" (bands vs oracle %.1e)", band_err) + fmt(", gagliardo %.2f%%", 100.0 * gag)};
}

Outcome conservation_law() {
  // mass per step
  cl::ClawProblem p;
  p.flux = cl::FluxSpec::from_id("burgers", 0.5, 1.0);
  p.u0 = {"square_wave", {-0.5, 1.0, 0.2, 0.6}};
  p.T = 0.5;
  const auto f = cl::solve(p, 1024, 0.45);
  double mass = 0.0;
  for (std::size_t t = 1; t < f.n_t; ++t) mass = std::max(mass, std::abs(f.mass(t) - f.mass(t - 1)));
  // L1 contraction on two random pairs over 1000 steps
  kt::Gen g(5);
  bool contract = true;
  for (int pair = 0; pair < 2; ++pair) {
    const std::size_t n = 512;
    const double dx = 1.0 / n;
    std::vector<double> u(n), v(n), nu, nv, iface;
    for (auto& x : u) x = g.uniform(-1.0, 1.0);
    for (auto& x : v) x = g.uniform(-1.0, 1.0);
    const double dt = 0.45 * dx / p.flux.speed_bound(1.0);
    auto dist = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += std::abs(u[i] - v[i]);
      return s * dx;
    };
    double prev = dist();
    for (int s = 0; s < 1000; ++s) {
      cl::llf_step(p.flux, dx, dt, u, nu, iface, Exec::Parallel);
      cl::llf_step(p.flux, dx, dt, v, nv, iface, Exec::Parallel);
      u.swap(nu);
      v.swap(nv);
      const double d = dist();
      if (d > prev + 1e-13) contract = false;
      prev = d;
    }
  }
  // shock position for homogeneous Burgers
  cl::ClawProblem h;
  h.flux = cl::FluxSpec::from_id("burgers", 0.0, 1.0);
  h.u0 = {"riemann", {1.0, 0.0, 0.5}};
  h.T = 0.5;
  const auto s = cl::solve(h, 1024, 0.45);
  std::size_t cross = 0;
  for (std::size_t i = 512; i + 1 < 1024; ++i)
    if (s.at(s.n_t - 1, i) >= 0.5 && s.at(s.n_t - 1, i + 1) < 0.5) cross = i;
  const double x = (static_cast<double>(cross) + 1.0) * s.dx;
  const double shift = std::abs(x - 0.75) / s.dx;
  return {mass < 1e-12 && contract && shift <= 2.0,
          fmt("max mass change %.1e", mass) + ", L1 contraction " + (contract ? "held" : "violated") +
              fmt(", shock offset %.2f dx", shift)};
}

Outcome pipeline() {
  cl::ClawProblem p;
  p.flux = cl::FluxSpec::from_id("burgers", 0.5, 1.0);
  p.u0 = {"riemann", {1.0, 0.0, 0.5}};
  p.T = 0.5;
  cl::PipelineConfig cfg;
  cfg.n_x = 1024;
  cfg.n_lambda = 128;
  const auto rep = cl::pipeline_regularity(p, cfg);
  if (!rep.applicable) return {false, "pipeline not applicable: " + rep.message};
  const double a = rep.alpha->alpha_hat;
  const double b = rep.spectrum_r->beta_hat.value_or(-1.0);
  const bool ok = a >= 0.9 && a <= 1.1 && rep.beta0_pred > 0.0 && b > 0.0 && b >= rep.beta0_pred - 0.005 && rep.verdict;
  return {ok, fmt("alpha_hat = %.4f", a) + fmt(", beta0_pred = %.5f", rep.beta0_pred) + fmt(", beta_hat = %.4f", b) +
                  ", verdict " + (rep.verdict ? "pass" : "fail")};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "kinreg_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  struct Job {
    std::string sub, config;
  };
  const std::vector<Job> jobs = {
      {"exponents", R"({"alpha": 0.5, "p": 2, "dim_total": 2, "kappa_abs": 1})"},
      {"nondeg", R"({"drift": "lambda_squared"})"},
      {"claw pipeline", R"({"n_x": 256})"},
  };
  int identical = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const fs::path cfg = root / ("config" + std::to_string(k) + ".json");
    std::ofstream(cfg) << jobs[k].config;
    std::string results[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / ("out" + std::to_string(k) + "_" + std::to_string(rep));
      const std::string cmd = std::string("\"") + KINREG_EXE + "\" " + jobs[k].sub + " --config \"" + cfg.string() +
                              "\" --out \"" + out.string() + "\" > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) return {false, "run failed: " + jobs[k].sub};
      results[rep] = read_text(out / "result.json") + read_text(out / "manifest.json");
    }
    if (!results[0].empty() && results[0] == results[1]) ++identical;
  }
  return {identical == static_cast<int>(jobs.size()),
          std::to_string(identical) + "/" + std::to_string(jobs.size()) + " subcommands byte-identical across runs"};
}

}  // namespace

int main() {
  criterion(1, "anchor case (exponents)", 1.0, anchor);
  criterion(2, "oracle equivalence (exponents)", 30.0, oracle_equivalence);
  criterion(3, "substitution identities", 10.0, substitution);
  criterion(4, "non-degeneracy estimator", 20.0, nondegeneracy);
  criterion(5, "Littlewood-Paley suite", 30.0, littlewood_paley);
  criterion(6, "conservation-law suite", 30.0, conservation_law);
  criterion(7, "end-to-end pipeline", 120.0, pipeline);
  criterion(8, "determinism", 60.0, determinism);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

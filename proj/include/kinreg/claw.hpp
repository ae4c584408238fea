#pragma once

// One-dimensional heterogeneous scalar conservation laws
//   u_t + d/dx A(x, u) = 0   on a periodic interval,
// their kinetic function chi, velocity averages, and the end-to-end
// regularity pipeline (drift exponent -> predicted beta0 -> measured decay).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kinreg/exec.hpp"
#include "kinreg/exponents.hpp"
#include "kinreg/lpa.hpp"
#include "kinreg/nondeg.hpp"

namespace kinreg::claw {

enum class FluxKind {
  Burgers,         ///< k(x) u^2 / 2
  Linear,          ///< k(x) u
  Cubic,           ///< k(x) u^3 / 3
  ShiftedBurgers,  ///< k(x) (u + 1)^2 / 2, violates a_extra(x, 0) = 0
};

/// A(x, u) = k(x) g(u) with k(x) = 1 + amplitude sin(2 pi x / extent).
struct FluxSpec {
  FluxKind kind = FluxKind::Burgers;
  double amplitude = 0.0;
  double extent = 1.0;

  static FluxSpec from_id(const std::string& id, double amplitude, double extent);
  std::string id() const;

  double k(double x) const;
  double dk(double x) const;
  double g(double u) const;
  double dg(double u) const;

  double A(double x, double u) const { return k(x) * g(u); }
  /// a = dA/du
  double a(double x, double u) const { return k(x) * dg(u); }
  /// a_{d+1} = -dA/dx
  double a_extra(double x, double u) const { return -dk(x) * g(u); }

  /// Upper bound on |u(t)| for data bounded by M, from the stationary
  /// balance k(x) g(u) = const.
  double state_bound(double M) const;
  /// Global wave-speed bound max |a(x, lambda)| over the state bound.
  double speed_bound(double M) const;

  /// Drift a(x, lambda) as a nondeg field over K = [0, extent], L.
  nondeg::DriftField drift(const nondeg::Box& L) const;
};

struct InitialData {
  std::string id = "riemann";      ///< riemann | square_wave | smooth_bump | constant
  std::vector<double> params;      ///< see sample()
  /// riemann {u_l, u_r, x_split}; square_wave {lo, hi, x0, x1};
  /// smooth_bump {base, amp, center, width}; constant {c}
  std::vector<double> sample(std::size_t n_x, double extent) const;
};

struct ClawProblem {
  FluxSpec flux;
  InitialData u0;
  double extent = 1.0;
  double T = 0.5;
};

struct SpaceTimeField {
  std::size_t n_t = 0;  ///< number of time levels (steps + 1)
  std::size_t n_x = 0;
  double dt = 0.0;
  double t0 = 0.0;  ///< time of level 0
  double dx = 0.0;
  double extent = 1.0;
  double cfl_used = 0.0;  ///< largest realized s dt / dx
  std::vector<double> u;  ///< u[t * n_x + i]

  double at(std::size_t t, std::size_t i) const { return u[t * n_x + i]; }
  double max_abs() const;
  double mass(std::size_t t) const;
};

struct WellposednessReport {
  bool valid = false;
  double max_abs_a_extra_at_zero = 0.0;
  double sup_a = 0.0;
  double sup_a_extra = 0.0;
  std::optional<nondeg::AlphaEstimate> drift_nondeg;  ///< set when requested
  std::string message;
};

WellposednessReport flux_wellposedness_check(const FluxSpec& flux, double u_bound, std::size_t n_x,
                                             std::size_t n_u, bool run_nondeg = true);

/// One local Lax-Friedrichs update with interface fluxes at x_{i+1/2};
/// returns the largest s dt / dx seen. Serial and parallel agree bitwise.
double llf_step(const FluxSpec& flux, double dx, double dt, const std::vector<double>& u,
                std::vector<double>& next, std::vector<double>& iface, Exec exec);

SpaceTimeField solve(const ClawProblem& problem, std::size_t n_x, double cfl,
                     Exec exec = Exec::Parallel);

/// chi(t, x, lambda) on midpoint lambda cells of [-M - pad, M + pad]; stored
/// compactly as the signed number of cells between 0 and u(t, x).
struct KineticField {
  std::size_t n_t = 0, n_x = 0;
  std::vector<double> lambda;      ///< cell centres
  double dlambda = 0.0;
  std::vector<std::int32_t> span;  ///< signed cell count per (t, x)
  std::size_t zero_cell = 0;       ///< first cell with centre >= 0

  int chi(std::size_t t, std::size_t x, std::size_t l) const;
};

KineticField kinetic_chi(const SpaceTimeField& field, std::size_t n_lambda, double pad);

/// rho profiles: "plateau" {R, w} (1 on [-R, R], C^1 decay to 0 at R + w),
/// "zero", "identity" (rho = lambda), "constant" {c}.
struct RhoProfile {
  std::string id = "plateau";
  std::vector<double> params;
  double operator()(double lambda) const;
};

/// Midpoint sum of chi rho over the lambda cells, the cell holding u
/// weighted by its overlap with [0, u]; like is the field chi was built from.
SpaceTimeField velocity_average(const KineticField& chi, const SpaceTimeField& like,
                                const RhoProfile& rho);

/// Linear interpolation in time onto n cell-centred levels (k + 1/2) T / n,
/// T the final time of f.
SpaceTimeField resample_time(const SpaceTimeField& f, std::size_t n);

/// A square (n x n, power of two) field as a 2D grid over (t, x).
lpa::GridFunction as_grid_function(const SpaceTimeField& f);

struct PipelineConfig {
  std::size_t n_x = 1024;
  double cfl = 0.45;
  std::size_t n_lambda = 128;
  double lambda_pad_frac = 0.1;
  nondeg::Sampling sampling{33, 720, 4096};
  double nu_start = 0.125;
  double nu_ratio = 0.5;
  int nu_count = 10;
  double r_used = 1.9;
  double window_margin = 0.15;
  int jmin = 3;
  int jmax = 0;  ///< 0: highest Nyquist-safe band
  double tol = 0.005;
  Exec exec = Exec::Parallel;
};

struct RegularityReport {
  bool applicable = false;
  std::string message;
  WellposednessReport wellposedness;
  std::optional<nondeg::AlphaEstimate> alpha;
  std::optional<exponents::ExponentReport> prediction;
  double beta0_pred = 0.0;
  double r_used = 0.0;
  std::optional<lpa::DyadicSpectrum> spectrum_r;
  std::optional<lpa::DyadicSpectrum> spectrum_2;
  double M = 0.0;
  bool verdict = false;
};

RegularityReport pipeline_regularity(const ClawProblem& problem, const PipelineConfig& config);

}  // namespace kinreg::claw

#pragma once

// Empirical non-degeneracy exponent of a drift f(x, lambda): sublevel-set
// measures of the kinetic symbol xi_0 + xi . f(x, lambda) maximized over
// positions and unit directions, followed by a log-log power-law fit.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kinreg/exec.hpp"

namespace kinreg::nondeg {

/// Axis-aligned compact box.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  double measure() const;
  bool contains(std::span<const double> x, double slack = 0.0) const;
  void validate(const char* name) const;
};

/// Multilinear interpolant of f over a tensor grid of (x_1..x_d, lambda_1..lambda_m).
/// values are row-major over the grid axes with the d drift components innermost.
struct DriftTable {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
};

class DriftField {
 public:
  using Eval = std::function<void(std::span<const double> x, std::span<const double> lambda,
                                  std::span<double> out)>;

  DriftField(int dim_space, int dim_velocity, Eval eval, Box K, Box L, std::string label);

  /// Closed-form registry. Ids (d = m = 1 unless stated):
  ///   "constant"        f = c                  params {c} (d = params.size())
  ///   "lambda"          f = lambda
  ///   "lambda_squared"  f = lambda^2
  ///   "k_lambda"        f = k(x) lambda,       params {a, extent}
  ///   "k_constant"      f = k(x),              params {a, extent}
  ///   "k_lambda_squared" f = k(x) lambda^2,    params {a, extent}
  /// with k(x) = 1 + a sin(2 pi x / extent).
  static DriftField registered(const std::string& id, const std::vector<double>& params, Box K,
                               Box L);

  /// Table mode; axes must be strictly increasing and cover K x L.
  static DriftField tabulated(int dim_space, int dim_velocity, DriftTable table, Box K, Box L);

  int dim_space() const { return d_; }
  int dim_velocity() const { return m_; }
  const Box& K() const { return K_; }
  const Box& L() const { return L_; }
  const std::string& label() const { return label_; }
  bool is_table() const { return table_ != nullptr; }

  void eval(std::span<const double> x, std::span<const double> lambda,
            std::span<double> out) const {
    eval_(x, lambda, out);
  }

 private:
  int d_;
  int m_;
  Eval eval_;
  Box K_;
  Box L_;
  std::string label_;
  std::shared_ptr<const DriftTable> table_;
};

struct Sampling {
  int n_x = 33;         ///< points per axis of K
  int n_sphere = 720;   ///< directions on S^d
  int n_lambda = 4096;  ///< midpoint cells per axis of L
  int refine_levels = 3;  ///< local zoom passes around the best direction per nu
};

struct SublevelCurve {
  std::vector<double> nu_values;     ///< strictly decreasing
  std::vector<double> omega_values;  ///< omega(nu)
  Sampling sampling;
  double L_measure = 0.0;
};

struct FitWindow {
  std::size_t first = 0;  ///< inclusive index into nu_values
  std::size_t last = 0;   ///< inclusive
};

struct AlphaEstimate {
  double alpha_hat = 0.0;
  double constant_hat = 0.0;  ///< omega ~ constant_hat * nu^alpha_hat
  double r2 = 0.0;
  bool degenerate = false;
  FitWindow window;
};

/// Midpoint-rule measure of {lambda in L : |xi_0 + xi . f(x, lambda)| < nu}.
double sublevel_measure(const DriftField& drift, std::span<const double> x,
                        std::span<const double> xi, double nu, int n_lambda);

/// Deterministic quasi-uniform directions on S^d: half-circle angles for
/// d = 1 (antipodes give identical measures), a Fibonacci lattice for d = 2.
std::vector<std::vector<double>> sphere_directions(int d, int n);

/// Geometric sequence start, start*ratio, ... (count terms).
std::vector<double> geometric_nus(double start, double ratio, int count);

/// omega(nu) = max over x grid and directions of the sublevel measure. The
/// direction grid is followed by refine_levels zoom passes around the best
/// direction for each nu; every nu is then scored against all refined
/// directions, so omega stays monotone.
SublevelCurve omega_curve(const DriftField& drift, std::span<const double> nu_list,
                          const Sampling& sampling, Exec exec = Exec::Parallel);

/// Smallest half of the nu list restricted to points where the quadrature
/// error estimate 2|L|/n_lambda stays below 10% of omega.
FitWindow default_fit_window(const SublevelCurve& curve);

AlphaEstimate fit_alpha(const SublevelCurve& curve, FitWindow window);
AlphaEstimate fit_alpha(const SublevelCurve& curve);

}  // namespace kinreg::nondeg

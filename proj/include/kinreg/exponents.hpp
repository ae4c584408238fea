#pragma once

// Parameter system behind the velocity-averaging regularity estimate:
// eight exponent constraints, the closed-form parameter eliminations,
// the admissible epsilon interval, r0, and the maximin search for beta0.

#include <array>
#include <string>
#include <vector>

#include "kinreg/exec.hpp"

namespace kinreg::exponents {

/// LOW: 1 < p < 2 (truncation needed); HIGH: p >= 2 (sigma = 0, no line 4).
enum class Branch { Low, High };

const char* to_string(Branch b);

struct ProblemParams {
  double alpha = 0.5;  ///< non-degeneracy exponent
  double p = 2.0;      ///< integrability of the kinetic solution
  int dim_total = 2;   ///< D = 1 + d
  int kappa_abs = 1;   ///< |kappa|, order of the lambda-derivative on the source

  Branch branch() const { return p < 2.0 ? Branch::Low : Branch::High; }

  /// Throws InvalidInput naming the offending field.
  void validate() const;

  /// Upper end of the admissible r-interval, min{p, D/(D-1)}.
  double r_limit() const;
};

struct FeasibleChoice {
  double r = 1.5;
  double epsilon = 0.1;  ///< symbol regularization exponent
  double vareps = 0.5;   ///< mollifier scaling exponent
  double zeta = 0.0;     ///< symbol magnitude exponent
  double sigma = 0.0;    ///< truncation exponent

  /// Conjugate exponent r' with 1/r + 1/r' = 1.
  double r_conj() const { return r / (r - 1.0); }
};

struct ConstraintVector {
  std::array<double, 8> lines{};  ///< lines[0] is line 1
  std::array<bool, 8> active{};

  double min_active() const;
  bool feasible() const { return min_active() > 0.0; }
};

struct DerivedParams {
  double zeta = 0.0;
  double vareps = 0.0;
  double sigma = 0.0;
};

struct EpsBounds {
  double lower = 0.0;
  double upper1 = 0.0;
  double upper2 = 0.0;
  double upper = 0.0;
};

struct ExponentReport {
  bool feasible = false;
  std::string diagnostic;
  Branch branch = Branch::High;
  double r0 = 0.0;
  double r_star = 0.0;
  double epsilon_star = 0.0;
  double beta0 = 0.0;
  DerivedParams derived;
  ConstraintVector lines;
  std::vector<int> binding_lines;  ///< 1-based
  bool at_epsilon_endpoint = false;
};

struct OptimizeOptions {
  int seed_grid = 64;          ///< coarse seeding grid per axis
  unsigned seed_rotation = 0;  ///< visit seeds starting from this offset
  double binding_tol = 1e-6;
  Exec exec = Exec::Serial;
};

/// All eight expressions as displayed, plus the active mask.
ConstraintVector constraint_lines(const ProblemParams& params, const FeasibleChoice& choice);

/// zeta, vareps, sigma that equalize lines 1=2, 1=3 and (LOW) 1=4.
/// Accepts epsilon >= 0; r must lie in (1, r_limit).
DerivedParams derived_params(const ProblemParams& params, double r, double epsilon);

/// Admissible epsilon interval at r; r must lie in the open interval (1, r_limit).
EpsBounds eps_bounds(const ProblemParams& params, double r);

/// Closed-form pieces, valid on the closed interval [1, r_limit]; no range checks.
double eps_upper1(const ProblemParams& params, double r);
double eps_upper2(const ProblemParams& params, double r);
double eps_lower(const ProblemParams& params, double r);

/// Supremal integrability exponent. Throws Infeasible if the bracket fails.
double find_r0(const ProblemParams& params);

/// beta(r, epsilon): minimum active line with derived parameters substituted.
double beta_objective(const ProblemParams& params, double r, double epsilon);

/// Full choice (derived parameters filled in) at (r, epsilon).
FeasibleChoice make_choice(const ProblemParams& params, double r, double epsilon);

ExponentReport optimize_beta0(const ProblemParams& params, const OptimizeOptions& opts = {});

/// Row-major (n_r x n_eps) landscape of beta over r in (1, r0) and
/// epsilon in [0, eps_upper(1)], used for plotting sweeps and as a seed.
struct Landscape {
  std::vector<double> r;
  std::vector<double> epsilon;
  std::vector<double> beta;  ///< beta[i * epsilon.size() + k]
};
Landscape beta_landscape(const ProblemParams& params, int n_r, int n_eps, Exec exec = Exec::Serial);

}  // namespace kinreg::exponents

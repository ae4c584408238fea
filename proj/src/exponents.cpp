#include "kinreg/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "kinreg/error.hpp"

namespace kinreg::exponents {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kOpenShrink = 1e-9;  // delta = 1e-9 * interval length

struct Argmax {
  double x = 0.0;
  double value = kNegInf;
};

// Golden-section maximization of a unimodal function on [a, b].
template <class F>
Argmax golden_max(F&& f, double a, double b) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200; ++it) {
    if (b - a <= 1e-13 * std::max(1.0, std::abs(a))) break;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? Argmax{c, fc} : Argmax{d, fd};
}

// Coarse grid seeding followed by golden-section refinement on the
// neighbouring cells of the best seed. Ties resolve to the lowest grid
// index so the visiting order never changes the answer.
template <class F>
Argmax seeded_max(F&& f, double lo, double hi, int n, unsigned rotation) {
  n = std::max(n, 3);
  auto node = [&](int k) { return lo + (hi - lo) * static_cast<double>(k) / (n - 1); };
  int best_k = -1;
  double best_v = kNegInf;
  for (int step = 0; step < n; ++step) {
    const int k = static_cast<int>((step + rotation) % static_cast<unsigned>(n));
    const double v = f(node(k));
    if (v > best_v || (v == best_v && k < best_k) || best_k < 0) {
      best_v = v;
      best_k = k;
    }
  }
  const double a = node(std::max(best_k - 1, 0));
  const double b = node(std::min(best_k + 1, n - 1));
  Argmax refined = golden_max(f, a, b);
  if (refined.value >= best_v) return refined;
  return {node(best_k), best_v};
}

void check_r_open(const ProblemParams& params, double r, const char* op) {
  const double hi = params.r_limit();
  if (!(r > 1.0 && r < hi)) {
    std::ostringstream os;
    os << op << ": r = " << r << " outside the open interval (1, " << hi << ")";
    throw InvalidInput(os.str());
  }
}

}  // namespace

// epsilon-bar(r) - epsilon-underbar(r); its zero is r0
static double bound_gap(const ProblemParams& params, double r) {
  return std::min(eps_upper1(params, r), eps_upper2(params, r)) - eps_lower(params, r);
}

const char* to_string(Branch b) { return b == Branch::Low ? "LOW" : "HIGH"; }

void ProblemParams::validate() const {
  kinreg::detail::require_finite(alpha, "alpha");
  kinreg::detail::require_finite(p, "p");
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be > 0");
  if (!(p > 1.0)) throw InvalidInput("p must be > 1");
  if (dim_total < 2) throw InvalidInput("dim_total must be >= 2");
  if (kappa_abs < 0) throw InvalidInput("kappa_abs must be >= 0");
}

double ProblemParams::r_limit() const {
  const double d = dim_total;
  return std::min(p, d / (d - 1.0));
}

double ConstraintVector::min_active() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (active[i]) m = std::min(m, lines[i]);
  return m;
}

ConstraintVector constraint_lines(const ProblemParams& params, const FeasibleChoice& choice) {
  params.validate();
  kinreg::detail::require_finite(choice.r, "r");
  kinreg::detail::require_finite(choice.epsilon, "epsilon");
  kinreg::detail::require_finite(choice.vareps, "vareps");
  kinreg::detail::require_finite(choice.zeta, "zeta");
  kinreg::detail::require_finite(choice.sigma, "sigma");
  if (!(choice.r > 1.0)) throw InvalidInput("constraint_lines: r must be > 1");
  const Branch branch = params.branch();
  if (branch == Branch::High && choice.sigma != 0.0)
    throw InvalidInput("constraint_lines: sigma must be 0 in the HIGH branch (p >= 2)");

  const double a = params.alpha;
  const double p = params.p;
  const double D = params.dim_total;
  const double kap = params.kappa_abs;
  const double r = choice.r;
  const double rc = choice.r_conj();
  const double eps = choice.epsilon;
  const double ve = choice.vareps;
  const double z = choice.zeta;
  const double s = choice.sigma;
  const double c = 2.0 * (r - 1.0) / r;
  const double trunc = s * (1.0 - p / 2.0);

  ConstraintVector out;
  out.lines[0] = c * (eps * a / 2.0 - z * a / 2.0 - trunc);
  out.lines[1] = c * (z - trunc);
  out.lines[2] = c * (1.0 - ve * (D + 1.0) / 2.0 - eps / 2.0 - trunc);
  out.lines[3] = s * (p / r - 1.0) - ve * (D - 1.0) / rc;
  out.lines[4] = ve * (1.0 - (D - 1.0) / rc) - eps / 2.0;
  out.lines[5] = 1.0 - eps / 2.0 - ve * (D / rc + 1.0 / r);
  out.lines[6] = 1.0 - eps * (D + (kap + 1.0) / 2.0) - D / rc;
  out.lines[7] = ve;

  // Lines 6 and 8 are dominated by 3 and 5 on the feasible set.
  out.active = {true, true, true, branch == Branch::Low, true, false, true, false};
  return out;
}

DerivedParams derived_params(const ProblemParams& params, double r, double epsilon) {
  params.validate();
  kinreg::detail::require_finite(r, "r");
  kinreg::detail::require_finite(epsilon, "epsilon");
  check_r_open(params, r, "derived_params");
  if (epsilon < 0.0) throw InvalidInput("derived_params: epsilon must be >= 0");

  const double a = params.alpha;
  const double p = params.p;
  const double D = params.dim_total;

  DerivedParams out;
  out.zeta = a / (2.0 + a) * epsilon;
  out.vareps = 2.0 / (D + 1.0) * (1.0 - (2.0 + 3.0 * a) / (4.0 + 2.0 * a) * epsilon);
  if (params.branch() == Branch::High) return out;

  const double inv_rc = (r - 1.0) / r;
  const double c = 2.0 * (r - 1.0) / r;
  const double cA = c * a / (2.0 + a);
  const double cB = c * (1.0 - p / 2.0);
  const double cC = p / r - 1.0;
  const double cE = 2.0 * (D - 1.0) * inv_rc / (D + 1.0);
  const double cD = cE * (2.0 + 3.0 * a) / (4.0 + 2.0 * a);
  const double denom = cC + cB;
  if (!(std::abs(denom) > 0.0) || !std::isfinite(denom))
    throw InvalidInput("derived_params: cC + cB vanishes (r at the p boundary)");
  out.sigma = (cA - cD) / denom * epsilon + cE / denom;
  return out;
}

double eps_upper1(const ProblemParams& params, double r) {
  const double a = params.alpha;
  const double D = params.dim_total;
  const double ratio = r / (D - 1.0 - (D - 2.0) * r);
  return (8.0 + 4.0 * a) / (4.0 + 6.0 * a + (2.0 + a) * (D + 1.0) * ratio);
}

double eps_upper2(const ProblemParams& params, double r) {
  const double D = params.dim_total;
  const double kap = params.kappa_abs;
  return (D - (D - 1.0) * r) / ((D + (kap + 1.0) / 2.0) * r);
}

double eps_lower(const ProblemParams& params, double r) {
  if (params.branch() == Branch::High) return 0.0;
  const double a = params.alpha;
  const double p = params.p;
  const double D = params.dim_total;
  const double num = (4.0 + 2.0 * a) * (2.0 - p) * (D - 1.0) * (r - 1.0);
  const double den =
      2.0 * a * (D + 1.0) * (p - r) + (2.0 + 3.0 * a) * (2.0 - p) * (D - 1.0) * (r - 1.0);
  return num / den;
}

EpsBounds eps_bounds(const ProblemParams& params, double r) {
  params.validate();
  kinreg::detail::require_finite(r, "r");
  check_r_open(params, r, "eps_bounds");
  EpsBounds b;
  b.upper1 = eps_upper1(params, r);
  b.upper2 = eps_upper2(params, r);
  b.upper = std::min(b.upper1, b.upper2);
  b.lower = eps_lower(params, r);
  return b;
}

double find_r0(const ProblemParams& params) {
  params.validate();
  const double D = params.dim_total;
  if (params.branch() == Branch::High) return D / (D - 1.0);

  double a = 1.0;
  double b = params.r_limit();
  const double ga = bound_gap(params, a);
  const double gb = bound_gap(params, b);
  if (!(ga > 0.0 && gb < 0.0)) {
    std::ostringstream os;
    os << "find_r0: upper - lower bound does not change sign on (1, " << b
       << "); values at endpoints " << ga << ", " << gb;
    throw Infeasible(os.str());
  }

  constexpr int kSamples = 65;
  double prev = ga;
  for (int i = 1; i < kSamples; ++i) {
    const double g = bound_gap(params, a + (b - a) * i / (kSamples - 1));
    if (!(g < prev)) {
      std::ostringstream os;
      os << "find_r0: bound gap not strictly decreasing near sample " << i;
      throw Infeasible(os.str());
    }
    prev = g;
  }

  while (b - a > 1e-10) {
    const double mid = 0.5 * (a + b);
    if (bound_gap(params, mid) > 0.0)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

FeasibleChoice make_choice(const ProblemParams& params, double r, double epsilon) {
  const DerivedParams d = derived_params(params, r, epsilon);
  FeasibleChoice c;
  c.r = r;
  c.epsilon = epsilon;
  c.zeta = d.zeta;
  c.vareps = d.vareps;
  c.sigma = d.sigma;
  return c;
}

double beta_objective(const ProblemParams& params, double r, double epsilon) {
  return constraint_lines(params, make_choice(params, r, epsilon)).min_active();
}

ExponentReport optimize_beta0(const ProblemParams& params, const OptimizeOptions& opts) {
  params.validate();
  ExponentReport rep;
  rep.branch = params.branch();
  try {
    rep.r0 = find_r0(params);
  } catch (const Infeasible& e) {
    rep.feasible = false;
    rep.diagnostic = e.what();
    return rep;
  }

  struct Interval {
    double lo, hi;
    bool empty;
  };
  auto eps_interval = [&](double r) {
    const double up = std::min(eps_upper1(params, r), eps_upper2(params, r));
    const double low = eps_lower(params, r);
    if (!(up > low)) return Interval{low, up, true};
    const double delta = kOpenShrink * (up - low);
    return Interval{low + delta, up - delta, false};
  };
  auto inner = [&](double r) -> Argmax {
    const Interval iv = eps_interval(r);
    if (iv.empty) return {iv.lo, kNegInf};
    return seeded_max([&](double e) { return beta_objective(params, r, e); }, iv.lo, iv.hi,
                      opts.seed_grid, opts.seed_rotation);
  };

  const double dr = kOpenShrink * (rep.r0 - 1.0);
  const double r_lo = 1.0 + dr;
  const double r_hi = rep.r0 - dr;
  const Argmax outer = seeded_max([&](double r) { return inner(r).value; }, r_lo, r_hi,
                                  opts.seed_grid, opts.seed_rotation);
  if (!(outer.value > 0.0)) {
    rep.feasible = false;
    std::ostringstream os;
    os << "optimize_beta0: no choice with all active lines positive (best " << outer.value << ")";
    rep.diagnostic = os.str();
    return rep;
  }

  const Argmax in = inner(outer.x);
  rep.feasible = true;
  rep.r_star = outer.x;
  rep.epsilon_star = in.x;
  const FeasibleChoice choice = make_choice(params, rep.r_star, rep.epsilon_star);
  rep.derived = {choice.zeta, choice.vareps, choice.sigma};
  rep.lines = constraint_lines(params, choice);
  rep.beta0 = rep.lines.min_active();
  for (int i = 0; i < 8; ++i)
    if (rep.lines.active[i] && rep.lines.lines[i] - rep.beta0 <= opts.binding_tol)
      rep.binding_lines.push_back(i + 1);

  const Interval iv = eps_interval(rep.r_star);
  const double tol = 1e-6 * (iv.hi - iv.lo);
  rep.at_epsilon_endpoint =
      rep.epsilon_star - iv.lo <= tol || iv.hi - rep.epsilon_star <= tol;
  return rep;
}

Landscape beta_landscape(const ProblemParams& params, int n_r, int n_eps, Exec exec) {
  params.validate();
  if (n_r < 1 || n_eps < 1) throw InvalidInput("beta_landscape: grid sizes must be >= 1");
  const double r0 = find_r0(params);
  const double eps_max = std::min(eps_upper1(params, 1.0), eps_upper2(params, 1.0));

  Landscape out;
  out.r.resize(n_r);
  out.epsilon.resize(n_eps);
  out.beta.resize(static_cast<std::size_t>(n_r) * n_eps);
  for (int i = 0; i < n_r; ++i) out.r[i] = 1.0 + (r0 - 1.0) * (i + 0.5) / n_r;
  for (int k = 0; k < n_eps; ++k) out.epsilon[k] = eps_max * (k + 0.5) / n_eps;

  auto row = [&](int i) {
    for (int k = 0; k < n_eps; ++k)
      out.beta[static_cast<std::size_t>(i) * n_eps + k] =
          beta_objective(params, out.r[i], out.epsilon[k]);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_r; ++i) row(i);
  } else {
    for (int i = 0; i < n_r; ++i) row(i);
  }
  return out;
}

}  // namespace kinreg::exponents

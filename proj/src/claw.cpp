#include "kinreg/claw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kinreg/error.hpp"

namespace kinreg::claw {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double param_or(const std::vector<double>& p, std::size_t i, double fallback) {
  return i < p.size() ? p[i] : fallback;
}

}  // namespace

// ---------------------------------------------------------------- flux

FluxSpec FluxSpec::from_id(const std::string& id, double amplitude, double extent) {
  FluxSpec f;
  if (id == "burgers")
    f.kind = FluxKind::Burgers;
  else if (id == "linear")
    f.kind = FluxKind::Linear;
  else if (id == "cubic")
    f.kind = FluxKind::Cubic;
  else if (id == "shifted_burgers")
    f.kind = FluxKind::ShiftedBurgers;
  else
    throw InvalidInput("unknown flux id '" + id + "'");
  kinreg::detail::require_finite(amplitude, "k_amplitude");
  if (!(std::abs(amplitude) < 1.0)) throw InvalidInput("k_amplitude must satisfy |a| < 1");
  if (!(extent > 0.0)) throw InvalidInput("flux extent must be > 0");
  f.amplitude = amplitude;
  f.extent = extent;
  return f;
}

std::string FluxSpec::id() const {
  switch (kind) {
    case FluxKind::Burgers: return "burgers";
    case FluxKind::Linear: return "linear";
    case FluxKind::Cubic: return "cubic";
    case FluxKind::ShiftedBurgers: return "shifted_burgers";
  }
  return "?";
}

double FluxSpec::k(double x) const { return 1.0 + amplitude * std::sin(kTwoPi * x / extent); }
double FluxSpec::dk(double x) const {
  return amplitude * kTwoPi / extent * std::cos(kTwoPi * x / extent);
}

double FluxSpec::g(double u) const {
  switch (kind) {
    case FluxKind::Burgers: return 0.5 * u * u;
    case FluxKind::Linear: return u;
    case FluxKind::Cubic: return u * u * u / 3.0;
    case FluxKind::ShiftedBurgers: return 0.5 * (u + 1.0) * (u + 1.0);
  }
  return 0.0;
}

double FluxSpec::dg(double u) const {
  switch (kind) {
    case FluxKind::Burgers: return u;
    case FluxKind::Linear: return 1.0;
    case FluxKind::Cubic: return u * u;
    case FluxKind::ShiftedBurgers: return u + 1.0;
  }
  return 0.0;
}

double FluxSpec::state_bound(double M) const {
  const double a = std::abs(amplitude);
  const double ratio = (1.0 + a) / (1.0 - a);
  switch (kind) {
    case FluxKind::Burgers: return M * std::sqrt(ratio);
    case FluxKind::Linear: return M * ratio;
    case FluxKind::Cubic: return M * std::cbrt(ratio);
    case FluxKind::ShiftedBurgers: return (M + 1.0) * std::sqrt(ratio) + 1.0;
  }
  return M;
}

double FluxSpec::speed_bound(double M) const {
  const double ms = state_bound(M);
  const double kmax = 1.0 + std::abs(amplitude);
  double dgmax = 0.0;
  switch (kind) {
    case FluxKind::Burgers: dgmax = ms; break;
    case FluxKind::Linear: dgmax = 1.0; break;
    case FluxKind::Cubic: dgmax = ms * ms; break;
    case FluxKind::ShiftedBurgers: dgmax = ms + 1.0; break;
  }
  return kmax * dgmax;
}

nondeg::DriftField FluxSpec::drift(const nondeg::Box& L) const {
  const FluxSpec self = *this;
  nondeg::Box K{{0.0}, {extent}};
  return nondeg::DriftField(
      1, 1,
      [self](std::span<const double> x, std::span<const double> l, std::span<double> out) {
        out[0] = self.a(x[0], l[0]);
      },
      std::move(K), L, "a=dA/du(" + id() + ")");
}

std::vector<double> InitialData::sample(std::size_t n_x, double extent) const {
  std::vector<double> u(n_x);
  const double dx = extent / static_cast<double>(n_x);
  for (std::size_t i = 0; i < n_x; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * dx;
    double v = 0.0;
    if (id == "riemann") {
      v = x < param_or(params, 2, 0.5 * extent) ? param_or(params, 0, 1.0) : param_or(params, 1, 0.0);
    } else if (id == "square_wave") {
      const bool in = x >= param_or(params, 2, 0.25 * extent) && x < param_or(params, 3, 0.75 * extent);
      v = in ? param_or(params, 1, 1.0) : param_or(params, 0, 0.0);
    } else if (id == "smooth_bump") {
      const double z = (x - param_or(params, 2, 0.5 * extent)) / param_or(params, 3, 0.1 * extent);
      v = param_or(params, 0, 0.0) + param_or(params, 1, 1.0) * std::exp(-z * z);
    } else if (id == "constant") {
      v = param_or(params, 0, 1.0);
    } else {
      throw InvalidInput("unknown initial data id '" + id + "'");
    }
    u[i] = v;
  }
  for (double v : params) kinreg::detail::require_finite(v, "u0 params");
  return u;
}

double SpaceTimeField::max_abs() const {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  return m;
}

double SpaceTimeField::mass(std::size_t t) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_x; ++i) s += at(t, i);
  return s * dx;
}

// ---------------------------------------------------------------- checks

WellposednessReport flux_wellposedness_check(const FluxSpec& flux, double u_bound, std::size_t n_x,
                                             std::size_t n_u, bool run_nondeg) {
  if (!(u_bound > 0.0) || n_x < 2 || n_u < 2)
    throw InvalidInput("wellposedness check: need u_bound > 0 and grids of at least 2 points");
  WellposednessReport rep;
  for (std::size_t i = 0; i < n_x; ++i) {
    const double x = flux.extent * static_cast<double>(i) / static_cast<double>(n_x);
    rep.max_abs_a_extra_at_zero = std::max(rep.max_abs_a_extra_at_zero, std::abs(flux.a_extra(x, 0.0)));
    for (std::size_t k = 0; k < n_u; ++k) {
      const double u = -u_bound + 2.0 * u_bound * static_cast<double>(k) / static_cast<double>(n_u - 1);
      rep.sup_a = std::max(rep.sup_a, std::abs(flux.a(x, u)));
      rep.sup_a_extra = std::max(rep.sup_a_extra, std::abs(flux.a_extra(x, u)));
    }
  }
  rep.valid = rep.max_abs_a_extra_at_zero <= 1e-12 && std::isfinite(rep.sup_a) &&
              std::isfinite(rep.sup_a_extra);
  std::ostringstream msg;
  if (!rep.valid)
    msg << "invalid: a_{d+1}(x, 0) reaches " << rep.max_abs_a_extra_at_zero;
  else
    msg << "valid";

  if (run_nondeg) {
    const nondeg::Box L{{-u_bound}, {u_bound}};
    const auto field = flux.drift(L);
    const auto nus = nondeg::geometric_nus(0.125, 0.5, 8);
    const auto curve = nondeg::omega_curve(field, nus, {17, 360, 2048});
    try {
      rep.drift_nondeg = nondeg::fit_alpha(curve);
      if (rep.drift_nondeg->degenerate) msg << "; degenerate for non-deg";
    } catch (const InvalidInput& e) {
      msg << "; nondeg fit failed: " << e.what();
    }
  }
  rep.message = msg.str();
  return rep;
}

// ---------------------------------------------------------------- solver

double llf_step(const FluxSpec& flux, double dx, double dt, const std::vector<double>& u,
                std::vector<double>& next, std::vector<double>& iface, Exec exec) {
  const std::size_t n = u.size();
  next.resize(n);
  iface.resize(n);
  const double lam = dt / dx;
  double smax = 0.0;
  // iface[i] is the flux through x_{i+1/2} = (i + 1) dx
  auto interface = [&](std::size_t i) {
    const double xh = static_cast<double>(i + 1) * dx;
    const double ul = u[i];
    const double ur = u[(i + 1) % n];
    const double s = std::max(std::abs(flux.a(xh, ul)), std::abs(flux.a(xh, ur)));
    iface[i] = 0.5 * (flux.A(xh, ul) + flux.A(xh, ur)) - 0.5 * s * (ur - ul);
    return s;
  };
  auto update = [&](std::size_t i) {
    next[i] = u[i] - lam * (iface[i] - iface[(i + n - 1) % n]);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static) reduction(max : smax)
    for (std::size_t i = 0; i < n; ++i) smax = std::max(smax, interface(i));
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) update(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) smax = std::max(smax, interface(i));
    for (std::size_t i = 0; i < n; ++i) update(i);
  }
  return smax * lam;
}

SpaceTimeField solve(const ClawProblem& problem, std::size_t n_x, double cfl, Exec exec) {
  if (!(cfl > 0.0 && cfl < 1.0)) throw InvalidInput("solve: cfl must lie in (0, 1)");
  if (n_x < 64) throw InvalidInput("solve: n_x must be >= 64");
  if (!(problem.T > 0.0) || !std::isfinite(problem.T)) throw InvalidInput("solve: T must be > 0");
  if (!(problem.extent > 0.0)) throw InvalidInput("solve: extent must be > 0");
  if (problem.flux.extent != problem.extent)
    throw InvalidInput("solve: flux period must equal the domain extent");

  const double dx = problem.extent / static_cast<double>(n_x);
  std::vector<double> u = problem.u0.sample(n_x, problem.extent);
  double M = 0.0;
  for (double v : u) M = std::max(M, std::abs(v));
  const double speed = problem.flux.speed_bound(M);
  const auto steps = static_cast<std::size_t>(
      std::max(1.0, std::ceil(problem.T * speed / (cfl * dx))));
  const double dt = problem.T / static_cast<double>(steps);

  // growth guard: |u(t)| <= bound * e^{C t}, C = sup |d/du a_{d+1}|
  const double ms = problem.flux.state_bound(M);
  double growth = 0.0;
  for (int i = 0; i < 256; ++i) {
    const double x = problem.extent * i / 256.0;
    for (int k = 0; k <= 64; ++k) {
      const double lam = -ms + 2.0 * ms * k / 64.0;
      growth = std::max(growth, std::abs(problem.flux.dk(x) * problem.flux.dg(lam)));
    }
  }

  SpaceTimeField f;
  f.n_t = steps + 1;
  f.n_x = n_x;
  f.dt = dt;
  f.dx = dx;
  f.extent = problem.extent;
  f.u.resize(f.n_t * n_x);
  std::copy(u.begin(), u.end(), f.u.begin());

  std::vector<double> next, iface;
  for (std::size_t step = 1; step <= steps; ++step) {
    const double c = llf_step(problem.flux, dx, dt, u, next, iface, exec);
    f.cfl_used = std::max(f.cfl_used, c);
    double umax = 0.0;
    for (double v : next) {
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "solve: non-finite state at step " << step;
        throw NumericalFailure(os.str());
      }
      umax = std::max(umax, std::abs(v));
    }
    if (c > 1.0) {
      std::ostringstream os;
      os << "solve: realized CFL " << c << " > 1 at step " << step;
      throw NumericalFailure(os.str());
    }
    if (umax > std::max(ms, M) * std::exp(growth * dt * static_cast<double>(step)) * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "solve: growth guard exceeded at step " << step << " (|u| = " << umax << ")";
      throw NumericalFailure(os.str());
    }
    u.swap(next);
    std::copy(u.begin(), u.end(), f.u.begin() + static_cast<std::ptrdiff_t>(step * n_x));
  }
  return f;
}

// ---------------------------------------------------------------- kinetic

int KineticField::chi(std::size_t t, std::size_t x, std::size_t l) const {
  const std::int32_t s = span[t * n_x + x];
  const auto z = static_cast<std::int64_t>(zero_cell);
  const auto li = static_cast<std::int64_t>(l);
  if (s > 0 && li >= z && li < z + s) return 1;
  if (s < 0 && li >= z + s && li < z) return -1;
  return 0;
}

KineticField kinetic_chi(const SpaceTimeField& field, std::size_t n_lambda, double pad) {
  if (n_lambda < 32) throw InvalidInput("kinetic_chi: n_lambda must be >= 32");
  if (!(pad >= 0.0)) throw InvalidInput("kinetic_chi: pad must be >= 0");
  const double M = field.max_abs();
  const double lo = -M - pad;
  const double width = 2.0 * (M + pad);
  if (!(width > 0.0)) throw InvalidInput("kinetic_chi: empty lambda range (u = 0 and pad = 0)");

  KineticField k;
  k.n_t = field.n_t;
  k.n_x = field.n_x;
  k.dlambda = width / static_cast<double>(n_lambda);
  k.lambda.resize(n_lambda);
  for (std::size_t l = 0; l < n_lambda; ++l)
    k.lambda[l] = lo + (static_cast<double>(l) + 0.5) * k.dlambda;
  k.zero_cell = static_cast<std::size_t>(
      std::lower_bound(k.lambda.begin(), k.lambda.end(), 0.0) - k.lambda.begin());

  const auto zero_it = k.lambda.begin() + static_cast<std::ptrdiff_t>(k.zero_cell);
  k.span.resize(field.u.size());
  for (std::size_t idx = 0; idx < field.u.size(); ++idx) {
    const double u = field.u[idx];
    if (u > 0.0) {
      // cells with 0 <= lambda < u
      k.span[idx] = static_cast<std::int32_t>(std::lower_bound(zero_it, k.lambda.end(), u) - zero_it);
    } else if (u < 0.0) {
      // cells with u <= lambda < 0
      k.span[idx] = -static_cast<std::int32_t>(zero_it - std::lower_bound(k.lambda.begin(), zero_it, u));
    } else {
      k.span[idx] = 0;
    }
  }
  return k;
}

double RhoProfile::operator()(double lambda) const {
  if (id == "plateau") {
    const double R = param_or(params, 0, 1.0);
    const double w = param_or(params, 1, 0.1);
    const double a = std::abs(lambda);
    if (a <= R) return 1.0;
    if (a >= R + w) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * (a - R) / w));
  }
  if (id == "zero") return 0.0;
  if (id == "identity") return lambda;
  if (id == "constant") return param_or(params, 0, 1.0);
  throw InvalidInput("unknown rho profile '" + id + "'");
}

SpaceTimeField velocity_average(const KineticField& chi, const SpaceTimeField& like,
                                const RhoProfile& rho) {
  if (like.n_t != chi.n_t || like.n_x != chi.n_x)
    throw InvalidInput("velocity_average: kinetic field and template shapes differ");
  if (rho.id == "plateau" && !(param_or(rho.params, 1, 0.1) > 0.0))
    throw InvalidInput("velocity_average: plateau width must be > 0");
  const std::size_t nl = chi.lambda.size();
  const double dl = chi.dlambda;
  const double lo = chi.lambda.front() - 0.5 * dl;
  // prefix[l] = sum_{l' < l} rho(lambda_l') dlambda
  std::vector<double> prefix(nl + 1, 0.0);
  for (std::size_t l = 0; l < nl; ++l) prefix[l + 1] = prefix[l] + rho(chi.lambda[l]) * dl;
  // integral of rho from lo to a: full cells plus the overlap of the cell holding a
  auto integral = [&](double a) {
    const double t = std::clamp((a - lo) / dl, 0.0, static_cast<double>(nl));
    const auto l = std::min(static_cast<std::size_t>(t), nl - 1);
    const double part = (t - static_cast<double>(l)) * dl;
    return prefix[l] + rho(lo + static_cast<double>(l) * dl + 0.5 * part) * part;
  };
  const double base = integral(0.0);

  SpaceTimeField out = like;
  out.u.resize(chi.span.size());
  for (std::size_t idx = 0; idx < chi.span.size(); ++idx)
    out.u[idx] = integral(like.u[idx]) - base;
  return out;
}

SpaceTimeField resample_time(const SpaceTimeField& f, std::size_t n) {
  if (n < 2 || f.n_t < 2) throw InvalidInput("resample_time: need at least two levels");
  const double t_end = f.t0 + static_cast<double>(f.n_t - 1) * f.dt;
  const double span = t_end - f.t0;
  SpaceTimeField out = f;
  out.n_t = n;
  out.dt = span / static_cast<double>(n);
  out.t0 = f.t0 + 0.5 * out.dt;
  out.u.assign(n * f.n_x, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = out.t0 + static_cast<double>(k) * out.dt;
    const double pos = (t - f.t0) / f.dt;
    auto lo = static_cast<std::size_t>(std::floor(pos));
    lo = std::min(lo, f.n_t - 2);
    const double w = pos - static_cast<double>(lo);
    for (std::size_t i = 0; i < f.n_x; ++i)
      out.u[k * f.n_x + i] = (1.0 - w) * f.at(lo, i) + w * f.at(lo + 1, i);
  }
  return out;
}

lpa::GridFunction as_grid_function(const SpaceTimeField& f) {
  if (f.n_t != f.n_x) throw InvalidInput("as_grid_function: field must be square (resample first)");
  lpa::GridFunction g;
  g.dims = 2;
  g.n = f.n_x;
  g.extent = {static_cast<double>(f.n_t) * f.dt, f.extent};
  g.values = f.u;
  g.validate();
  return g;
}

// ---------------------------------------------------------------- pipeline

RegularityReport pipeline_regularity(const ClawProblem& problem, const PipelineConfig& cfg) {
  RegularityReport rep;
  rep.r_used = cfg.r_used;
  const auto u0 = problem.u0.sample(cfg.n_x, problem.extent);
  double M = 0.0;
  for (double v : u0) M = std::max(M, std::abs(v));
  if (!(M > 0.0)) throw InvalidInput("pipeline: initial data vanishes identically");
  const double pad = cfg.lambda_pad_frac * M;
  rep.M = M;

  rep.wellposedness = flux_wellposedness_check(problem.flux, M + pad, 256, 257, false);
  if (!rep.wellposedness.valid) {
    rep.message = "flux fails the well-posedness check: " + rep.wellposedness.message;
    return rep;
  }

  const nondeg::Box L{{-M - pad}, {M + pad}};
  const auto nus = nondeg::geometric_nus(cfg.nu_start, cfg.nu_ratio, cfg.nu_count);
  const auto curve = nondeg::omega_curve(problem.flux.drift(L), nus, cfg.sampling, cfg.exec);
  rep.alpha = nondeg::fit_alpha(curve);
  if (rep.alpha->degenerate) {
    rep.message = "theory inapplicable: drift is degenerate (non-degeneracy fit)";
    return rep;
  }

  exponents::ProblemParams params;
  params.alpha = rep.alpha->alpha_hat;
  params.p = 2.0;
  params.dim_total = 2;
  params.kappa_abs = 1;
  rep.prediction = exponents::optimize_beta0(params);
  if (!rep.prediction->feasible) {
    rep.message = "theory inapplicable: " + rep.prediction->diagnostic;
    return rep;
  }
  rep.beta0_pred = rep.prediction->beta0;
  if (!(cfg.r_used > 1.0 && cfg.r_used < rep.prediction->r0))
    throw InvalidInput("pipeline: r_used must lie in (1, r0)");
  rep.applicable = true;

  const auto field = solve(problem, cfg.n_x, cfg.cfl, cfg.exec);
  const auto square = resample_time(field, cfg.n_x);
  const auto chi = kinetic_chi(square, cfg.n_lambda, pad);
  const double Mf = square.max_abs();
  const auto avg = velocity_average(chi, square, RhoProfile{"plateau", {Mf, pad > 0.0 ? pad : 0.1}});
  const auto grid = lpa::window(as_grid_function(avg), cfg.window_margin);

  const int j_top = static_cast<int>(std::floor(lpa::nyquist_band(grid)));
  const lpa::DyadicFilterBank bank(std::max(j_top, 2));
  const lpa::BandWindow win{cfg.jmin, cfg.jmax > 0 ? cfg.jmax : j_top};
  rep.spectrum_r = lpa::dyadic_spectrum(grid, bank, cfg.r_used, win, cfg.exec);
  rep.spectrum_2 = lpa::dyadic_spectrum(grid, bank, 2.0, win, cfg.exec);

  const auto& sr = *rep.spectrum_r;
  if (sr.saturated)
    rep.verdict = true;
  else
    rep.verdict = sr.beta_hat.has_value() && *sr.beta_hat >= rep.beta0_pred - cfg.tol;
  std::ostringstream os;
  os << (rep.verdict ? "measured decay meets the predicted bound"
                     : "measured decay below the predicted bound");
  if (sr.saturated) os << " (spectrum saturated: solution smooth at grid scale)";
  rep.message = os.str();
  return rep;
}

}  // namespace kinreg::claw

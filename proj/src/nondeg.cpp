#include "kinreg/nondeg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kinreg/error.hpp"

namespace kinreg::nondeg {

namespace {

// k(x) = 1 + a sin(2 pi x / extent)
struct Coefficient {
  double a = 0.0;
  double extent = 1.0;
  double operator()(double x) const {
    return 1.0 + a * std::sin(2.0 * std::numbers::pi * x / extent);
  }
};

Coefficient coefficient_from(const std::vector<double>& params, const std::string& id) {
  if (params.size() != 2)
    throw InvalidInput("drift '" + id + "' expects params {a, extent}");
  if (!(params[1] > 0.0)) throw InvalidInput("drift '" + id + "': extent must be > 0");
  return {params[0], params[1]};
}

std::size_t ipow(std::size_t base, int e) {
  std::size_t out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

// Midpoint lambda cells of L, flattened (cell-major, m coordinates each).
std::vector<double> lambda_cells(const Box& L, int n_lambda) {
  const int m = static_cast<int>(L.dim());
  const std::size_t cells = ipow(static_cast<std::size_t>(n_lambda), m);
  std::vector<double> out(cells * m);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rem = c;
    for (int a = m - 1; a >= 0; --a) {
      const std::size_t idx = rem % n_lambda;
      rem /= n_lambda;
      const double h = (L.hi[a] - L.lo[a]) / n_lambda;
      out[c * m + a] = L.lo[a] + (static_cast<double>(idx) + 0.5) * h;
    }
  }
  return out;
}

double cell_volume(const Box& L, int n_lambda) {
  double v = 1.0;
  for (std::size_t a = 0; a < L.dim(); ++a) v *= (L.hi[a] - L.lo[a]) / n_lambda;
  return v;
}

std::vector<double> x_grid(const Box& K, int n_x) {
  const int d = static_cast<int>(K.dim());
  const std::size_t pts = ipow(static_cast<std::size_t>(n_x), d);
  std::vector<double> out(pts * d);
  for (std::size_t c = 0; c < pts; ++c) {
    std::size_t rem = c;
    for (int a = d - 1; a >= 0; --a) {
      const std::size_t idx = rem % n_x;
      rem /= n_x;
      out[c * d + a] = n_x == 1 ? 0.5 * (K.lo[a] + K.hi[a])
                                : K.lo[a] + (K.hi[a] - K.lo[a]) * static_cast<double>(idx) / (n_x - 1);
    }
  }
  return out;
}

// Drift values at every lambda cell for fixed x (cell-major, d components).
void tabulate_at(const DriftField& drift, std::span<const double> x, const std::vector<double>& cells,
                 std::vector<double>& out) {
  const int d = drift.dim_space();
  const int m = drift.dim_velocity();
  const std::size_t n = cells.size() / m;
  out.resize(n * d);
  for (std::size_t c = 0; c < n; ++c)
    drift.eval(x, std::span<const double>(cells.data() + c * m, m),
               std::span<double>(out.data() + c * d, d));
}

// Counts, per nu, of cells with |xi_0 + xi . f| < nu; counts[k] is raised to the max.
void count_into(std::span<const double> fvals, int d, std::span<const double> xi,
                std::span<const double> nus, std::vector<double>& absbuf,
                std::vector<long long>& counts) {
  const std::size_t n = fvals.size() / d;
  absbuf.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    double s = xi[0];
    for (int k = 0; k < d; ++k) s += xi[k + 1] * fvals[c * d + k];
    absbuf[c] = std::abs(s);
  }
  for (std::size_t k = 0; k < nus.size(); ++k) {
    const double nu = nus[k];
    long long cnt = 0;
    for (std::size_t c = 0; c < n; ++c) cnt += absbuf[c] < nu ? 1 : 0;
    counts[k] = std::max(counts[k], cnt);
  }
}

// Zooms around xi0 in its tangent plane: a (2 * half + 1)^d offset grid of
// spacing h / half, recentred until the best direction stops moving, then
// h shrinks to one spacing.
std::vector<double> refine_direction(std::span<const double> fvals, int d,
                                     const std::vector<double>& xi0, double nu, double h,
                                     int levels, std::vector<double>& absbuf) {
  const int n = d + 1;
  std::vector<std::vector<double>> basis;
  // orthonormal tangent frame at xi
  auto rebuild_basis = [&](const std::vector<double>& xi) {
    basis.clear();
    for (int e = 0; e < n && static_cast<int>(basis.size()) < d; ++e) {
      std::vector<double> v(n, 0.0);
      v[e] = 1.0;
      auto project_out = [&](const std::vector<double>& u) {
        double dot = 0.0;
        for (int k = 0; k < n; ++k) dot += v[k] * u[k];
        for (int k = 0; k < n; ++k) v[k] -= dot * u[k];
      };
      project_out(xi);
      for (const auto& b : basis) project_out(b);
      double norm = 0.0;
      for (double c : v) norm += c * c;
      norm = std::sqrt(norm);
      if (norm < 1e-6) continue;
      for (double& c : v) c /= norm;
      basis.push_back(std::move(v));
    }
  };
  rebuild_basis(xi0);

  const int half = d == 1 ? 8 : 4;
  const double nus[1] = {nu};
  std::vector<long long> cnt(1, 0);
  count_into(fvals, d, xi0, nus, absbuf, cnt);
  long long best = cnt[0];
  std::vector<double> best_xi = xi0, trial(n);
  for (int level = 0; level < levels; ++level) {
    const double step = h / half;
    const int side = 2 * half + 1;
    const int total = d == 1 ? side : side * side;
    for (int pass = 0; pass < 16; ++pass) {
      const std::vector<double> center = best_xi;
      for (int t = 0; t < total; ++t) {
        const int a = t % side - half;
        const int b = d == 1 ? 0 : t / side - half;
        if (a == 0 && b == 0) continue;
        double norm = 0.0;
        for (int k = 0; k < n; ++k) {
          trial[k] = center[k] + step * a * basis[0][k] + (d > 1 ? step * b * basis[1][k] : 0.0);
          norm += trial[k] * trial[k];
        }
        norm = std::sqrt(norm);
        for (double& c : trial) c /= norm;
        cnt[0] = 0;
        count_into(fvals, d, trial, nus, absbuf, cnt);
        if (cnt[0] > best) {
          best = cnt[0];
          best_xi = trial;
        }
      }
      if (best_xi == center) break;
      rebuild_basis(best_xi);
    }
    h = step;
  }
  return best_xi;
}

class TableEval {
 public:
  TableEval(int d, int m, std::shared_ptr<const DriftTable> t) : d_(d), m_(m), t_(std::move(t)) {}

  void operator()(std::span<const double> x, std::span<const double> lambda,
                  std::span<double> out) const {
    const int naxes = d_ + m_;
    std::vector<std::size_t> base(naxes);
    std::vector<double> frac(naxes);
    for (int a = 0; a < naxes; ++a) {
      const double v = a < d_ ? x[a] : lambda[a - d_];
      const auto& ax = t_->axes[a];
      if (ax.size() == 1) {
        base[a] = 0;
        frac[a] = 0.0;
        continue;
      }
      auto it = std::upper_bound(ax.begin(), ax.end(), v);
      std::size_t i = it == ax.begin() ? 0 : static_cast<std::size_t>(it - ax.begin()) - 1;
      i = std::min(i, ax.size() - 2);
      base[a] = i;
      frac[a] = std::clamp((v - ax[i]) / (ax[i + 1] - ax[i]), 0.0, 1.0);
    }
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t corners = std::size_t{1} << naxes;
    for (std::size_t corner = 0; corner < corners; ++corner) {
      double w = 1.0;
      std::size_t flat = 0;
      bool skip = false;
      for (int a = 0; a < naxes; ++a) {
        const bool up = (corner >> a) & 1u;
        const auto& ax = t_->axes[a];
        if (up && ax.size() == 1) {
          skip = true;
          break;
        }
        w *= up ? frac[a] : 1.0 - frac[a];
        flat = flat * ax.size() + base[a] + (up ? 1 : 0);
      }
      if (skip || w == 0.0) continue;
      for (int k = 0; k < d_; ++k) out[k] += w * t_->values[flat * d_ + k];
    }
  }

 private:
  int d_;
  int m_;
  std::shared_ptr<const DriftTable> t_;
};

}  // namespace

double Box::measure() const {
  double v = 1.0;
  for (std::size_t a = 0; a < lo.size(); ++a) v *= hi[a] - lo[a];
  return v;
}

bool Box::contains(std::span<const double> x, double slack) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t a = 0; a < lo.size(); ++a)
    if (x[a] < lo[a] - slack || x[a] > hi[a] + slack) return false;
  return true;
}

void Box::validate(const char* name) const {
  if (lo.empty() || lo.size() != hi.size())
    throw InvalidInput(std::string("box ") + name + ": lo/hi must be non-empty and equal length");
  for (std::size_t a = 0; a < lo.size(); ++a) {
    kinreg::detail::require_finite(lo[a], name);
    kinreg::detail::require_finite(hi[a], name);
    if (!(hi[a] > lo[a])) throw InvalidInput(std::string("box ") + name + ": hi must exceed lo");
  }
}

DriftField::DriftField(int dim_space, int dim_velocity, Eval eval, Box K, Box L, std::string label)
    : d_(dim_space),
      m_(dim_velocity),
      eval_(std::move(eval)),
      K_(std::move(K)),
      L_(std::move(L)),
      label_(std::move(label)) {
  if (d_ < 1 || m_ < 1) throw InvalidInput("drift: dimensions must be >= 1");
  K_.validate("K");
  L_.validate("L");
  if (static_cast<int>(K_.dim()) != d_) throw InvalidInput("drift: K dimension must equal d");
  if (static_cast<int>(L_.dim()) != m_) throw InvalidInput("drift: L dimension must equal m");
}

DriftField DriftField::registered(const std::string& id, const std::vector<double>& params, Box K,
                                  Box L) {
  const int m = static_cast<int>(L.dim());
  auto need_1d = [&] {
    if (K.dim() != 1 || m != 1) throw InvalidInput("drift '" + id + "' requires d = m = 1");
  };
  if (id == "constant") {
    if (params.empty()) throw InvalidInput("drift 'constant' expects params {c_1..c_d}");
    for (double c : params) kinreg::detail::require_finite(c, "constant drift");
    const int d = static_cast<int>(params.size());
    return DriftField(
        d, m,
        [params](std::span<const double>, std::span<const double>, std::span<double> out) {
          std::copy(params.begin(), params.end(), out.begin());
        },
        std::move(K), std::move(L), id);
  }
  if (id == "lambda") {
    need_1d();
    return DriftField(
        1, 1,
        [](std::span<const double>, std::span<const double> l, std::span<double> out) {
          out[0] = l[0];
        },
        std::move(K), std::move(L), id);
  }
  if (id == "lambda_squared") {
    need_1d();
    return DriftField(
        1, 1,
        [](std::span<const double>, std::span<const double> l, std::span<double> out) {
          out[0] = l[0] * l[0];
        },
        std::move(K), std::move(L), id);
  }
  if (id == "k_lambda" || id == "k_constant" || id == "k_lambda_squared") {
    need_1d();
    const Coefficient k = coefficient_from(params, id);
    const int power = id == "k_constant" ? 0 : id == "k_lambda" ? 1 : 2;
    return DriftField(
        1, 1,
        [k, power](std::span<const double> x, std::span<const double> l, std::span<double> out) {
          const double lp = power == 0 ? 1.0 : power == 1 ? l[0] : l[0] * l[0];
          out[0] = k(x[0]) * lp;
        },
        std::move(K), std::move(L), id);
  }
  throw InvalidInput("unknown drift id '" + id + "'");
}

DriftField DriftField::tabulated(int dim_space, int dim_velocity, DriftTable table, Box K, Box L) {
  const int naxes = dim_space + dim_velocity;
  if (static_cast<int>(table.axes.size()) != naxes)
    throw InvalidInput("drift table: expected d + m axes");
  std::size_t total = 1;
  for (int a = 0; a < naxes; ++a) {
    const auto& ax = table.axes[a];
    if (ax.empty()) throw InvalidInput("drift table: empty axis");
    for (std::size_t i = 0; i < ax.size(); ++i) {
      kinreg::detail::require_finite(ax[i], "table axis");
      if (i > 0 && !(ax[i] > ax[i - 1]))
        throw InvalidInput("drift table: grid coordinates must be strictly increasing");
    }
    total *= ax.size();
  }
  if (table.values.size() != total * static_cast<std::size_t>(dim_space))
    throw InvalidInput("drift table: values size does not match grid");
  for (double v : table.values) kinreg::detail::require_finite(v, "table value");
  for (int a = 0; a < naxes; ++a) {
    const Box& box = a < dim_space ? K : L;
    const std::size_t ba = a < dim_space ? a : a - dim_space;
    if (ba >= box.dim()) throw InvalidInput("drift table: box dimension mismatch");
    const auto& ax = table.axes[a];
    if (ax.front() > box.lo[ba] || ax.back() < box.hi[ba])
      throw InvalidInput("drift table: grid does not cover K x L");
  }
  auto shared = std::make_shared<const DriftTable>(std::move(table));
  DriftField f(dim_space, dim_velocity, TableEval(dim_space, dim_velocity, shared), std::move(K),
               std::move(L), "table");
  f.table_ = std::move(shared);
  return f;
}

double sublevel_measure(const DriftField& drift, std::span<const double> x,
                        std::span<const double> xi, double nu, int n_lambda) {
  const int d = drift.dim_space();
  if (static_cast<int>(xi.size()) != d + 1) throw InvalidInput("sublevel_measure: xi must have d+1 components");
  if (static_cast<int>(x.size()) != d) throw InvalidInput("sublevel_measure: x must have d components");
  double norm2 = 0.0;
  for (double v : xi) norm2 += v * v;
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) throw InvalidInput("sublevel_measure: |xi| must be 1");
  if (!(nu > 0.0)) throw InvalidInput("sublevel_measure: nu must be > 0");
  if (n_lambda < 1) throw InvalidInput("sublevel_measure: n_lambda must be >= 1");
  if (drift.is_table() && !drift.K().contains(x, 1e-12))
    throw InvalidInput("sublevel_measure: x outside K in table mode");

  const auto cells = lambda_cells(drift.L(), n_lambda);
  std::vector<double> fvals;
  tabulate_at(drift, x, cells, fvals);
  std::vector<double> absbuf;
  std::vector<long long> count(1, 0);
  const double nus[1] = {nu};
  count_into(fvals, d, xi, nus, absbuf, count);
  return static_cast<double>(count[0]) * cell_volume(drift.L(), n_lambda);
}

std::vector<std::vector<double>> sphere_directions(int d, int n) {
  if (n < 1) throw InvalidInput("sphere_directions: n must be >= 1");
  std::vector<std::vector<double>> out;
  out.reserve(n);
  if (d == 1) {
    for (int k = 0; k < n; ++k) {
      const double t = std::numbers::pi * k / n;
      out.push_back({std::cos(t), std::sin(t)});
    }
  } else if (d == 2) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / n;
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * i;
      out.push_back({z, rad * std::cos(phi), rad * std::sin(phi)});
    }
  } else {
    throw InvalidInput("sphere_directions: only d = 1 or d = 2 supported");
  }
  return out;
}

std::vector<double> geometric_nus(double start, double ratio, int count) {
  if (!(start > 0.0) || !(ratio > 0.0 && ratio < 1.0) || count < 1)
    throw InvalidInput("nu range: need start > 0, 0 < ratio < 1, count >= 1");
  std::vector<double> out(count);
  double v = start;
  for (int i = 0; i < count; ++i, v *= ratio) out[i] = v;
  return out;
}

SublevelCurve omega_curve(const DriftField& drift, std::span<const double> nu_list,
                          const Sampling& sampling, Exec exec) {
  if (sampling.n_x < 1 || sampling.n_sphere < 1 || sampling.n_lambda < 1)
    throw InvalidInput("omega_curve: sampling grids must be non-empty");
  if (nu_list.empty()) throw InvalidInput("omega_curve: empty nu list");
  for (std::size_t i = 0; i < nu_list.size(); ++i) {
    if (!(nu_list[i] > 0.0)) throw InvalidInput("omega_curve: nu values must be > 0");
    if (i > 0 && !(nu_list[i] < nu_list[i - 1]))
      throw InvalidInput("omega_curve: nu list must be strictly decreasing");
  }

  const int d = drift.dim_space();
  const auto cells = lambda_cells(drift.L(), sampling.n_lambda);
  const auto xs = x_grid(drift.K(), sampling.n_x);
  const auto dirs = sphere_directions(d, sampling.n_sphere);
  const std::size_t n_points = xs.size() / d;
  const std::size_t n_nu = nu_list.size();

  if (sampling.refine_levels < 0) throw InvalidInput("omega_curve: refine_levels must be >= 0");
  const double h0 = d == 1 ? std::numbers::pi / sampling.n_sphere
                           : std::sqrt(4.0 * std::numbers::pi / sampling.n_sphere);

  std::vector<long long> best(n_nu, 0);
  auto point = [&](std::size_t ip, std::vector<double>& fvals, std::vector<double>& absbuf,
                   std::vector<long long>& counts) {
    tabulate_at(drift, std::span<const double>(xs.data() + ip * d, d), cells, fvals);
    std::vector<long long> here(n_nu, 0), cnt(n_nu);
    std::vector<std::size_t> arg(n_nu, 0);
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      std::fill(cnt.begin(), cnt.end(), 0);
      count_into(fvals, d, dirs[k], nu_list, absbuf, cnt);
      for (std::size_t i = 0; i < n_nu; ++i)
        if (cnt[i] > here[i]) {
          here[i] = cnt[i];
          arg[i] = k;
        }
    }
    if (sampling.refine_levels > 0) {
      std::vector<std::vector<double>> refined;
      for (std::size_t i = 0; i < n_nu; ++i)
        refined.push_back(refine_direction(fvals, d, dirs[arg[i]], nu_list[i], h0,
                                           sampling.refine_levels, absbuf));
      for (const auto& xi : refined) count_into(fvals, d, xi, nu_list, absbuf, here);
    }
    for (std::size_t i = 0; i < n_nu; ++i) counts[i] = std::max(counts[i], here[i]);
  };

  if (exec == Exec::Parallel) {
#pragma omp parallel
    {
      std::vector<double> fvals, absbuf;
      std::vector<long long> local(n_nu, 0);
#pragma omp for schedule(dynamic)
      for (std::size_t ip = 0; ip < n_points; ++ip) point(ip, fvals, absbuf, local);
#pragma omp critical(kinreg_omega_max)
      for (std::size_t k = 0; k < n_nu; ++k) best[k] = std::max(best[k], local[k]);
    }
  } else {
    std::vector<double> fvals, absbuf;
    for (std::size_t ip = 0; ip < n_points; ++ip) point(ip, fvals, absbuf, best);
  }

  SublevelCurve curve;
  curve.nu_values.assign(nu_list.begin(), nu_list.end());
  curve.sampling = sampling;
  curve.L_measure = drift.L().measure();
  const double vol = cell_volume(drift.L(), sampling.n_lambda);
  curve.omega_values.resize(n_nu);
  for (std::size_t k = 0; k < n_nu; ++k) curve.omega_values[k] = static_cast<double>(best[k]) * vol;
  for (std::size_t k = 1; k < n_nu; ++k)
    if (curve.omega_values[k] > curve.omega_values[k - 1])
      throw NumericalFailure("omega_curve: omega not monotone in nu");
  return curve;
}

FitWindow default_fit_window(const SublevelCurve& curve) {
  const std::size_t n = curve.nu_values.size();
  if (n < 3) throw InvalidInput("fit window: need at least 3 nu values");
  const int m = curve.sampling.n_lambda;
  const double err = 2.0 * curve.L_measure / m;
  auto resolved = [&](std::size_t i) { return curve.omega_values[i] >= 10.0 * err; };

  std::size_t last = n - 1;
  while (last > 0 && !resolved(last)) --last;
  if (!resolved(last)) return {n - 3, n - 1};
  last = std::max<std::size_t>(last, 2);
  const std::size_t first = std::min(n / 2, last - 2);
  return {first, last};
}

AlphaEstimate fit_alpha(const SublevelCurve& curve, FitWindow window) {
  const std::size_t n = curve.nu_values.size();
  if (window.last >= n || window.first > window.last)
    throw InvalidInput("fit_alpha: window outside the curve");
  std::vector<double> lx, ly;
  bool all_flat = true;
  for (std::size_t i = window.first; i <= window.last; ++i) {
    const double w = curve.omega_values[i];
    if (w < 0.9 * curve.L_measure) all_flat = false;
    if (w > 0.0) {
      lx.push_back(std::log(curve.nu_values[i]));
      ly.push_back(std::log(w));
    }
  }
  if (lx.size() < 3) {
    std::ostringstream os;
    os << "fit_alpha: fewer than 3 non-zero omega values in window [" << window.first << ", "
       << window.last << "]; nu range too small for the lambda resolution";
    throw InvalidInput(os.str());
  }

  const double k = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;

  AlphaEstimate est;
  est.window = window;
  est.alpha_hat = std::max(0.0, slope);
  est.constant_hat = std::exp(my - slope * mx);
  est.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  est.degenerate = slope < 0.05 || all_flat;
  return est;
}

AlphaEstimate fit_alpha(const SublevelCurve& curve) { return fit_alpha(curve, default_fit_window(curve)); }

}  // namespace kinreg::nondeg

#include "kinreg/lpa.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kinreg/error.hpp"
#include "kinreg/fft.hpp"

namespace kinreg::lpa {

namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Smooth step: 0 for s <= 0, 1 for s >= 1.
double smooth_step(double s, double steep) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-steep / s);
  const double b = std::exp(-steep / (1.0 - s));
  return a / (a + b);
}

// Signed lattice index of half-complex / full position i on an n-point axis.
long signed_index(std::size_t i, std::size_t n) {
  return i <= n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
}

double pow_abs(double d, double q) {
  const double a = std::abs(d);
  if (q == 2.0) return a * a;
  if (q == 1.0) return a;
  return std::pow(a, q);
}

int top_band(const GridFunction& u, const DyadicFilterBank& bank) {
  const int jt = std::min(bank.j_max(), static_cast<int>(std::floor(nyquist_band(u))));
  if (jt < 0) throw InvalidInput("grid too coarse: no Nyquist-safe band");
  return jt;
}

// Multiplies a half-complex spectrum by a radial symbol in place.
void multiply_radial(std::vector<cplx>& spec, const GridFunction& u,
                     const std::function<double(double)>& symbol) {
  const std::size_t n = u.n;
  const std::size_t nh = n / 2 + 1;
  if (u.dims == 1) {
    const double w = kTwoPi / u.extent[0];
    for (std::size_t k = 0; k < nh; ++k) spec[k] *= symbol(w * static_cast<double>(k));
    return;
  }
  const double w0 = kTwoPi / u.extent[0];
  const double w1 = kTwoPi / u.extent[1];
  for (std::size_t i = 0; i < n; ++i) {
    const double f0 = w0 * static_cast<double>(signed_index(i, n));
    for (std::size_t k = 0; k < nh; ++k) {
      const double f1 = w1 * static_cast<double>(k);
      spec[i * nh + k] *= symbol(std::hypot(f0, f1));
    }
  }
}

GridFunction from_values(const GridFunction& like, std::vector<double> v) {
  GridFunction g;
  g.dims = like.dims;
  g.n = like.n;
  g.extent = like.extent;
  g.values = std::move(v);
  return g;
}

}  // namespace

// ---------------------------------------------------------------- grid

double GridFunction::cell_volume() const {
  double v = extent[0] / static_cast<double>(n);
  if (dims == 2) v *= extent[1] / static_cast<double>(n);
  return v;
}

std::vector<std::size_t> GridFunction::shape() const {
  return dims == 1 ? std::vector<std::size_t>{n} : std::vector<std::size_t>{n, n};
}

void GridFunction::validate() const {
  if (dims != 1 && dims != 2) throw InvalidInput("grid: dims must be 1 or 2");
  if (n < 8 || !is_pow2(n)) throw InvalidInput("grid: n must be a power of two >= 8");
  for (int a = 0; a < dims; ++a)
    if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
      throw InvalidInput("grid: extent must be finite and > 0");
  if (values.size() != size()) throw InvalidInput("grid: value count does not match n^dims");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidInput("grid: non-finite sample");
}

GridFunction GridFunction::zeros(int dims, std::size_t n, std::array<double, 2> extent) {
  GridFunction g;
  g.dims = dims;
  g.n = n;
  g.extent = extent;
  g.values.assign(dims == 1 ? n : n * n, 0.0);
  return g;
}

// ---------------------------------------------------------------- bank

double BumpProfile::operator()(double xi) const {
  const double a = std::abs(xi);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  return 1.0 - smooth_step(a - 1.0, steepness);
}

DyadicFilterBank::DyadicFilterBank(int j_max, BumpProfile eta) : j_max_(j_max), eta_(eta) {
  if (j_max < 2) throw InvalidInput("filter bank: j_max must be >= 2");
  if (!(eta.steepness > 0.0)) throw InvalidInput("filter bank: steepness must be > 0");
}

double DyadicFilterBank::phi(int j, double xi) const {
  if (j < 0) return 0.0;
  if (j == 0) return eta_(xi);
  return eta_(std::ldexp(xi, -j)) - eta_(std::ldexp(xi, -(j - 1)));
}

DyadicFilterBank build_filter_bank(int j_max, BumpProfile eta) { return DyadicFilterBank(j_max, eta); }

double nyquist_band(const GridFunction& u) {
  double jn = std::log2(std::numbers::pi * static_cast<double>(u.n) / u.extent[0]) - 1.0;
  if (u.dims == 2)
    jn = std::min(jn, std::log2(std::numbers::pi * static_cast<double>(u.n) / u.extent[1]) - 1.0);
  return jn;
}

// ---------------------------------------------------------------- multipliers

GridFunction apply_radial_multiplier(const GridFunction& u,
                                     const std::function<double(double)>& symbol) {
  u.validate();
  const auto shape = u.shape();
  auto spec = fft::forward_real(u.values, shape);
  multiply_radial(spec, u, symbol);
  return from_values(u, fft::inverse_real(spec, shape));
}

GridFunction apply_band(const GridFunction& u, const DyadicFilterBank& bank, int j) {
  u.validate();
  if (j < 0 || j > bank.j_max()) throw InvalidInput("apply_band: j outside [0, j_max]");
  const double jn = nyquist_band(u);
  if (j > std::floor(jn)) {
    std::ostringstream os;
    os << "apply_band: band " << j << " at or above Nyquist (j_nyq = " << jn << ")";
    throw InvalidInput(os.str());
  }
  return apply_radial_multiplier(u, [&](double xi) { return bank.phi(j, xi); });
}

double lr_norm(const GridFunction& u, double r) {
  if (!(r >= 1.0)) throw InvalidInput("lr_norm: r must be >= 1");
  double acc = 0.0;
  for (double v : u.values) acc += pow_abs(v, r);
  return std::pow(acc * u.cell_volume(), 1.0 / r);
}

// ---------------------------------------------------------------- spectra

namespace {

std::vector<double> band_norms(const GridFunction& u, const DyadicFilterBank& bank, int j_top,
                               double r, Exec exec) {
  const auto shape = u.shape();
  const auto spec = fft::forward_real(u.values, shape);
  std::vector<double> norms(j_top + 1, 0.0);
  auto one = [&](int j) {
    auto s = spec;
    multiply_radial(s, u, [&](double xi) { return bank.phi(j, xi); });
    norms[j] = lr_norm(from_values(u, fft::inverse_real(s, shape)), r);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j <= j_top; ++j) one(j);
  } else {
    for (int j = 0; j <= j_top; ++j) one(j);
  }
  return norms;
}

}  // namespace

DyadicSpectrum dyadic_spectrum(const GridFunction& u, const DyadicFilterBank& bank, double r,
                               BandWindow window, Exec exec) {
  u.validate();
  if (!(r >= 1.0)) throw InvalidInput("dyadic_spectrum: r must be >= 1");
  const int j_top = top_band(u, bank);
  if (window.jmax <= 0) window.jmax = j_top;
  if (window.jmin < 1 || window.jmax > j_top || window.jmin > window.jmax) {
    std::ostringstream os;
    os << "dyadic_spectrum: fit window [" << window.jmin << ", " << window.jmax
       << "] empty or outside the Nyquist-safe bands [1, " << j_top << "]";
    throw InvalidInput(os.str());
  }

  DyadicSpectrum out;
  out.r = r;
  out.fit_window = window;
  out.norms = band_norms(u, bank, j_top, r, exec);

  const double peak = *std::max_element(out.norms.begin(), out.norms.end());
  const double floor_v = kUnderflow * peak;
  std::vector<double> xs, ys;
  int under = 0;
  for (int j = window.jmin; j <= window.jmax; ++j) {
    const double v = out.norms[j];
    if (!(v > floor_v) || v == 0.0) {
      ++under;
      continue;
    }
    xs.push_back(j);
    ys.push_back(std::log2(v));
  }
  const int width = window.jmax - window.jmin + 1;
  out.saturated = 2 * under >= width;
  out.bands_fitted = static_cast<int>(xs.size());
  if (xs.size() >= 2) {
    const double k = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    out.beta_hat = -sxy / sxx;
  } else {
    out.saturated = true;
  }
  return out;
}

BesovValue besov_quasinorm(const GridFunction& u, double s, double q, double rho) {
  u.validate();
  kinreg::detail::require_finite(s, "s");
  if (!(q >= 1.0) || !(rho >= 1.0)) throw InvalidInput("besov_quasinorm: q and rho must be >= 1");
  const int j_top = static_cast<int>(std::floor(nyquist_band(u)));
  if (j_top < 2) throw InvalidInput("besov_quasinorm: grid too coarse");
  const DyadicFilterBank bank(j_top);
  const auto norms = band_norms(u, bank, j_top, q, Exec::Serial);
  double acc = 0.0;
  for (int j = 0; j <= j_top; ++j) acc += std::exp2(j * s * rho) * std::pow(norms[j], rho);
  return {std::pow(acc, 1.0 / rho), j_top};
}

// ---------------------------------------------------------------- Gagliardo

namespace {

double periodic_gap(double d, double extent) {
  d = std::abs(d);
  return std::min(d, extent - d);
}

GagliardoValue gagliardo_serial_1d(const GridFunction& u, double s, double q) {
  const std::size_t n = u.n;
  const double h = u.extent[0] / static_cast<double>(n);
  const double expo = 1.0 + s * q;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      if (i == k) continue;
      const double dist = periodic_gap((static_cast<double>(i) - static_cast<double>(k)) * h, u.extent[0]);
      acc += pow_abs(u.values[i] - u.values[k], q) / std::pow(dist, expo);
    }
  return {acc * h * h, 0.0};
}

GagliardoValue gagliardo_serial_2d(const GridFunction& u, double s, double q) {
  const std::size_t n = u.n;
  const double h0 = u.extent[0] / static_cast<double>(n);
  const double h1 = u.extent[1] / static_cast<double>(n);
  const double expo = 2.0 + s * q;
  double acc = 0.0;
  for (std::size_t a = 0; a < n * n; ++a)
    for (std::size_t b = 0; b < n * n; ++b) {
      if (a == b) continue;
      const double d0 = periodic_gap((static_cast<double>(a / n) - static_cast<double>(b / n)) * h0, u.extent[0]);
      const double d1 = periodic_gap((static_cast<double>(a % n) - static_cast<double>(b % n)) * h1, u.extent[1]);
      acc += pow_abs(u.values[a] - u.values[b], q) / std::pow(std::hypot(d0, d1), expo);
    }
  const double vol = h0 * h1;
  return {acc * vol * vol, 0.0};
}

// Pairs grouped by lattice offset m: sum_m w(m) sum_i |u_i - u_{i+m}|^q.
GagliardoValue gagliardo_offsets(const GridFunction& u, double s, double q, bool parallel) {
  const std::size_t n = u.n;
  const bool two = u.dims == 2;
  const std::size_t n_off = two ? n * n : n;
  const double h0 = u.extent[0] / static_cast<double>(n);
  const double h1 = two ? u.extent[1] / static_cast<double>(n) : 0.0;
  const double expo = u.dims + s * q;
  std::vector<double> partial(n_off, 0.0);

  auto offset = [&](std::size_t m) {
    if (m == 0) return;
    double acc = 0.0;
    if (!two) {
      for (std::size_t i = 0; i < n; ++i) acc += pow_abs(u.values[i] - u.values[(i + m) % n], q);
      const double dist = periodic_gap(static_cast<double>(m) * h0, u.extent[0]);
      partial[m] = acc / std::pow(dist, expo);
      return;
    }
    const std::size_t m0 = m / n, m1 = m % n;
    for (std::size_t i0 = 0; i0 < n; ++i0) {
      const double* row = u.values.data() + i0 * n;
      const double* other = u.values.data() + ((i0 + m0) % n) * n;
      for (std::size_t i1 = 0; i1 < n; ++i1) acc += pow_abs(row[i1] - other[(i1 + m1) % n], q);
    }
    const double d0 = periodic_gap(static_cast<double>(m0) * h0, u.extent[0]);
    const double d1 = periodic_gap(static_cast<double>(m1) * h1, u.extent[1]);
    partial[m] = acc / std::pow(std::hypot(d0, d1), expo);
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t m = 0; m < n_off; ++m) offset(m);
  } else {
    for (std::size_t m = 0; m < n_off; ++m) offset(m);
  }
  double total = 0.0;
  for (double v : partial) total += v;
  const double vol = two ? h0 * h1 : h0;
  return {total * vol * vol, 0.0};
}

}  // namespace

GagliardoValue gagliardo_seminorm(const GridFunction& u, double s, double q, Exec exec) {
  u.validate();
  if (!(s > 0.0 && s < 1.0)) throw InvalidInput("gagliardo_seminorm: s must lie in (0, 1)");
  if (!(q >= 1.0)) throw InvalidInput("gagliardo_seminorm: q must be >= 1");
  const std::size_t cap = u.dims == 1 ? kGagliardoCap1d : kGagliardoCap2d;
  if (u.n > cap) {
    std::ostringstream os;
    os << "gagliardo_seminorm: n = " << u.n << " exceeds the pair-sum cap " << cap
       << "; subsample by a factor of " << u.n / cap << " per axis first";
    throw InvalidInput(os.str());
  }
  GagliardoValue v = exec == Exec::Serial
                         ? (u.dims == 1 ? gagliardo_serial_1d(u, s, q) : gagliardo_serial_2d(u, s, q))
                         : gagliardo_offsets(u, s, q, true);
  v.seminorm = std::pow(v.integral, 1.0 / q);
  return v;
}

// ---------------------------------------------------------------- window

double plateau_cutoff(double t, double margin) {
  // transitions of width w end at the plateau, so the support shrinks with it
  const double w = std::min(margin, 1.0 - 2.0 * margin);
  const double e = std::min(t, 1.0 - t) - (margin - w);
  if (e <= 0.0) return 0.0;
  if (e < w) return smooth_step(e / w, 1.0);
  return 1.0;
}

GridFunction window(const GridFunction& u, double margin) {
  u.validate();
  if (!(margin > 0.0 && margin < 0.5)) throw InvalidInput("window: margin must lie in (0, 0.5)");
  GridFunction out = u;
  const std::size_t n = u.n;
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i)
    c[i] = plateau_cutoff((static_cast<double>(i) + 0.5) / static_cast<double>(n), margin);
  if (u.dims == 1) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] *= c[i];
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) out.values[i * n + k] *= c[i] * c[k];
  }
  return out;
}

// ---------------------------------------------------------------- Gaussian window

std::complex<double> gaussian_window_transform(int j, double vareps, int dims,
                                               const std::vector<double>& xi,
                                               const std::vector<double>& y) {
  if (dims != 1 && dims != 2) throw InvalidInput("gaussian window: dims must be 1 or 2");
  if (static_cast<int>(xi.size()) != dims) throw InvalidInput("gaussian window: xi has wrong length");
  const double D = dims;
  const double pi = std::numbers::pi;
  const double C = std::pow(pi, -D / 4.0);
  const double scale = std::exp2(-vareps * j);  // 2^{-eps j}
  std::complex<double> v = C * std::pow(2.0 * pi, D / 2.0) * std::pow(scale, (D - 1.0) / 2.0) *
                           std::exp(-2.0 * pi * pi * xi[0] * xi[0]);
  for (int k = 1; k < dims; ++k) {
    const double yk = y.empty() ? 0.0 : y[k - 1];
    v *= std::exp(std::complex<double>(0.0, -2.0 * pi * yk * xi[k])) *
         std::exp(-2.0 * pi * pi * scale * scale * xi[k] * xi[k]);
  }
  return v;
}

namespace {

struct WindowGrid {
  std::size_t n;
  std::array<double, 2> extent{};
  std::array<double, 2> stdev{};
};

WindowGrid window_grid(int j, double vareps, int dims, std::size_t n, double box_in_std) {
  if (dims != 1 && dims != 2) throw InvalidInput("gaussian window: dims must be 1 or 2");
  if (!is_pow2(n) || n < 8) throw InvalidInput("gaussian window: n must be a power of two >= 8");
  if (!(vareps >= 0.0) || j < 0) throw InvalidInput("gaussian window: need j >= 0, vareps >= 0");
  if (!(box_in_std > 0.0)) throw InvalidInput("gaussian window: box_in_std must be > 0");
  WindowGrid g{n};
  g.stdev = {1.0, std::exp2(-vareps * j)};
  for (int a = 0; a < dims; ++a) g.extent[a] = box_in_std * g.stdev[a];
  const double std_cells = static_cast<double>(n) / box_in_std;
  if (std_cells < 2.0) {
    std::ostringstream os;
    os << "gaussian window: undersampled (std = " << std_cells << " cells < 2)";
    throw InvalidInput(os.str());
  }
  return g;
}

}  // namespace

std::vector<std::complex<double>> gaussian_window_fft(int j, double vareps, int dims, std::size_t n,
                                                      double box_in_std) {
  const WindowGrid g = window_grid(j, vareps, dims, n, box_in_std);
  const double D = dims;
  const double C = std::pow(std::numbers::pi, -D / 4.0);
  const double a = std::exp2(2.0 * vareps * j);
  const double amp = C * std::pow(2.0, vareps * j * (D - 1.0) / 2.0);

  std::array<std::vector<double>, 2> axis_vals;
  for (int ax = 0; ax < dims; ++ax) {
    const double h = g.extent[ax] / static_cast<double>(n);
    const double rate = ax == 0 ? 1.0 : a;
    axis_vals[ax].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = -0.5 * g.extent[ax] + static_cast<double>(i) * h;
      axis_vals[ax][i] = std::exp(-rate * x * x / 2.0);
    }
  }
  const std::size_t total = dims == 1 ? n : n * n;
  std::vector<cplx> samples(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    double v = amp * axis_vals[0][dims == 1 ? idx : idx / n];
    if (dims == 2) v *= axis_vals[1][idx % n];
    samples[idx] = v;
  }
  const std::vector<std::size_t> shape = dims == 1 ? std::vector<std::size_t>{n}
                                                   : std::vector<std::size_t>{n, n};
  const auto X = fft::forward_complex(samples, shape);

  // Continuous transform at k/extent: h * (-1)^k * X_k per axis (grid starts at -extent/2).
  double hvol = g.extent[0] / static_cast<double>(n);
  if (dims == 2) hvol *= g.extent[1] / static_cast<double>(n);
  std::vector<cplx> out(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    // reorder to k in [-n/2, n/2) per axis
    std::size_t src = 0;
    long parity = 0;
    if (dims == 1) {
      const long k = static_cast<long>(idx) - static_cast<long>(n / 2);
      src = static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n));
      parity = k;
    } else {
      const long k0 = static_cast<long>(idx / n) - static_cast<long>(n / 2);
      const long k1 = static_cast<long>(idx % n) - static_cast<long>(n / 2);
      const auto w0 = static_cast<std::size_t>((k0 + static_cast<long>(n)) % static_cast<long>(n));
      const auto w1 = static_cast<std::size_t>((k1 + static_cast<long>(n)) % static_cast<long>(n));
      src = w0 * n + w1;
      parity = k0 + k1;
    }
    const double sign = (parity % 2 == 0) ? 1.0 : -1.0;
    out[idx] = hvol * sign * X[src];
  }
  return out;
}

GaussianCheck gaussian_reference_check(int j, double vareps, int dims, std::size_t n,
                                       double box_in_std) {
  const WindowGrid g = window_grid(j, vareps, dims, n, box_in_std);
  const auto fft_vals = gaussian_window_fft(j, vareps, dims, n, box_in_std);
  const std::size_t total = fft_vals.size();

  GaussianCheck res;
  res.std_cells = static_cast<double>(n) / box_in_std;
  double max_err = 0.0, max_exact = 0.0, moment = 0.0;
  double dxi = 1.0 / g.extent[0];
  if (dims == 2) dxi *= 1.0 / g.extent[1];
  std::vector<double> xi(dims);
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (dims == 1) {
      xi[0] = (static_cast<double>(idx) - static_cast<double>(n / 2)) / g.extent[0];
    } else {
      xi[0] = (static_cast<double>(idx / n) - static_cast<double>(n / 2)) / g.extent[0];
      xi[1] = (static_cast<double>(idx % n) - static_cast<double>(n / 2)) / g.extent[1];
    }
    const cplx exact = gaussian_window_transform(j, vareps, dims, xi);
    max_err = std::max(max_err, std::abs(fft_vals[idx] - exact));
    max_exact = std::max(max_exact, std::abs(exact));
    double mag = 0.0;
    for (double c : xi) mag += c * c;
    moment += std::sqrt(mag) * std::abs(fft_vals[idx]) * dxi;
  }
  res.max_rel_error = max_err / max_exact;
  res.moment = moment;
  return res;
}

double gaussian_moment_slope(const std::vector<int>& js, double vareps, int dims, std::size_t n) {
  if (js.size() < 2) throw InvalidInput("gaussian_moment_slope: need at least two bands");
  std::vector<double> ys;
  for (int j : js) ys.push_back(std::log2(gaussian_reference_check(j, vareps, dims, n).moment));
  const double k = static_cast<double>(js.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    mx += js[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    sxx += (js[i] - mx) * (js[i] - mx);
    sxy += (js[i] - mx) * (ys[i] - my);
  }
  return sxy / sxx;
}

}  // namespace kinreg::lpa

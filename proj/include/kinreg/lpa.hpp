#pragma once

// Littlewood-Paley analysis on periodic grids: a smooth dyadic partition of
// unity, radial Fourier multipliers, dyadic L^r spectra with decay-slope
// fits, truncated Besov quasinorms, a brute-force Gagliardo seminorm and the
// Gaussian window whose transform is known in closed form.
//
// Frequencies are angular: axis a carries the lattice 2 pi k / extent[a],
// and radial symbols are evaluated at the Euclidean norm of that vector.

#include <array>
#include <complex>
#include <functional>
#include <cstddef>
#include <optional>
#include <vector>

#include "kinreg/exec.hpp"

namespace kinreg::lpa {

struct GridFunction {
  int dims = 1;
  std::size_t n = 0;                  ///< samples per axis, power of two
  std::array<double, 2> extent{1.0, 1.0};
  std::vector<double> values;         ///< row-major, axis 0 slowest

  /// Sample point i of axis a: (i + 1/2) * extent[a] / n.
  double coord(int axis, std::size_t i) const {
    return (static_cast<double>(i) + 0.5) * extent[axis] / static_cast<double>(n);
  }
  double cell_volume() const;
  std::size_t size() const { return dims == 1 ? n : n * n; }
  std::vector<std::size_t> shape() const;
  void validate() const;

  static GridFunction zeros(int dims, std::size_t n, std::array<double, 2> extent);
  template <class F>
  static GridFunction sample1d(std::size_t n, double extent, F&& f) {
    GridFunction g = zeros(1, n, {extent, 1.0});
    for (std::size_t i = 0; i < n; ++i) g.values[i] = f(g.coord(0, i));
    return g;
  }
  template <class F>
  static GridFunction sample2d(std::size_t n, std::array<double, 2> extent, F&& f) {
    GridFunction g = zeros(2, n, extent);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) g.values[i * n + k] = f(g.coord(0, i), g.coord(1, k));
    return g;
  }
};

/// Smooth cutoff eta: 1 on [0, 1], 0 on [2, inf), transition built from
/// exp(-steepness / t) splices, so eta is non-increasing.
struct BumpProfile {
  double steepness = 1.0;
  double operator()(double xi) const;
};

class DyadicFilterBank {
 public:
  DyadicFilterBank(int j_max, BumpProfile eta = {});

  int j_max() const { return j_max_; }
  const BumpProfile& eta() const { return eta_; }

  /// phi_0 = eta, phi_j(xi) = eta(2^-j xi) - eta(2^-(j-1) xi).
  double phi(int j, double xi) const;

 private:
  int j_max_;
  BumpProfile eta_;
};

DyadicFilterBank build_filter_bank(int j_max, BumpProfile eta = {});

/// Highest band j with 2^(j+1) at or below the angular Nyquist frequency,
/// log2(pi n / extent) - 1, minimized over axes.
double nyquist_band(const GridFunction& u);

GridFunction apply_band(const GridFunction& u, const DyadicFilterBank& bank, int j);

/// Multiplies the spectrum by an arbitrary radial symbol of |xi|.
GridFunction apply_radial_multiplier(const GridFunction& u,
                                     const std::function<double(double)>& symbol);

/// L^r norm by midpoint quadrature.
double lr_norm(const GridFunction& u, double r);

struct BandWindow {
  int jmin = 1;
  int jmax = 0;
};

struct DyadicSpectrum {
  double r = 2.0;
  std::vector<double> norms;  ///< norms[j], j = 0..j_top
  BandWindow fit_window;
  std::optional<double> beta_hat;  ///< empty when the fit is undefined
  bool saturated = false;
  int bands_fitted = 0;
};

/// Underflow threshold for band norms, relative to the largest band norm.
inline constexpr double kUnderflow = 1e-13;

/// Band norms for j = 0..min(bank.j_max, floor(nyquist_band)); negated
/// least-squares slope of log2 norms on the window.
DyadicSpectrum dyadic_spectrum(const GridFunction& u, const DyadicFilterBank& bank, double r,
                               BandWindow window, Exec exec = Exec::Serial);

struct BesovValue {
  double value = 0.0;
  int truncation_index = 0;  ///< last band included
};

/// (sum_j 2^(j s rho) ||A_j u||_{L^q}^rho)^(1/rho) over Nyquist-safe bands.
BesovValue besov_quasinorm(const GridFunction& u, double s, double q, double rho);

struct GagliardoValue {
  double integral = 0.0;  ///< double Riemann sum, the q-th power of the seminorm
  double seminorm = 0.0;
};

/// Periodic-distance double sum over distinct grid pairs. The serial path is
/// the literal pair loop; the parallel path groups pairs by lattice offset
/// and sums offsets in a fixed order. They agree to rounding.
GagliardoValue gagliardo_seminorm(const GridFunction& u, double s, double q,
                                  Exec exec = Exec::Parallel);

inline constexpr std::size_t kGagliardoCap1d = std::size_t{1} << 12;
inline constexpr std::size_t kGagliardoCap2d = std::size_t{1} << 7;

/// Smooth plateau cutoff: 1 on the central (1 - 2 margin) part of each
/// axis, rising over min(margin, 1 - 2 margin) next to it and 0 outside.
double plateau_cutoff(double t, double margin);
GridFunction window(const GridFunction& u, double margin);

struct GaussianCheck {
  double max_rel_error = 0.0;  ///< max |FFT - exact| / max |exact|
  double moment = 0.0;         ///< lattice L^1 norm of |xi| times the transform
  double std_cells = 0.0;      ///< narrowest Gaussian std in grid cells
};

/// Samples the window C e^{-x0^2/2} 2^{eps j (D-1)/2} prod e^{-2^{2 eps j} x_k^2 / 2}
/// (centered at y = 0, C^2 = pi^{-D/2}) on a box of box_in_std standard
/// deviations per axis, transforms it with the FFT (convention e^{-2 pi i x xi})
/// and compares with the closed form at every lattice frequency.
GaussianCheck gaussian_reference_check(int j, double vareps, int dims, std::size_t n = 128,
                                       double box_in_std = 18.0);

/// FFT-approximated continuous transform of the sampled window on the
/// lattice k / extent, k in [-n/2, n/2) per axis (row-major, axis 0 = x0).
std::vector<std::complex<double>> gaussian_window_fft(int j, double vareps, int dims,
                                                      std::size_t n = 128,
                                                      double box_in_std = 18.0);

/// Closed-form transform of the window at a frequency vector of length dims.
std::complex<double> gaussian_window_transform(int j, double vareps, int dims,
                                               const std::vector<double>& xi,
                                               const std::vector<double>& y = {});

/// Least-squares slope of log2(moment) against j.
double gaussian_moment_slope(const std::vector<int>& js, double vareps, int dims,
                             std::size_t n = 128);

}  // namespace kinreg::lpa

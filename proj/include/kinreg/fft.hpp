#pragma once

// Thin RAII layer over FFTW. Planning is serialized behind a mutex; execution
// runs on private buffers, so concurrent calls on distinct inputs are safe
// and give the same bits as serial calls.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace kinreg::fft {

using cplx = std::complex<double>;

/// Real-to-half-complex forward transform (unnormalized).
/// shape = {n} or {n0, n1}; output has n/2+1 or n0*(n1/2+1) entries.
std::vector<cplx> forward_real(std::span<const double> values, std::span<const std::size_t> shape);

/// Inverse of forward_real, normalized by 1/N.
std::vector<double> inverse_real(std::span<const cplx> spectrum, std::span<const std::size_t> shape);

/// Complex forward transform (unnormalized), sign -1.
std::vector<cplx> forward_complex(std::span<const cplx> values, std::span<const std::size_t> shape);

}  // namespace kinreg::fft

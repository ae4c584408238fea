#include "kinreg/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <numeric>

#include "kinreg/error.hpp"

namespace kinreg::fft {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : p_(p) {
    if (p_ == nullptr) throw NumericalFailure("FFTW planning failed");
  }
  ~Plan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(p_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  void execute() const { fftw_execute(p_); }

 private:
  fftw_plan p_;
};

std::vector<int> dims_of(std::span<const std::size_t> shape) {
  if (shape.empty() || shape.size() > 2) throw InvalidInput("fft: only 1D and 2D shapes supported");
  std::vector<int> d(shape.begin(), shape.end());
  return d;
}

std::size_t half_size(std::span<const std::size_t> shape) {
  std::size_t n = shape.back() / 2 + 1;
  for (std::size_t i = 0; i + 1 < shape.size(); ++i) n *= shape[i];
  return n;
}

std::size_t full_size(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::vector<cplx> forward_real(std::span<const double> values, std::span<const std::size_t> shape) {
  const auto d = dims_of(shape);
  const std::size_t n = full_size(shape);
  const std::size_t nh = half_size(shape);
  if (values.size() != n) throw InvalidInput("fft: value count does not match shape");
  auto in = alloc<double>(n);
  auto out = alloc<fftw_complex>(nh);
  std::unique_ptr<Plan> plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = std::make_unique<Plan>(
        fftw_plan_dft_r2c(static_cast<int>(d.size()), d.data(), in.get(), out.get(), FFTW_ESTIMATE));
  }
  std::copy(values.begin(), values.end(), in.get());
  plan->execute();
  std::vector<cplx> res(nh);
  for (std::size_t i = 0; i < nh; ++i) res[i] = {out[i][0], out[i][1]};
  return res;
}

std::vector<double> inverse_real(std::span<const cplx> spectrum, std::span<const std::size_t> shape) {
  const auto d = dims_of(shape);
  const std::size_t n = full_size(shape);
  const std::size_t nh = half_size(shape);
  if (spectrum.size() != nh) throw InvalidInput("fft: spectrum size does not match shape");
  auto in = alloc<fftw_complex>(nh);
  auto out = alloc<double>(n);
  std::unique_ptr<Plan> plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    // c2r destroys its input; FFTW_ESTIMATE never touches the arrays while planning
    plan = std::make_unique<Plan>(
        fftw_plan_dft_c2r(static_cast<int>(d.size()), d.data(), in.get(), out.get(), FFTW_ESTIMATE));
  }
  for (std::size_t i = 0; i < nh; ++i) {
    in[i][0] = spectrum[i].real();
    in[i][1] = spectrum[i].imag();
  }
  plan->execute();
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) res[i] = out[i] * scale;
  return res;
}

std::vector<cplx> forward_complex(std::span<const cplx> values, std::span<const std::size_t> shape) {
  const auto d = dims_of(shape);
  const std::size_t n = full_size(shape);
  if (values.size() != n) throw InvalidInput("fft: value count does not match shape");
  auto in = alloc<fftw_complex>(n);
  auto out = alloc<fftw_complex>(n);
  std::unique_ptr<Plan> plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = std::make_unique<Plan>(fftw_plan_dft(static_cast<int>(d.size()), d.data(), in.get(),
                                                out.get(), FFTW_FORWARD, FFTW_ESTIMATE));
  }
  for (std::size_t i = 0; i < n; ++i) {
    in[i][0] = values[i].real();
    in[i][1] = values[i].imag();
  }
  plan->execute();
  std::vector<cplx> res(n);
  for (std::size_t i = 0; i < n; ++i) res[i] = {out[i][0], out[i][1]};
  return res;
}

}  // namespace kinreg::fft

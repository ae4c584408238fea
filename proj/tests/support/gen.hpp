#pragma once

// Deterministic generators for the property tests.

#include <cstdint>
#include <random>
#include <vector>

#include "kinreg/exponents.hpp"

namespace kt {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  std::vector<double> vector(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  /// Valid problem parameters; low selects p in (1, 2), otherwise p in [2, 4].
  kinreg::exponents::ProblemParams params(bool low) {
    kinreg::exponents::ProblemParams p;
    p.alpha = uniform(0.05, 1.0);
    p.p = low ? uniform(1.2, 1.95) : uniform(2.0, 4.0);
    p.dim_total = integer(2, 4);
    p.kappa_abs = integer(0, 3);
    return p;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace kt

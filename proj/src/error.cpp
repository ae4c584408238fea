#include "kinreg/error.hpp"

#include <cmath>

namespace kinreg::detail {

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw InvalidInput(std::string("non-finite value for '") + field + "'");
}

}  // namespace kinreg::detail

#pragma once

namespace kinreg {

// Every data-parallel kernel has a plain serial loop kept as the reference
// and an OpenMP variant. Both reduce in a fixed order, so results agree
// bitwise unless a kernel documents otherwise.
enum class Exec { Serial, Parallel };

}  // namespace kinreg

#pragma once

namespace amis {

// Serial runs the reference loops; Parallel runs the OpenMP kernels. Both
// produce bit-identical results.
enum class Execution { Serial, Parallel };

}  // namespace amis

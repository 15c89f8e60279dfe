#pragma once

#include <ostream>

namespace kacsim {

// Closed-form-vs-oracle identity suite: kernel integrals, deflection geometry,
// circle transport, azimuth-average and tail-average cost formulas, circle
// moment identity, exact transport and matching vs exhaustive enumeration, and
// pathwise conservation. Prints one line per check; returns the failure count.
// All inputs come from fixed seeds, so the output is bitwise deterministic.
int run_selftest(std::ostream& out);

}  // namespace kacsim

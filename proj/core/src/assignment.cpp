#include "kacsim/assignment.hpp"

namespace kacsim {

Assignment assign_squared(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.size() != b.size()) throw NumericalError("assign_squared: cloud sizes differ");
  return solve_assignment(a.size(),
                          [&](std::size_t i, std::size_t j) { return dist2(a[i], b[j]); });
}

}  // namespace kacsim

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kacsim/geometry.hpp"
#include "kacsim/rng.hpp"
#include "kacsim/vec3.hpp"

namespace kacsim {

// N-particle ensemble with the conserved quantities recorded at construction.
// Mean momentum and mean energy are exactly conserved by the collision update;
// the ledger makes the drift measurable.
struct Ensemble {
  std::vector<Vec3> v;
  double t = 0.0;
  Vec3 ledger_momentum{};
  double ledger_energy = 0.0;

  std::size_t n() const { return v.size(); }
};

Vec3 mean_momentum(const Ensemble& ens);
double mean_energy(const Ensemble& ens);
// |energy - ledger| / max(ledger, 1); momentum drift is measured in RMS-velocity units
double energy_drift(const Ensemble& ens);
double momentum_drift(const Ensemble& ens);
void check_ledger(const Ensemble& ens, double tol = 1e-9);  // NumericalError past tol

// iid centered Gaussian, per-coordinate variance 1/3 (mean energy 1 in expectation)
Ensemble init_gaussian(std::size_t n, Rng& rng);
// caller-provided velocities, n >= 2
Ensemble init_explicit(std::vector<Vec3> v);
// standardized Gaussian cloud: momentum exactly 0, mean energy exactly 1
Ensemble init_sphere(std::size_t n, Rng& rng);
// iid per-coordinate Student-t with integer dof >= 5, scaled to variance 1/3;
// finite fourth moment but kurtosis above Gaussian, for relaxation experiments
Ensemble init_student(std::size_t n, int dof, Rng& rng);

struct CollisionEvent {
  double t = 0.0;
  std::int32_t i = 0, j = 0;  // ordered distinct pair
  double z = 0.0;             // uniform on [0, cutoff]
  double theta = 0.0;         // = G(z)
  double phi = 0.0;           // uniform on [0, 2pi)
};

// Poisson clock at total rate n * cutoff / 2 with the per-event marks
// (i, j) uniform over ordered distinct pairs, z uniform, phi uniform.
// Per ordered pair and angle this realizes intensity
// beta(theta) 1_{theta >= G(cutoff)} dtheta / (2(n-1)) * dphi / 2pi.
class EventStream {
 public:
  EventStream(std::size_t n, const AngularKernel& kernel, double cutoff, Rng rng);

  double rate() const { return rate_; }
  double cutoff() const { return cutoff_; }

  // next event, or nullopt once the next arrival falls past t_end (the arrival
  // is retained, so later calls with a larger t_end resume exactly)
  std::optional<CollisionEvent> next_before(double t_end);

 private:
  std::size_t n_;
  const AngularKernel* kernel_;
  double cutoff_, rate_, t_;
  Rng rng_;
  std::optional<CollisionEvent> pending_;
};

// applies one collision: velocities i and j are replaced by their post-collisional
// values, everything else (including the ledger) is untouched
void apply_event(Ensemble& ens, const CollisionEvent& ev);

struct RunOptions {
  std::vector<double> observe_at;  // absolute times, strictly increasing
  std::function<void(const Ensemble&)> on_observe;
  std::function<void(const Ensemble&, const CollisionEvent&)> on_event;
  // rescale to the ledger every 100000 events; off by default so that exact
  // conservation stays observable
  bool rescale = false;
};

// advances the ensemble to t_end by applying every stream event in time order
Ensemble run(Ensemble ens, double t_end, EventStream& stream, const RunOptions& opts = {});

// Two copies at cutoffs k1 <= k2 driven by one event stream at the higher rate.
// Events with z > k1 skip the low-cutoff system; shared events re-couple the
// low system's azimuth through varphi so both jumps move along the optimal
// transport between their post-collisional circles.
struct CoupledCutoffsResult {
  Ensemble low, high;
  std::vector<double> obs_t;
  std::vector<double> obs_dist2;  // (1/n) sum_i |low^i - high^i|^2
};
CoupledCutoffsResult run_coupled_cutoffs(const Ensemble& ens0, double k1, double k2, double t_end,
                                         EventStream& stream,
                                         std::vector<double> observe_at = {});

double ensemble_dist2(const Ensemble& a, const Ensemble& b);  // (1/n) sum |a^i - b^i|^2

}  // namespace kacsim

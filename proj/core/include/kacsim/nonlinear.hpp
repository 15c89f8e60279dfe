#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kacsim/geometry.hpp"
#include "kacsim/kac.hpp"
#include "kacsim/rng.hpp"
#include "kacsim/vec3.hpp"

namespace kacsim {

// Reference law f_t for the nonlinear processes, realized as an M-atom ensemble.
// The stationary Gaussian mode redraws iid atoms at every sync (the centered
// Gaussian with per-coordinate variance 1/3 is invariant); the self-consistent
// mode advances its own M-particle collision system to the sync time.
class ReferenceFlow {
 public:
  static ReferenceFlow stationary_gaussian(std::size_t m, Rng rng);
  // aux0 evolves under the given kernel and cutoff, independently of everything
  // else; the kernel must outlive the flow
  static ReferenceFlow self_consistent(Ensemble aux0, const AngularKernel& kernel, double cutoff,
                                       Rng stream_rng);

  void sync(double t);  // advance the clock and refresh the atom list
  const std::vector<Vec3>& atoms() const { return atoms_; }
  double t() const { return t_; }
  bool stationary() const { return mode_ == Mode::kGaussian; }

 private:
  enum class Mode { kGaussian, kSelfConsistent };
  ReferenceFlow() = default;

  Mode mode_ = Mode::kGaussian;
  std::vector<Vec3> atoms_;
  double t_ = 0.0;
  std::size_t m_ = 0;
  Rng rng_{0};
  std::optional<Ensemble> aux_;
  std::optional<EventStream> aux_stream_;
};

// Optimal matching of the non-excluded ensemble coordinates onto an equal-count
// subsample of the reference atoms. With excluded = -1 the full ensemble is
// matched (used as one shared table; its restriction to any excluded index is
// optimal for the matched subset).
struct MatchingTable {
  std::int32_t excluded = -1;
  std::vector<std::int32_t> partner;  // per coordinate: slot into atoms; -1 for excluded
  std::vector<Vec3> atoms;            // matched reference subsample
  double total_cost = 0.0;            // sum of squared distances over matched pairs
  std::uint64_t built_at = 0;         // event counter at build time
};

// reference must hold at least the required count (n-1, or n when excluded = -1);
// a larger reference is subsampled uniformly without replacement
MatchingTable build_matching(const std::vector<Vec3>& u, std::int32_t excluded,
                             const std::vector<Vec3>& reference, Rng& rng,
                             std::uint64_t built_at = 0);

// the reference atom matched to u[j], from a table built for excluded index i
// (or a shared table); over uniform j != i this is a uniform draw from the
// matched subsample
Vec3 pi_sample(const MatchingTable& table, std::int32_t i, std::int32_t j);

struct MatchingPolicy {
  std::uint64_t refresh_every = 1;  // events between rebuilds of any one table
  bool shared_table = false;        // one full-size table serving every excluded index
};
// exact per-index tables rebuilt every event up to n = 256; above that, one
// shared table refreshed every n events
MatchingPolicy default_matching_policy(std::size_t n);

// One event applied to the coupled pair: the first ensemble takes the ordinary
// two-sided collision; each of the two colliding coordinates of the second
// ensemble takes a one-sided collision with its partnersample, gated by
// z <= cutoff_l, at the azimuth transported through varphi from the first
// ensemble's relative velocity.
void coupled_step(Ensemble& v, Ensemble& u, double cutoff_l, const CollisionEvent& ev,
                  const MatchingTable& table_i, const MatchingTable& table_j);

struct CoupledSeries {
  Ensemble v, u;
  std::vector<double> obs_t;
  std::vector<double> obs_dist2;  // (1/n) sum_i |v^i - u^i|^2
};
// stream runs at the first ensemble's cutoff; requires cutoff_l <= stream.cutoff()
CoupledSeries run_coupled(const Ensemble& v0, const Ensemble& u0, double cutoff_l, double t_end,
                          EventStream& stream, ReferenceFlow& flow, Rng table_rng,
                          const MatchingPolicy& policy, std::vector<double> observe_at = {});

// Tagged-copy construction: alongside the n-particle system U (standalone, the
// stream cutoff is its own collision cutoff), for each requested tagged count k
// it evolves k copies that reuse the same reference samples and re-coupled
// azimuths, except that events pairing two tagged coordinates are dropped for
// the secondary side and compensated by an independent auxiliary stream at rate
// cutoff * (k-1) / (2(n-1)) per tagged coordinate. The copies are mutually
// independent nonlinear processes; their distance to U measures decoupling.
struct DecoupledSeries {
  std::vector<int> k_values;
  std::vector<double> obs_t;
  std::vector<std::vector<double>> obs_dist2;  // [family][observation], (1/k) sum over tagged
  std::vector<std::vector<Vec3>> tilde;        // final decoupled copies, one list per family
  Ensemble u;
};
DecoupledSeries run_decoupled(const Ensemble& u0, double t_end, EventStream& stream,
                              const AngularKernel& kernel, ReferenceFlow& flow, Rng table_rng,
                              Rng aux_rng, const std::vector<int>& k_values,
                              const MatchingPolicy& policy, std::vector<double> observe_at = {});

}  // namespace kacsim

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "kacsim/rng.hpp"
#include "kacsim/vec3.hpp"

namespace kacsim {

using PointCloud = std::vector<Vec3>;

// exact solves above this size are refused; approximate transport is a separate,
// explicitly requested path
inline constexpr std::size_t kW2HardCap = 4096;

struct W2Result {
  double w2sq = 0.0;                     // min over matchings of (1/k) sum |a^i - b^{pi(i)}|^2
  std::vector<std::int32_t> match;       // optimal pi
};

// normalized squared 2-Wasserstein distance between equal-size uniform clouds
W2Result w2_exact(const PointCloud& a, const PointCloud& b);
double w2_exact_value(const PointCloud& a, const PointCloud& b);

// clouds of sizes n and m = r*n: the small side is replicated r times, which
// realizes the exact transport between the unequal-size uniform empirical laws
double w2_replicated(const PointCloud& small, const PointCloud& big);

// entropic approximation (Sinkhorn); exploratory only, tolerance governed by reg
double w2_sinkhorn(const PointCloud& a, const PointCloud& b, double reg, int max_iter);

// empirical-measure rate functional: mean squared transport cost between an
// n-sample of the law and an independent m-sample surrogate of the same law
struct EpsEstimate {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
  int m = 0;  // surrogate size; the surrogate bias scales with 1/m
  int reps = 0;
};
EpsEstimate eps_n(const std::function<Vec3(Rng&)>& sampler, int n, int reps, int m, Rng& rng);
int default_surrogate_size(int n);  // 16n, clamped to the hard cap as a multiple of n

// block-decomposition bound: (1/2) E W2^2(empirical(X), mu) against the
// (kn/m, l/m)-weighted block terms, with m = k*n + l and l <= n-1. Both sides are
// Monte-Carlo estimates; the law-level W2 terms on the right are estimated by
// empirical-vs-empirical transport, which upper-bounds them for exchangeable X.
struct BlockBoundReport {
  double lhs = 0.0, lhs_se = 0.0;
  double rhs = 0.0, rhs_se = 0.0;
  int m = 0, n = 0, k = 0, l = 0;
  int surrogate_m = 0;
  bool holds = false;  // lhs <= rhs + 3 combined standard errors
};
BlockBoundReport block_bound_check(const std::function<PointCloud(Rng&)>& x_replica,
                                   const std::function<Vec3(Rng&)>& mu_sampler, int n, int reps,
                                   Rng& rng);

// affine projection onto zero mean and unit mean energy; a degenerate cloud
// (scale 0) is replaced by a fixed antipodal-pair cloud on that sphere
struct StandardizedCloud {
  PointCloud points;
  Vec3 removed_mean;
  double removed_scale = 0.0;
  double cost = 0.0;  // (1/N) sum |X^i - Y^i|^2 = (S-1)^2 + |M|^2 when S > 0
};
StandardizedCloud standardize(const PointCloud& x);
PointCloud degenerate_sphere_cloud(std::size_t n);

// standardized iid Gaussian cloud: exact momentum 0 and mean energy 1
PointCloud sample_boltzmann_sphere(std::size_t n, Rng& rng);

}  // namespace kacsim

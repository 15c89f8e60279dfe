#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kacsim/stats.hpp"

namespace kacsim {

enum class ReferenceMode { kStationaryGaussian, kSelfConsistent };

enum class StartKind { kGaussian, kTwoMass };

// Full description of one replicated experiment; together with the seed it
// determines every result bitwise.
struct RunConfig {
  std::string experiment = "simulate";
  double nu = 0.5;
  std::size_t n = 500;       // particle count for single-N experiments
  double cutoff_k = 20.0;    // particle-system tail cutoff
  double cutoff_l = 20.0;    // nonlinear-process tail cutoff, <= cutoff_k
  double t_end = 1.0;
  std::vector<double> observe_at;
  int replicates = 200;
  ReferenceMode reference = ReferenceMode::kStationaryGaussian;
  StartKind start = StartKind::kGaussian;
  std::uint64_t refresh = 0;  // matching-table refresh period; 0 = size-based default
  std::uint64_t seed = 1;
  int tagged = 10;            // fixed tagged count for the 1/N decoupling sweep
  std::vector<double> sweep;  // abscissae: N, k, or K values depending on the experiment
};

struct SweepPoint {
  double x = 0.0;     // abscissa value
  double mean = 0.0;  // replica mean of the metric
  double se = 0.0;    // plain standard error of the mean
  Interval ci;        // bootstrap 95% interval on the mean (1000 resamples)
  int replicates = 0;
};

struct RateFit {
  std::string abscissa;  // "N", "k", or "1+K"
  std::vector<SweepPoint> points;
  std::vector<std::vector<double>> samples;  // [point][replicate] raw metric values
  bool has_slope = false;  // a log-log fit needs >= 4 strictly positive means
  double slope = 0.0;
  Interval slope_ci;  // bootstrap 95% interval (1000 resamples, joint over points)
};

// E W2^2(empirical particle law at t_end, gaussian equilibrium) over the particle
// counts in cfg.sweep, with the N-slope of its decay. Stationary-gaussian mode only:
// the equilibrium is the exact law at every t, so the metric is a pure chaos gauge.
RateFit chaos_rate(const RunConfig& cfg);

struct UniformTimeReport {
  std::vector<double> obs_t;
  std::vector<double> mean_dist2;  // E W2^2(V_t, gaussian sample) per observation
  std::vector<double> se;
  std::vector<std::vector<double>> samples;  // [replicate][observation]
  LinFit final_half;     // least-squares fit of the replica-mean series, final half
  bool upward_trend = false;  // slope more than 3 standard errors above 0
  double plateau = 0.0;       // mean of the series over the final half
};
// Long-horizon stability of the same metric at fixed N = cfg.n.
UniformTimeReport uniform_in_time(const RunConfig& cfg);

// Mean decoupling distance (1/k) sum |U^m - tilde-U^m|^2 at t_end across the tagged
// counts in cfg.sweep, at fixed N = cfg.n; one shared base run serves every k.
RateFit decoupling_in_k(const RunConfig& cfg);
// Same metric at fixed tagged count cfg.tagged across particle counts in cfg.sweep.
RateFit decoupling_in_n(const RunConfig& cfg);

// E (1/N) sum |V^{i,K} - V^{i,Kref}|^2 at t_end for each K in cfg.sweep, coupled
// through shared events against the reference cutoff cfg.cutoff_k; fitted against
// log(1+K), matching the (1+K)^{1-2/nu} tail envelope.
RateFit cutoff_bias(const RunConfig& cfg);

struct CouplingReport {
  std::vector<double> obs_t;
  std::vector<double> mean_dist2;  // E (1/N) sum |V^i - U^i|^2
  std::vector<double> se;
  std::vector<double> mean_w2_u;  // E W2^2(U ensemble, fresh gaussian sample)
  std::vector<double> se_w2_u;
  std::vector<std::vector<double>> samples;       // [replicate][observation] pair distance
  std::vector<std::vector<double>> samples_w2_u;  // [replicate][observation]
};
// Trajectory coupling distance between the particle system and the attached
// nonlinear ensemble, plus the equilibrium distance of the nonlinear ensemble.
CouplingReport coupling_distance(const RunConfig& cfg);

}  // namespace kacsim

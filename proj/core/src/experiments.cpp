#include "kacsim/experiments.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kacsim/errors.hpp"
#include "kacsim/geometry.hpp"
#include "kacsim/kac.hpp"
#include "kacsim/nonlinear.hpp"
#include "kacsim/rng.hpp"
#include "kacsim/stats.hpp"
#include "kacsim/vec3.hpp"
#include "kacsim/wasserstein.hpp"

namespace kacsim {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::size_t require_count(double x, const std::string& what) {
  const double r = std::round(x);
  require(std::abs(x - r) < 1e-9 && r >= 2.0, what + ": needs an integer >= 2");
  require(r <= static_cast<double>(kW2HardCap), what + ": exceeds the exact-transport cap");
  return static_cast<std::size_t>(r);
}

std::vector<Vec3> gaussian_cloud(std::size_t n, Rng& rng) {
  std::vector<Vec3> out(n);
  const double sigma = 1.0 / std::sqrt(3.0);
  for (auto& p : out) p = rng.gauss3(sigma);
  return out;
}

Ensemble make_start(StartKind kind, std::size_t n, Rng& rng) {
  if (kind == StartKind::kGaussian) return init_gaussian(n, rng);
  require(n % 2 == 0, "two-mass start: needs an even particle count");
  std::vector<Vec3> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = Vec3{i % 2 == 0 ? 1.0 : -1.0, 0.0, 0.0};
  return init_explicit(std::move(v));
}

MatchingPolicy policy_from(const RunConfig& cfg, std::size_t n) {
  if (cfg.refresh == 0) return default_matching_policy(n);
  return MatchingPolicy{cfg.refresh, n > 256};
}

ReferenceFlow make_flow(const RunConfig& cfg, std::size_t n, const AngularKernel& kernel,
                        std::uint64_t run_seed, std::uint64_t replica) {
  Rng ref = make_stream(run_seed, replica, StreamRole::kReference);
  if (cfg.reference == ReferenceMode::kStationaryGaussian)
    return ReferenceFlow::stationary_gaussian(n, ref);
  Ensemble aux0 = init_gaussian(n, ref);
  return ReferenceFlow::self_consistent(std::move(aux0), kernel, cfg.cutoff_l, ref.split(1));
}

// Per-point summaries plus a log-log slope over the strictly positive means.
// All points must carry the same replicate count; the slope CI resamples
// replicate indices jointly across points so per-replica noise cancels in the
// fit rather than inflating it.
RateFit fit_rate(std::string abscissa, const std::vector<double>& xs,
                 const std::vector<std::vector<double>>& samples, std::uint64_t seed,
                 double (*xmap)(double)) {
  RateFit fit;
  fit.abscissa = std::move(abscissa);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& s = samples[i];
    SweepPoint pt;
    pt.x = xs[i];
    pt.mean = mean(s);
    pt.se = stderr_of_mean(s);
    pt.replicates = static_cast<int>(s.size());
    Rng boot = make_stream(seed_child(seed, i), 0, StreamRole::kBootstrap);
    pt.ci = bootstrap_percentile(s.size(), 1000, 0.05, boot,
                                 [&](const std::vector<std::size_t>& idx) {
                                   double acc = 0.0;
                                   for (std::size_t j : idx) acc += s[j];
                                   return acc / static_cast<double>(idx.size());
                                 });
    fit.points.push_back(pt);
  }
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < fit.points.size(); ++i)
    if (fit.points[i].mean > 0.0) pos.push_back(i);
  if (pos.size() < 4) return fit;
  for (std::size_t i : pos)
    if (samples[i].size() != samples[pos[0]].size()) return fit;
  std::vector<double> lx;
  for (std::size_t i : pos) lx.push_back(xmap(xs[i]));
  const auto slope_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> ly;
    for (std::size_t i : pos) {
      double acc = 0.0;
      for (std::size_t j : idx) acc += samples[i][j];
      ly.push_back(std::log(std::max(acc / static_cast<double>(idx.size()), 1e-300)));
    }
    return linfit(lx, ly).slope;
  };
  std::vector<double> ly;
  for (std::size_t i : pos) ly.push_back(std::log(fit.points[i].mean));
  fit.has_slope = true;
  fit.slope = linfit(lx, ly).slope;
  Rng boot = make_stream(seed_child(seed, 0x510BE), 0, StreamRole::kBootstrap);
  fit.slope_ci = bootstrap_percentile(samples[pos[0]].size(), 1000, 0.05, boot, slope_of);
  return fit;
}

RateFit finish_fit(std::string abscissa, std::vector<double> xs,
                   std::vector<std::vector<double>> samples, std::uint64_t seed,
                   double (*xmap)(double)) {
  RateFit fit = fit_rate(std::move(abscissa), xs, samples, seed, xmap);
  fit.samples = std::move(samples);
  return fit;
}

double log_map(double x) { return std::log(x); }
double log1p_map(double x) { return std::log1p(x); }

void require_common(const RunConfig& cfg) {
  require(cfg.replicates >= 2, "experiment: needs at least 2 replicates");
  require(!cfg.sweep.empty(), "experiment: empty sweep");
}

}  // namespace

RateFit chaos_rate(const RunConfig& cfg) {
  require_common(cfg);
  const AngularKernel kernel(cfg.nu);
  std::vector<double> xs;
  std::vector<std::vector<double>> samples;
  for (std::size_t si = 0; si < cfg.sweep.size(); ++si) {
    const std::size_t n = require_count(cfg.sweep[si], "chaos_rate sweep");
    const std::uint64_t run_seed = seed_child(cfg.seed, si);
    std::vector<double> reps;
    for (int r = 0; r < cfg.replicates; ++r) {
      Rng init = make_stream(run_seed, r, StreamRole::kInit);
      Ensemble ens = make_start(cfg.start, n, init);
      EventStream stream(n, kernel, cfg.cutoff_k, make_stream(run_seed, r, StreamRole::kEvents));
      ens = run(std::move(ens), cfg.t_end, stream);
      Rng sur = make_stream(run_seed, r, StreamRole::kSurrogate);
      reps.push_back(w2_exact(ens.v, gaussian_cloud(n, sur)).w2sq);
    }
    xs.push_back(static_cast<double>(n));
    samples.push_back(std::move(reps));
  }
  return finish_fit("N", std::move(xs), std::move(samples), cfg.seed, log_map);
}

UniformTimeReport uniform_in_time(const RunConfig& cfg) {
  require(cfg.replicates >= 2, "uniform_in_time: needs at least 2 replicates");
  require(!cfg.observe_at.empty(), "uniform_in_time: empty observation grid");
  const std::size_t n = require_count(static_cast<double>(cfg.n), "uniform_in_time n");
  const AngularKernel kernel(cfg.nu);
  const std::vector<double>& obs = cfg.observe_at;
  UniformTimeReport rep;
  rep.obs_t = obs;
  for (int r = 0; r < cfg.replicates; ++r) {
    Rng init = make_stream(cfg.seed, r, StreamRole::kInit);
    Ensemble ens = make_start(cfg.start, n, init);
    EventStream stream(n, kernel, cfg.cutoff_k, make_stream(cfg.seed, r, StreamRole::kEvents));
    Rng sur = make_stream(cfg.seed, r, StreamRole::kSurrogate);
    std::vector<double> row;
    RunOptions opts;
    opts.observe_at = obs;
    opts.on_observe = [&](const Ensemble& state) {
      row.push_back(w2_exact(state.v, gaussian_cloud(n, sur)).w2sq);
    };
    run(std::move(ens), obs.back(), stream, opts);
    rep.samples.push_back(std::move(row));
  }
  for (std::size_t l = 0; l < obs.size(); ++l) {
    std::vector<double> col;
    for (const auto& row : rep.samples) col.push_back(row[l]);
    rep.mean_dist2.push_back(mean(col));
    rep.se.push_back(stderr_of_mean(col));
  }
  const double mid = 0.5 * (obs.front() + obs.back());
  std::vector<double> tx, ty;
  for (std::size_t l = 0; l < obs.size(); ++l)
    if (obs[l] >= mid) {
      tx.push_back(obs[l]);
      ty.push_back(rep.mean_dist2[l]);
    }
  require(tx.size() >= 3, "uniform_in_time: final half holds fewer than 3 observations");
  rep.final_half = linfit(tx, ty);
  rep.upward_trend = rep.final_half.slope > 3.0 * rep.final_half.slope_se;
  rep.plateau = mean(ty);
  return rep;
}

RateFit decoupling_in_k(const RunConfig& cfg) {
  require_common(cfg);
  const std::size_t n = require_count(static_cast<double>(cfg.n), "decoupling_in_k n");
  const AngularKernel kernel(cfg.nu);
  const MatchingPolicy policy = policy_from(cfg, n);
  std::vector<int> ks;
  for (double x : cfg.sweep) {
    const double r = std::round(x);
    require(std::abs(x - r) < 1e-9 && r >= 1.0 && r <= static_cast<double>(n),
            "decoupling_in_k sweep: tagged counts must be integers in [1, n]");
    ks.push_back(static_cast<int>(r));
  }
  const std::uint64_t run_seed = seed_child(cfg.seed, 0);
  std::vector<std::vector<double>> samples(ks.size());
  for (int r = 0; r < cfg.replicates; ++r) {
    Rng init = make_stream(run_seed, r, StreamRole::kInit);
    Ensemble u0 = init_gaussian(n, init);
    EventStream stream(n, kernel, cfg.cutoff_l, make_stream(run_seed, r, StreamRole::kEvents));
    ReferenceFlow flow = make_flow(cfg, n, kernel, run_seed, r);
    auto res = run_decoupled(u0, cfg.t_end, stream, kernel, flow,
                             make_stream(run_seed, r, StreamRole::kMatching),
                             make_stream(run_seed, r, StreamRole::kAux), ks, policy, {cfg.t_end});
    for (std::size_t si = 0; si < ks.size(); ++si) samples[si].push_back(res.obs_dist2[si][0]);
  }
  std::vector<double> xs(ks.begin(), ks.end());
  return finish_fit("k", std::move(xs), std::move(samples), cfg.seed, log_map);
}

RateFit decoupling_in_n(const RunConfig& cfg) {
  require_common(cfg);
  require(cfg.tagged >= 1, "decoupling_in_n: needs tagged >= 1");
  const AngularKernel kernel(cfg.nu);
  const std::vector<int> ks = {cfg.tagged};
  std::vector<double> xs;
  std::vector<std::vector<double>> samples;
  for (std::size_t si = 0; si < cfg.sweep.size(); ++si) {
    const std::size_t n = require_count(cfg.sweep[si], "decoupling_in_n sweep");
    require(static_cast<std::size_t>(cfg.tagged) <= n, "decoupling_in_n: tagged exceeds n");
    const MatchingPolicy policy = policy_from(cfg, n);
    const std::uint64_t run_seed = seed_child(cfg.seed, si);
    std::vector<double> reps;
    for (int r = 0; r < cfg.replicates; ++r) {
      Rng init = make_stream(run_seed, r, StreamRole::kInit);
      Ensemble u0 = init_gaussian(n, init);
      EventStream stream(n, kernel, cfg.cutoff_l, make_stream(run_seed, r, StreamRole::kEvents));
      ReferenceFlow flow = make_flow(cfg, n, kernel, run_seed, r);
      auto res = run_decoupled(u0, cfg.t_end, stream, kernel, flow,
                               make_stream(run_seed, r, StreamRole::kMatching),
                               make_stream(run_seed, r, StreamRole::kAux), ks, policy,
                               {cfg.t_end});
      reps.push_back(res.obs_dist2[0][0]);
    }
    xs.push_back(static_cast<double>(n));
    samples.push_back(std::move(reps));
  }
  return finish_fit("N", std::move(xs), std::move(samples), cfg.seed, log_map);
}

RateFit cutoff_bias(const RunConfig& cfg) {
  require_common(cfg);
  const std::size_t n = require_count(static_cast<double>(cfg.n), "cutoff_bias n");
  const AngularKernel kernel(cfg.nu);
  for (double k : cfg.sweep)
    require(k > 0.0 && k <= cfg.cutoff_k, "cutoff_bias sweep: cutoffs must lie in (0, K]");
  std::vector<double> xs;
  std::vector<std::vector<double>> samples;
  for (std::size_t si = 0; si < cfg.sweep.size(); ++si) {
    const std::uint64_t run_seed = seed_child(cfg.seed, si);
    std::vector<double> reps;
    for (int r = 0; r < cfg.replicates; ++r) {
      Rng init = make_stream(run_seed, r, StreamRole::kInit);
      Ensemble ens = make_start(cfg.start, n, init);
      EventStream stream(n, kernel, cfg.cutoff_k, make_stream(run_seed, r, StreamRole::kEvents));
      auto res = run_coupled_cutoffs(ens, cfg.sweep[si], cfg.cutoff_k, cfg.t_end, stream,
                                     {cfg.t_end});
      reps.push_back(res.obs_dist2[0]);
    }
    xs.push_back(cfg.sweep[si]);
    samples.push_back(std::move(reps));
  }
  return finish_fit("1+K", std::move(xs), std::move(samples), cfg.seed, log1p_map);
}

CouplingReport coupling_distance(const RunConfig& cfg) {
  require(cfg.replicates >= 2, "coupling_distance: needs at least 2 replicates");
  require(!cfg.observe_at.empty(), "coupling_distance: empty observation grid");
  const std::size_t n = require_count(static_cast<double>(cfg.n), "coupling_distance n");
  const AngularKernel kernel(cfg.nu);
  const MatchingPolicy policy = policy_from(cfg, n);
  const std::vector<double>& obs = cfg.observe_at;
  CouplingReport rep;
  rep.obs_t = obs;
  for (int r = 0; r < cfg.replicates; ++r) {
    Rng init = make_stream(cfg.seed, r, StreamRole::kInit);
    Ensemble v = make_start(cfg.start, n, init);
    Ensemble u = v;
    EventStream stream(n, kernel, cfg.cutoff_k, make_stream(cfg.seed, r, StreamRole::kEvents));
    ReferenceFlow flow = make_flow(cfg, n, kernel, cfg.seed, r);
    Rng table = make_stream(cfg.seed, r, StreamRole::kMatching);
    Rng sur = make_stream(cfg.seed, r, StreamRole::kSurrogate);
    std::vector<double> row_d, row_w;
    // segment-wise coupling so the second ensemble is available at each cut;
    // tables rebuild at segment starts, which matches the refresh policy up to
    // counter phase
    for (std::size_t l = 0; l < obs.size(); ++l) {
      auto res = run_coupled(v, u, cfg.cutoff_l, obs[l], stream, flow, table.split(l), policy);
      v = std::move(res.v);
      u = std::move(res.u);
      row_d.push_back(ensemble_dist2(v, u));
      row_w.push_back(w2_exact(u.v, gaussian_cloud(n, sur)).w2sq);
    }
    rep.samples.push_back(std::move(row_d));
    rep.samples_w2_u.push_back(std::move(row_w));
  }
  for (std::size_t l = 0; l < obs.size(); ++l) {
    std::vector<double> col_d, col_w;
    for (int r = 0; r < cfg.replicates; ++r) {
      col_d.push_back(rep.samples[r][l]);
      col_w.push_back(rep.samples_w2_u[r][l]);
    }
    rep.mean_dist2.push_back(mean(col_d));
    rep.se.push_back(stderr_of_mean(col_d));
    rep.mean_w2_u.push_back(mean(col_w));
    rep.se_w2_u.push_back(stderr_of_mean(col_w));
  }
  return rep;
}

}  // namespace kacsim

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "kacsim/config.hpp"
#include "kacsim/errors.hpp"
#include "kacsim/experiments.hpp"
#include "kacsim/geometry.hpp"
#include "kacsim/kac.hpp"
#include "kacsim/moments.hpp"
#include "kacsim/rng.hpp"
#include "kacsim/selftest.hpp"
#include "kacsim/vec3.hpp"
#include "kacsim/wasserstein.hpp"

namespace {

using namespace kacsim;
using nlohmann::json;

std::string shortest(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

struct CommonFlags {
  std::string config, out;
  double nu = 0.5, cutoff_k = 20.0, cutoff_l = 20.0, t_end = 1.0;
  std::uint64_t n = 500, refresh = 0, seed = 1;
  int replicates = 200, tagged = 10;
  std::string reference, start;
  std::vector<double> sweep, observe;
  CLI::Option *o_nu = nullptr, *o_n = nullptr, *o_k = nullptr, *o_l = nullptr, *o_t = nullptr,
              *o_reps = nullptr, *o_ref = nullptr, *o_start = nullptr, *o_refresh = nullptr,
              *o_seed = nullptr, *o_tagged = nullptr, *o_sweep = nullptr, *o_obs = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "config file, flat key=value");
  cmd->add_option("--out", f.out, "output directory (default $KACSIM_OUT or .)");
  f.o_nu = cmd->add_option("--nu", f.nu, "angular kernel exponent, in (0,1)");
  f.o_n = cmd->add_option("--N", f.n, "particle count");
  f.o_k = cmd->add_option("--K", f.cutoff_k, "particle-system tail cutoff");
  f.o_l = cmd->add_option("--L", f.cutoff_l, "nonlinear-process tail cutoff");
  f.o_t = cmd->add_option("--t-end", f.t_end, "end time");
  f.o_reps = cmd->add_option("--replicates", f.replicates, "independent replicates");
  f.o_ref = cmd->add_option("--reference", f.reference,
                            "reference flow: stationary-gaussian or self-consistent");
  f.o_start = cmd->add_option("--start", f.start, "initial law: gaussian or two-mass");
  f.o_refresh = cmd->add_option("--refresh", f.refresh,
                                "matching refresh period (0 = size-based default)");
  f.o_seed = cmd->add_option("--seed", f.seed, "master seed");
  f.o_tagged = cmd->add_option("--tagged", f.tagged, "tagged count for the decoupling n-sweep");
  f.o_sweep = cmd->add_option("--sweep", f.sweep, "sweep abscissae")->delimiter(',');
  f.o_obs = cmd->add_option("--observe-at", f.observe, "observation times")->delimiter(',');
}

RunConfig resolve(const CommonFlags& f, const std::string& experiment) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  cfg.experiment = experiment;
  if (f.o_nu->count()) cfg.nu = f.nu;
  if (f.o_n->count()) cfg.n = f.n;
  if (f.o_k->count()) cfg.cutoff_k = f.cutoff_k;
  if (f.o_l->count()) cfg.cutoff_l = f.cutoff_l;
  if (f.o_t->count()) cfg.t_end = f.t_end;
  if (f.o_reps->count()) cfg.replicates = f.replicates;
  if (f.o_ref->count()) cfg.reference = reference_mode_from(f.reference);
  if (f.o_start->count()) cfg.start = start_kind_from(f.start);
  if (f.o_refresh->count()) cfg.refresh = f.refresh;
  if (f.o_seed->count()) cfg.seed = f.seed;
  if (f.o_tagged->count()) cfg.tagged = f.tagged;
  if (f.o_sweep->count()) cfg.sweep = f.sweep;
  if (f.o_obs->count()) cfg.observe_at = f.observe;
  config_hash(cfg);  // validates
  return cfg;
}

std::string out_dir(const CommonFlags& f) {
  const std::string dir = f.out.empty() ? default_out_dir() : f.out;
  std::filesystem::create_directories(dir);
  return dir;
}

MetricsRecord base_row(const RunConfig& cfg, const std::string& hash) {
  MetricsRecord r;
  r.run_id = hash;
  r.experiment = cfg.experiment;
  r.nu = cfg.nu;
  r.n = cfg.n;
  r.cutoff_k = cfg.cutoff_k;
  r.cutoff_l = cfg.cutoff_l;
  r.t = cfg.t_end;
  r.seed = cfg.seed;
  return r;
}

json point_json(const SweepPoint& pt) {
  return json{{"x", pt.x},           {"mean", pt.mean},       {"se", pt.se},
              {"ci_lo", pt.ci.lo},   {"ci_hi", pt.ci.hi},     {"replicates", pt.replicates}};
}

json fit_json(const RateFit& fit) {
  json points = json::array();
  for (const auto& pt : fit.points) points.push_back(point_json(pt));
  json out{{"abscissa", fit.abscissa}, {"points", points}, {"has_slope", fit.has_slope}};
  if (fit.has_slope) {
    out["slope"] = fit.slope;
    out["slope_ci_lo"] = fit.slope_ci.lo;
    out["slope_ci_hi"] = fit.slope_ci.hi;
  }
  return out;
}

void write_summary(const json& summary, const std::string& dir) {
  write_atomic(dir + "/summary.json", summary.dump(2) + "\n");
}

int cmd_simulate(const CommonFlags& f) {
  RunConfig cfg = resolve(f, "simulate");
  const std::string hash = config_hash(cfg);
  const std::string dir = out_dir(f);
  const AngularKernel kernel(cfg.nu);
  Rng init = make_stream(cfg.seed, 0, StreamRole::kInit);
  Ensemble ens = init_gaussian(cfg.n, init);
  EventStream stream(cfg.n, kernel, cfg.cutoff_k, make_stream(cfg.seed, 0, StreamRole::kEvents));
  std::vector<double> obs = cfg.observe_at;
  if (obs.empty() && cfg.t_end > 0.0) obs.push_back(cfg.t_end);
  std::vector<MetricsRecord> rows;
  RunOptions opts;
  opts.observe_at = obs;
  opts.on_observe = [&](const Ensemble& state) {
    MetricsRecord r = base_row(cfg, hash);
    r.replicate = 0;
    r.t = state.t;
    const Vec3 p = mean_momentum(state);
    double m4 = 0.0;
    for (const auto& vel : state.v) m4 += norm2(vel) * norm2(vel);
    m4 /= static_cast<double>(state.n());
    const std::pair<const char*, double> metrics[] = {
        {"mean_energy", mean_energy(state)}, {"momentum_x", p.x}, {"momentum_y", p.y},
        {"momentum_z", p.z},                 {"m4", m4},
    };
    for (const auto& [name, value] : metrics) {
      r.metric_name = name;
      r.value = value;
      rows.push_back(r);
    }
  };
  ens = run(std::move(ens), cfg.t_end, stream, opts);
  save_metrics_csv(rows, dir + "/metrics.csv");
  save_snapshot_csv(ens.v, ens.t, cfg.seed, cfg.cutoff_k, cfg.nu, dir + "/snapshot.csv");
  std::cout << "simulate: " << cfg.n << " particles to t=" << shortest(ens.t) << ", "
            << rows.size() << " metric rows -> " << dir << "\n";
  return 0;
}

void sweep_rows(const RunConfig& cfg, const std::string& hash, const RateFit& fit,
                const char* metric, bool x_is_n, bool x_is_tagged,
                std::vector<MetricsRecord>& rows) {
  for (std::size_t p = 0; p < fit.points.size(); ++p) {
    MetricsRecord r = base_row(cfg, hash);
    if (x_is_n) r.n = static_cast<std::uint64_t>(fit.points[p].x);
    if (x_is_tagged) r.tagged = static_cast<std::int64_t>(fit.points[p].x);
    if (cfg.experiment == "decoupling-n") r.tagged = cfg.tagged;
    if (cfg.experiment == "cutoff-bias") r.cutoff_l = fit.points[p].x;
    for (std::size_t rep = 0; rep < fit.samples[p].size(); ++rep) {
      r.replicate = static_cast<std::int64_t>(rep);
      r.metric_name = metric;
      r.value = fit.samples[p][rep];
      r.se = 0.0;
      rows.push_back(r);
    }
    r.replicate = -1;
    r.metric_name = std::string(metric) + "_mean";
    r.value = fit.points[p].mean;
    r.se = fit.points[p].se;
    rows.push_back(r);
  }
}

int cmd_rate_fit(const CommonFlags& f, const std::string& experiment) {
  RunConfig cfg = resolve(f, experiment);
  const std::string hash = config_hash(cfg);
  const std::string dir = out_dir(f);
  RateFit fit;
  const char* metric = "w2sq";
  bool x_is_n = false, x_is_tagged = false;
  if (experiment == "chaos-rate") {
    fit = chaos_rate(cfg);
    x_is_n = true;
  } else if (experiment == "decoupling-k") {
    fit = decoupling_in_k(cfg);
    metric = "decouple_dist2";
    x_is_tagged = true;
  } else if (experiment == "decoupling-n") {
    fit = decoupling_in_n(cfg);
    metric = "decouple_dist2";
    x_is_n = true;
  } else {
    fit = cutoff_bias(cfg);
    metric = "cutoff_gap2";
  }
  std::vector<MetricsRecord> rows;
  sweep_rows(cfg, hash, fit, metric, x_is_n, x_is_tagged, rows);
  if (experiment == "chaos-rate")
    for (auto& r : rows) r.surrogate_m = static_cast<std::int64_t>(r.n);
  save_metrics_csv(rows, dir + "/metrics.csv");
  json summary = fit_json(fit);
  summary["experiment"] = experiment;
  summary["config_hash"] = hash;
  summary["seed"] = cfg.seed;
  write_summary(summary, dir);
  std::cout << experiment << ": " << fit.points.size() << " sweep points";
  if (fit.has_slope)
    std::cout << ", slope " << shortest(fit.slope) << " [" << shortest(fit.slope_ci.lo) << ", "
              << shortest(fit.slope_ci.hi) << "]";
  std::cout << " -> " << dir << "\n";
  return 0;
}

int cmd_uniform_time(const CommonFlags& f) {
  RunConfig cfg = resolve(f, "uniform-time");
  const std::string hash = config_hash(cfg);
  const std::string dir = out_dir(f);
  const UniformTimeReport rep = uniform_in_time(cfg);
  std::vector<MetricsRecord> rows;
  for (std::size_t r = 0; r < rep.samples.size(); ++r)
    for (std::size_t l = 0; l < rep.obs_t.size(); ++l) {
      MetricsRecord row = base_row(cfg, hash);
      row.replicate = static_cast<std::int64_t>(r);
      row.t = rep.obs_t[l];
      row.metric_name = "w2sq";
      row.value = rep.samples[r][l];
      row.surrogate_m = static_cast<std::int64_t>(cfg.n);
      rows.push_back(row);
    }
  for (std::size_t l = 0; l < rep.obs_t.size(); ++l) {
    MetricsRecord row = base_row(cfg, hash);
    row.t = rep.obs_t[l];
    row.metric_name = "w2sq_mean";
    row.value = rep.mean_dist2[l];
    row.se = rep.se[l];
    row.surrogate_m = static_cast<std::int64_t>(cfg.n);
    rows.push_back(row);
  }
  save_metrics_csv(rows, dir + "/metrics.csv");
  json summary{{"experiment", "uniform-time"},
               {"config_hash", hash},
               {"seed", cfg.seed},
               {"final_half_slope", rep.final_half.slope},
               {"final_half_slope_se", rep.final_half.slope_se},
               {"upward_trend", rep.upward_trend},
               {"plateau", rep.plateau}};
  write_summary(summary, dir);
  std::cout << "uniform-time: " << rep.obs_t.size() << " observations, plateau "
            << shortest(rep.plateau) << (rep.upward_trend ? ", UPWARD TREND" : ", no upward trend")
            << " -> " << dir << "\n";
  return 0;
}

int cmd_coupling(const CommonFlags& f) {
  RunConfig cfg = resolve(f, "coupling");
  const std::string hash = config_hash(cfg);
  const std::string dir = out_dir(f);
  const CouplingReport rep = coupling_distance(cfg);
  std::vector<MetricsRecord> rows;
  for (std::size_t r = 0; r < rep.samples.size(); ++r)
    for (std::size_t l = 0; l < rep.obs_t.size(); ++l) {
      MetricsRecord row = base_row(cfg, hash);
      row.replicate = static_cast<std::int64_t>(r);
      row.t = rep.obs_t[l];
      row.metric_name = "pair_dist2";
      row.value = rep.samples[r][l];
      rows.push_back(row);
      row.metric_name = "w2sq_u";
      row.value = rep.samples_w2_u[r][l];
      row.surrogate_m = static_cast<std::int64_t>(cfg.n);
      rows.push_back(row);
      row.surrogate_m = -1;
    }
  for (std::size_t l = 0; l < rep.obs_t.size(); ++l) {
    MetricsRecord row = base_row(cfg, hash);
    row.t = rep.obs_t[l];
    row.metric_name = "pair_dist2_mean";
    row.value = rep.mean_dist2[l];
    row.se = rep.se[l];
    rows.push_back(row);
    row.metric_name = "w2sq_u_mean";
    row.value = rep.mean_w2_u[l];
    row.se = rep.se_w2_u[l];
    row.surrogate_m = static_cast<std::int64_t>(cfg.n);
    rows.push_back(row);
  }
  save_metrics_csv(rows, dir + "/metrics.csv");
  json series = json::array();
  for (std::size_t l = 0; l < rep.obs_t.size(); ++l)
    series.push_back(json{{"t", rep.obs_t[l]},
                          {"pair_dist2", rep.mean_dist2[l]},
                          {"se", rep.se[l]},
                          {"w2sq_u", rep.mean_w2_u[l]},
                          {"w2sq_u_se", rep.se_w2_u[l]}});
  json summary{
      {"experiment", "coupling"}, {"config_hash", hash}, {"seed", cfg.seed}, {"series", series}};
  write_summary(summary, dir);
  std::cout << "coupling: " << rep.obs_t.size() << " observations, final pair distance "
            << shortest(rep.mean_dist2.back()) << " -> " << dir << "\n";
  return 0;
}

int cmd_povzner(const CommonFlags& f, int p, int pairs) {
  RunConfig cfg = resolve(f, "simulate");
  const std::string hash = config_hash(cfg);
  const std::string dir = out_dir(f);
  const AngularKernel kernel(cfg.nu);
  const PovznerConstants pc = povzner_constants(p, kernel);
  Rng rng(seed_child(cfg.seed, 0xB0BB));
  double worst = 0.0;
  for (int trial = 0; trial < pairs; ++trial) {
    const double scale = std::exp(rng.uniform(-1.0, 1.5));
    const Vec3 v = rng.gauss3(scale), vs = rng.gauss3(scale);
    if (norm2(v - vs) == 0.0) continue;
    const PovznerReport rep = povzner_inequality_probe(v, vs, p, kernel);
    worst = std::max(worst, rep.required_tilde);
  }
  std::vector<MetricsRecord> rows;
  MetricsRecord row = base_row(cfg, hash);
  row.metric_name = "a_p";
  row.value = pc.a_p;
  rows.push_back(row);
  row.metric_name = "i_theta2";
  row.value = pc.i_theta2;
  rows.push_back(row);
  row.metric_name = "worst_required_tilde";
  row.value = worst;
  rows.push_back(row);
  save_metrics_csv(rows, dir + "/metrics.csv");
  std::cout << "povzner p=" << p << ": a_p=" << shortest(pc.a_p)
            << " i_theta2=" << shortest(pc.i_theta2) << " worst_required_tilde=" << shortest(worst)
            << " over " << pairs << " pairs -> " << dir << "\n";
  return 0;
}

int cmd_w2(const std::string& path_a, const std::string& path_b, bool print_permutation,
           bool approx, double reg, int max_iter) {
  const std::vector<Vec3> a = load_cloud_csv(path_a);
  const std::vector<Vec3> b = load_cloud_csv(path_b);
  if (approx) {
    std::cout << shortest(w2_sinkhorn(a, b, reg, max_iter)) << "\n";
    return 0;
  }
  if (a.size() == b.size()) {
    const W2Result res = w2_exact(a, b);
    std::cout << shortest(res.w2sq) << "\n";
    if (print_permutation) {
      for (std::size_t i = 0; i < res.match.size(); ++i)
        std::cout << i << " -> " << res.match[i] << "\n";
    }
    return 0;
  }
  const bool a_small = a.size() < b.size();
  const auto& small = a_small ? a : b;
  const auto& big = a_small ? b : a;
  if (big.size() % small.size() != 0)
    throw ConfigError("w2: unequal sizes must be integer multiples (got " +
                      std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
  std::cout << shortest(w2_replicated(small, big)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-driven collision simulator and transport metrology toolkit"};
  app.require_subcommand(1);

  CommonFlags f_sim, f_chaos, f_uni, f_dec, f_cut, f_coup, f_pov;
  auto* sim = app.add_subcommand("simulate", "run one particle system and record moments");
  add_common(sim, f_sim);
  auto* chaos = app.add_subcommand("chaos-rate", "w2 decay against particle count");
  add_common(chaos, f_chaos);
  auto* uni = app.add_subcommand("uniform-time", "long-horizon stability of the w2 gauge");
  add_common(uni, f_uni);
  auto* dec = app.add_subcommand("decoupling", "tagged-copy decoupling distance sweep");
  add_common(dec, f_dec);
  std::string dec_in = "k";
  dec->add_option("--in", dec_in, "sweep variable: k or n")
      ->check(CLI::IsMember({"k", "n"}));
  auto* cut = app.add_subcommand("cutoff-bias", "coupled distance between two tail cutoffs");
  add_common(cut, f_cut);
  auto* coup = app.add_subcommand("coupling", "particle-system vs nonlinear-ensemble distance");
  add_common(coup, f_coup);
  auto* pov = app.add_subcommand("povzner", "moment-inequality constants and probe");
  add_common(pov, f_pov);
  int pov_p = 4, pov_pairs = 100;
  pov->add_option("--p", pov_p, "moment order (even, >= 2)");
  pov->add_option("--pairs", pov_pairs, "random probe pairs");

  auto* w2cmd = app.add_subcommand("w2", "exact transport distance between two point clouds");
  std::string w2_a, w2_b;
  bool w2_perm = false, w2_approx = false;
  double w2_reg = 0.05;
  int w2_iter = 2000;
  w2cmd->add_option("file_a", w2_a, "csv cloud")->required();
  w2cmd->add_option("file_b", w2_b, "csv cloud")->required();
  w2cmd->add_flag("--print-permutation", w2_perm, "also print the optimal matching");
  w2cmd->add_flag("--approx", w2_approx, "entropic approximation instead of exact");
  w2cmd->add_option("--reg", w2_reg, "entropic regularization");
  w2cmd->add_option("--max-iter", w2_iter, "entropic iteration cap");

  auto* self = app.add_subcommand("selftest", "closed-form-vs-oracle identity suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(f_sim);
    if (chaos->parsed()) return cmd_rate_fit(f_chaos, "chaos-rate");
    if (uni->parsed()) return cmd_uniform_time(f_uni);
    if (dec->parsed()) return cmd_rate_fit(f_dec, dec_in == "k" ? "decoupling-k" : "decoupling-n");
    if (cut->parsed()) return cmd_rate_fit(f_cut, "cutoff-bias");
    if (coup->parsed()) return cmd_coupling(f_coup);
    if (pov->parsed()) return cmd_povzner(f_pov, pov_p, pov_pairs);
    if (w2cmd->parsed()) return cmd_w2(w2_a, w2_b, w2_perm, w2_approx, w2_reg, w2_iter);
    if (self->parsed()) return run_selftest(std::cout) == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

#include "kacsim/config.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "kacsim/errors.hpp"

namespace kacsim {

namespace {

const std::set<std::string> kExperiments = {
    "simulate",     "chaos-rate", "uniform-time", "decoupling-k",
    "decoupling-n", "cutoff-bias", "coupling"};

std::string fmt(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string fmt(std::uint64_t x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string fmt(std::int64_t x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& val) {
  double out = 0.0;
  auto res = std::from_chars(val.data(), val.data() + val.size(), out);
  if (res.ec != std::errc() || res.ptr != val.data() + val.size())
    throw ConfigError("config: bad numeric value for " + key + ": '" + val + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& val) {
  std::uint64_t out = 0;
  auto res = std::from_chars(val.data(), val.data() + val.size(), out);
  if (res.ec != std::errc() || res.ptr != val.data() + val.size())
    throw ConfigError("config: bad integer value for " + key + ": '" + val + "'");
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& val) {
  std::vector<double> out;
  if (val.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = val.find(',', pos);
    const std::string item = trim(val.substr(pos, next == std::string::npos ? next : next - pos));
    out.push_back(parse_double(key, item));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

void validate(const RunConfig& cfg) {
  if (kExperiments.count(cfg.experiment) == 0)
    throw ConfigError("config: unknown experiment '" + cfg.experiment + "'");
  if (!(cfg.nu > 0.0 && cfg.nu < 1.0)) throw ConfigError("config: nu must lie in (0, 1)");
  if (cfg.n < 2) throw ConfigError("config: N must be at least 2");
  if (!(cfg.cutoff_k > 0.0)) throw ConfigError("config: K must be positive");
  if (!(cfg.cutoff_l > 0.0)) throw ConfigError("config: L must be positive");
  if (!(cfg.t_end >= 0.0)) throw ConfigError("config: t_end must be nonnegative");
  if (cfg.replicates < 1) throw ConfigError("config: replicates must be at least 1");
  if (cfg.tagged < 1) throw ConfigError("config: tagged must be at least 1");
}

}  // namespace

std::string to_string(ReferenceMode mode) {
  return mode == ReferenceMode::kStationaryGaussian ? "stationary-gaussian" : "self-consistent";
}

std::string to_string(StartKind kind) {
  return kind == StartKind::kGaussian ? "gaussian" : "two-mass";
}

ReferenceMode reference_mode_from(const std::string& name) {
  if (name == "stationary-gaussian") return ReferenceMode::kStationaryGaussian;
  if (name == "self-consistent") return ReferenceMode::kSelfConsistent;
  throw ConfigError("config: unknown reference mode '" + name + "'");
}

StartKind start_kind_from(const std::string& name) {
  if (name == "gaussian") return StartKind::kGaussian;
  if (name == "two-mass") return StartKind::kTwoMass;
  throw ConfigError("config: unknown start kind '" + name + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) throw ConfigError("config: expected key=value, got '" + line + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string val = trim(stripped.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("config: duplicate key '" + key + "'");
    if (key == "experiment") {
      cfg.experiment = val;
    } else if (key == "nu") {
      cfg.nu = parse_double(key, val);
    } else if (key == "N") {
      cfg.n = parse_u64(key, val);
    } else if (key == "K") {
      cfg.cutoff_k = parse_double(key, val);
    } else if (key == "L") {
      cfg.cutoff_l = parse_double(key, val);
    } else if (key == "t_end") {
      cfg.t_end = parse_double(key, val);
    } else if (key == "observe_at") {
      cfg.observe_at = parse_list(key, val);
    } else if (key == "replicates") {
      cfg.replicates = static_cast<int>(parse_u64(key, val));
    } else if (key == "reference") {
      cfg.reference = reference_mode_from(val);
    } else if (key == "start") {
      cfg.start = start_kind_from(val);
    } else if (key == "refresh") {
      cfg.refresh = parse_u64(key, val);
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, val);
    } else if (key == "tagged") {
      cfg.tagged = static_cast<int>(parse_u64(key, val));
    } else if (key == "sweep") {
      cfg.sweep = parse_list(key, val);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  validate(cfg);
  return cfg;
}

std::string format_config(const RunConfig& cfg) {
  validate(cfg);
  std::string out;
  out += "experiment=" + cfg.experiment + "\n";
  out += "nu=" + fmt(cfg.nu) + "\n";
  out += "N=" + fmt(static_cast<std::uint64_t>(cfg.n)) + "\n";
  out += "K=" + fmt(cfg.cutoff_k) + "\n";
  out += "L=" + fmt(cfg.cutoff_l) + "\n";
  out += "t_end=" + fmt(cfg.t_end) + "\n";
  out += "observe_at=" + fmt_list(cfg.observe_at) + "\n";
  out += "replicates=" + fmt(static_cast<std::uint64_t>(cfg.replicates)) + "\n";
  out += "reference=" + to_string(cfg.reference) + "\n";
  out += "start=" + to_string(cfg.start) + "\n";
  out += "refresh=" + fmt(cfg.refresh) + "\n";
  out += "seed=" + fmt(cfg.seed) + "\n";
  out += "tagged=" + fmt(static_cast<std::uint64_t>(cfg.tagged)) + "\n";
  out += "sweep=" + fmt_list(cfg.sweep) + "\n";
  return out;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void save_config(const RunConfig& cfg, const std::string& path) {
  write_atomic(path, format_config(cfg));
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = format_config(cfg);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string format_metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string out;
  out += "# ";
  out += kMetricsSchema;
  out += "\n";
  out += "run_id,experiment,nu,N,K,L,k,t,replicate,metric_name,value,stderr,seed,surrogate_m\n";
  for (const auto& r : records) {
    for (const std::string* s : {&r.run_id, &r.experiment, &r.metric_name})
      if (s->find_first_of(",\n\"") != std::string::npos)
        throw ConfigError("metrics: text fields must not contain separators");
    out += r.run_id + ",";
    out += r.experiment + ",";
    out += fmt(r.nu) + ",";
    out += fmt(static_cast<std::uint64_t>(r.n)) + ",";
    out += fmt(r.cutoff_k) + ",";
    out += fmt(r.cutoff_l) + ",";
    out += (r.tagged >= 0 ? fmt(r.tagged) : "") + ",";
    out += fmt(r.t) + ",";
    out += (r.replicate >= 0 ? fmt(r.replicate) : "") + ",";
    out += r.metric_name + ",";
    out += fmt(r.value) + ",";
    out += fmt(r.se) + ",";
    out += fmt(r.seed) + ",";
    out += (r.surrogate_m >= 0 ? fmt(r.surrogate_m) : "");
    out += "\n";
  }
  return out;
}

void save_metrics_csv(const std::vector<MetricsRecord>& records, const std::string& path) {
  write_atomic(path, format_metrics_csv(records));
}

std::string format_snapshot_csv(const std::vector<Vec3>& v, double t, std::uint64_t seed,
                                double cutoff_k, double nu) {
  std::string out;
  out += "# ";
  out += kSnapshotSchema;
  out += "\n";
  out += "# N=" + fmt(static_cast<std::uint64_t>(v.size())) + " t=" + fmt(t) +
         " seed=" + fmt(seed) + " K=" + fmt(cutoff_k) + " nu=" + fmt(nu) + "\n";
  out += "vx,vy,vz\n";
  for (const auto& p : v) out += fmt(p.x) + "," + fmt(p.y) + "," + fmt(p.z) + "\n";
  return out;
}

void save_snapshot_csv(const std::vector<Vec3>& v, double t, std::uint64_t seed, double cutoff_k,
                       double nu, const std::string& path) {
  write_atomic(path, format_snapshot_csv(v, t, seed, cutoff_k, nu));
}

std::vector<Vec3> load_cloud_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cloud: cannot open '" + path + "'");
  std::vector<Vec3> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    if (stripped == "vx,vy,vz") continue;
    Vec3 p;
    std::size_t pos = 0;
    double* comps[3] = {&p.x, &p.y, &p.z};
    for (int c = 0; c < 3; ++c) {
      const std::size_t next = stripped.find(',', pos);
      if ((c < 2) != (next != std::string::npos))
        throw ConfigError("cloud: expected three comma-separated components: '" + line + "'");
      const std::string item =
          trim(stripped.substr(pos, next == std::string::npos ? next : next - pos));
      *comps[c] = parse_double("component", item);
      pos = next + 1;
    }
    out.push_back(p);
  }
  if (out.empty()) throw ConfigError("cloud: no points in '" + path + "'");
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("write: cannot open '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError("write: failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ConfigError("write: cannot rename '" + tmp + "' to '" + path + "'");
}

std::string default_out_dir() {
  const char* env = std::getenv("KACSIM_OUT");
  return env && *env ? std::string(env) : std::string(".");
}

}  // namespace kacsim

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kacsim/experiments.hpp"
#include "kacsim/vec3.hpp"

namespace kacsim {

// Flat key=value text, one key per line, '#' comments and blank lines ignored
// on input. format_config emits every key in a fixed order with shortest
// round-trip numeric literals, so save -> load -> save is byte-identical.
RunConfig parse_config(const std::string& text);
std::string format_config(const RunConfig& cfg);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

// fnv-1a over the canonical text, as 16 hex digits; stamps every output row
std::string config_hash(const RunConfig& cfg);

std::string to_string(ReferenceMode mode);
std::string to_string(StartKind kind);
ReferenceMode reference_mode_from(const std::string& name);
StartKind start_kind_from(const std::string& name);

struct MetricsRecord {
  std::string run_id;  // config hash
  std::string experiment;
  double nu = 0.5;
  std::uint64_t n = 0;
  double cutoff_k = 0.0;
  double cutoff_l = 0.0;
  std::int64_t tagged = -1;     // -1 renders as an empty field
  double t = 0.0;
  std::int64_t replicate = -1;  // -1 marks summary rows
  std::string metric_name;
  double value = 0.0;
  double se = 0.0;
  std::uint64_t seed = 0;
  std::int64_t surrogate_m = -1;  // -1 renders as an empty field
};

inline constexpr const char* kMetricsSchema = "kacsim.metrics.v1";
inline constexpr const char* kSnapshotSchema = "kacsim.snapshot.v1";

// comma separated, '.' decimal point, LF endings, fixed column order
std::string format_metrics_csv(const std::vector<MetricsRecord>& records);
void save_metrics_csv(const std::vector<MetricsRecord>& records, const std::string& path);

std::string format_snapshot_csv(const std::vector<Vec3>& v, double t, std::uint64_t seed,
                                double cutoff_k, double nu);
void save_snapshot_csv(const std::vector<Vec3>& v, double t, std::uint64_t seed, double cutoff_k,
                       double nu, const std::string& path);

// vx,vy,vz rows; '#' comment lines and a leading header row are skipped
std::vector<Vec3> load_cloud_csv(const std::string& path);

// every save_* goes through a temp file and an atomic rename
void write_atomic(const std::string& path, const std::string& content);

// KACSIM_OUT if set, else "."
std::string default_out_dir();

}  // namespace kacsim

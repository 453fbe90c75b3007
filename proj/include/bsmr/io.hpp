#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bsmr/metrics.hpp"
#include "bsmr/sampler.hpp"
#include "bsmr/synthesis.hpp"
#include "bsmr/types.hpp"

namespace bsmr {

// Whole-file read; IoError names the path on failure.
std::string read_file(const std::string& path);

// Write via a sibling .tmp file and rename, creating parent directories.
// A crash never leaves a partially written final artifact.
void write_file_atomic(const std::string& path, const std::string& content);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string hex64(std::uint64_t value);

// Flat `key = value` text with '#' comments.  Typed getters mark keys as
// consumed; reject_unknown() then names any leftover key.  Duplicate keys
// are rejected at parse time.
class RunConfig {
 public:
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);

  void reject_unknown() const;

 private:
  const std::string& lookup(const std::string& key);
  std::vector<std::pair<std::string, std::string>> entries_;
  std::set<std::string> consumed_;
};

// Sidecar describing the response blocks and predictor grouping of a
// dataset CSV: `l`, `m`, `k`, `group_sizes = [..]`.
struct DatasetSchema {
  std::size_t l = 0, m = 0, k = 0;
  std::vector<std::size_t> group_sizes;
};

DatasetSchema read_schema(const std::string& path);
void write_schema(const std::string& path, const DatasetSchema& schema);

// CSV with header x1..xp,u1..ul,z1..zm,w1..wk; cells %.17g.  Errors carry
// 1-based row/column coordinates.
MixedResponseDataset load_dataset(const std::string& csv_path,
                                  const std::string& schema_path);
void save_dataset(const std::string& csv_path, const std::string& schema_path,
                  const MixedResponseDataset& data);

// Predictors only (header x1..xp), as consumed by prediction.  Accepts a
// full dataset CSV too, using the x block and ignoring response columns.
Matrix load_predictors(const std::string& csv_path);

// Scenario echo plus coefficient / precision / support matrices as JSON.
// Realized latent values are not persisted.
void save_truth(const std::string& path, const SimulationScenario& scenario,
                const GroundTruth& truth);
GroundTruth load_truth(const std::string& path);

std::string serialize_state(const ModelState& state);
ModelState deserialize_state(const std::string& bytes);

// Binary chain format: magic line, one JSON header line (dims, field
// order, seed, burn-in), then raw little-endian doubles per draw.
std::string serialize_chain(const PosteriorChain& chain);
PosteriorChain deserialize_chain(const std::string& bytes);
void save_chain(const std::string& path, const PosteriorChain& chain);
PosteriorChain load_chain(const std::string& path);

// FNV-1a over the serialized bytes, as 16 hex digits.
std::string chain_digest(const PosteriorChain& chain);

// Thinned flat CSV of the retained draws for eyeballing.
void export_chain_csv(const std::string& path, const PosteriorChain& chain,
                      std::size_t thin = 1);

std::string report_json(const EvaluationReport& report);
std::string report_csv(const EvaluationReport& report);

// Machine-readable error envelope printed to stderr by the CLI.
std::string error_json(const std::string& kind, const std::string& message);

std::string format_double(double v);  // %.17g

}  // namespace bsmr

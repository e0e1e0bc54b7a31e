#pragma once
// Experiment harness: a JSON config names a distribution, an experiment kind,
// and grids; running it writes one CSV (deterministic bytes for a fixed
// config and seed) plus a manifest with the config hash and runtimes.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "renewal0/interarrival.hpp"

namespace renewal0 {

enum class ExperimentKind {
  RenewalMass,
  LocalLimit,
  Darling,
  LdRate,
  FukNagaev,
  ReverseAvg,
  Intersect,
  BigJump,
  IsVsDp,
};

ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(ExperimentKind k);

// k as a function of n: a fixed value, the balanced rule 1/sqrt(phi(n) r(n))
// that sits at the typical-size boundary, or c/r(n) which crosses it.
struct KRule {
  enum class Kind { FixedK, Balanced, OverTail } kind = Kind::FixedK;
  Index fixed_k = 1;
  double c = 1.0;

  Index at(const InterArrival& d, Index n) const;
};

// eps as a function of n: a constant, or the slow schedule c/log(n+e) used
// where a vanishing sequence is needed.
struct EpsRule {
  enum class Kind { Constant, LogSchedule } kind = Kind::Constant;
  double value = 0.1;
  double c = 1.0;

  double at(Index n) const;
};

struct ExperimentConfig {
  nlohmann::json distribution;
  ExperimentKind kind = ExperimentKind::RenewalMass;
  std::vector<Index> n_grid;
  std::vector<Index> k_grid;  // used by darling; derived from k_rule otherwise
  KRule k_rule;
  EpsRule eps;
  Index m = 0;  // truncation cutoff for fuk-nagaev
  Index count = 100000;
  std::uint64_t seed = 1;
  nlohmann::json raw;  // canonical source of the config hash
};

// Validates and normalizes a config object. Unknown kinds, malformed grids,
// or grid points past the distribution's horizon throw BadConfig.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);

// FNV-1a over the canonical (sorted-key) dump; reordering fields in the
// source JSON does not change the hash.
std::string config_hash(const nlohmann::json& j);

struct ExperimentResult {
  std::string csv_path;
  std::string manifest_path;
  Index rows = 0;
  bool flags_ok = true;  // per-kind row checks (e.g. |IS - DP| <= 3 SE)
};

// Writes <out_dir>/<kind>.csv and <out_dir>/manifest.json. CSV bytes depend
// only on the config and seed; wall-clock runtimes live in the manifest.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir);

}  // namespace renewal0

#include "renewal0/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "renewal0/asymptotics.hpp"
#include "renewal0/kstep.hpp"
#include "renewal0/rare_event.hpp"
#include "renewal0/renewal_table.hpp"

namespace renewal0 {
namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::RenewalMass, "renewal-mass"},
    {ExperimentKind::LocalLimit, "local-limit"},
    {ExperimentKind::Darling, "darling"},
    {ExperimentKind::LdRate, "ld-rate"},
    {ExperimentKind::FukNagaev, "fuk-nagaev"},
    {ExperimentKind::ReverseAvg, "reverse-avg"},
    {ExperimentKind::Intersect, "intersect"},
    {ExperimentKind::BigJump, "big-jump"},
    {ExperimentKind::IsVsDp, "is-vs-dp"},
};

bool uses_k_rule(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::LocalLimit:
    case ExperimentKind::LdRate:
    case ExperimentKind::FukNagaev:
    case ExperimentKind::BigJump:
    case ExperimentKind::IsVsDp:
      return true;
    default:
      return false;
  }
}

// Fixed-width numeric formatting so CSV bytes depend only on the values.
std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(Index x) { return std::to_string(static_cast<long long>(x)); }

std::vector<Index> parse_index_grid(const nlohmann::json& j,
                                    const std::string& field) {
  if (!j.is_array() || j.empty())
    throw BadConfig(field + " must be a non-empty array of integers");
  std::vector<Index> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<Index>() < 1)
      throw BadConfig(field + " entries must be integers >= 1");
    out.push_back(v.get<Index>());
  }
  return out;
}

KRule parse_k_rule(const nlohmann::json& j) {
  KRule rule;
  if (j.is_number_integer()) {
    rule.kind = KRule::Kind::FixedK;
    rule.fixed_k = j.get<Index>();
    if (rule.fixed_k < 1) throw BadConfig("k-rule: fixed k must be >= 1");
    return rule;
  }
  if (!j.is_object()) throw BadConfig("k-rule must be an integer or an object");
  const std::string kind = j.value("kind", std::string{});
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    if (key != "kind" && key != "k" && key != "c")
      throw BadConfig("k-rule: unknown field '" + key + "'");
  }
  if (kind == "fixed-k") {
    rule.kind = KRule::Kind::FixedK;
    if (!j.contains("k") || !j["k"].is_number_integer())
      throw BadConfig("k-rule fixed-k needs an integer field k");
    rule.fixed_k = j["k"].get<Index>();
    if (rule.fixed_k < 1) throw BadConfig("k-rule: fixed k must be >= 1");
  } else if (kind == "balanced") {
    rule.kind = KRule::Kind::Balanced;
  } else if (kind == "over-tail") {
    rule.kind = KRule::Kind::OverTail;
    rule.c = j.value("c", 1.0);
    if (!(rule.c > 0.0)) throw BadConfig("k-rule over-tail: c must be > 0");
  } else {
    throw BadConfig("k-rule kind must be fixed-k, balanced, or over-tail");
  }
  return rule;
}

EpsRule parse_eps_rule(const nlohmann::json& j) {
  EpsRule rule;
  if (j.is_number()) {
    rule.kind = EpsRule::Kind::Constant;
    rule.value = j.get<double>();
    if (!(rule.value > 0.0 && rule.value < 1.0))
      throw BadConfig("eps must lie in (0, 1)");
    return rule;
  }
  if (!j.is_object()) throw BadConfig("eps must be a number or an object");
  const std::string kind = j.value("rule", std::string{});
  if (kind == "constant") {
    rule.kind = EpsRule::Kind::Constant;
    rule.value = j.value("value", 0.1);
    if (!(rule.value > 0.0 && rule.value < 1.0))
      throw BadConfig("eps must lie in (0, 1)");
  } else if (kind == "log") {
    rule.kind = EpsRule::Kind::LogSchedule;
    rule.c = j.value("c", 1.0);
    if (!(rule.c > 0.0)) throw BadConfig("eps log schedule: c must be > 0");
  } else {
    throw BadConfig("eps rule must be constant or log");
  }
  return rule;
}

// One CSV row as already-formatted cells; the writer owns all separators.
using Row = std::vector<std::string>;

struct Sheet {
  std::vector<std::string> columns;
  std::vector<Row> rows;
  bool flags_ok = true;
  nlohmann::json extra;  // per-kind side artifacts (e.g. estimates.json)
};

Sheet run_renewal_mass(const ExperimentConfig& cfg, const InterArrival& d) {
  Sheet s;
  s.columns = {"n", "u_exact", "u_predicted", "ratio"};
  Index n_max = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
  auto table = renewal_mass(d, n_max);
  for (Index n : cfg.n_grid) {
    double u = table.u[n];
    double pred = predict_renewal_mass(d, n);
    s.rows.push_back({fmt(n), fmt(u), fmt(pred), fmt(u / pred)});
  }
  return s;
}

Sheet run_local_limit(const ExperimentConfig& cfg, const InterArrival& d) {
  Sheet s;
  s.columns = {"n", "k", "exact", "predicted", "ratio"};
  Index n_max = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
  Index k_max = 0;
  std::vector<Index> ks;
  for (Index n : cfg.n_grid) {
    Index k = cfg.k_rule.at(d, n);
    ks.push_back(k);
    k_max = std::max(k_max, k);
  }
  auto table = k_step_table(d, k_max, n_max);
  for (size_t i = 0; i < cfg.n_grid.size(); ++i) {
    Index n = cfg.n_grid[i], k = ks[i];
    double exact = table.pmf(k, n);
    double pred = predict_local_pmf(d, k, n);
    s.rows.push_back({fmt(n), fmt(k), fmt(exact), fmt(pred), fmt(exact / pred)});
  }
  return s;
}

Sheet run_darling(const ExperimentConfig& cfg, const InterArrival& d) {
  Sheet s;
  s.columns = {"k", "n_samples", "sup_distance", "overflow_fraction"};
  for (Index k : cfg.k_grid) {
    auto e = darling_empirical(d, k, cfg.count, cfg.seed);
    s.rows.push_back({fmt(k), fmt(cfg.count), fmt(e.ks_distance),
                      fmt(e.overflow_fraction)});
  }
  return s;
}

Sheet run_ld_rate(const ExperimentConfig& cfg, const InterArrival& d) {
  Sheet s;
  s.columns = {"n", "k", "exact_neg_log", "rate", "ratio", "extrapolated"};
  for (Index n : cfg.n_grid) {
    Index k = cfg.k_rule.at(d, n);
    double neg_log = -k_step_log_cdf_deep(d, k, n);
    bool extrapolated = false;
    double rate = ld_rate(d, n, k, &extrapolated);
    s.rows.push_back({fmt(n), fmt(k), fmt(neg_log), fmt(rate),
                      fmt(neg_log / rate), extrapolated ? "1" : "0"});
  }
  return s;
}

Sheet run_fuk_nagaev(const ExperimentConfig& cfg, const InterArrival& d) {
  Sheet s;
  s.columns = {"n", "k", "m", "bound", "exact", "ok"};
  for (Index n : cfg.n_grid) {
    Index k = cfg.k_rule.at(d, n);
    double bound = fuk_nagaev_bound(d, k, cfg.m, n);
    // Tail of a sum of k gaps each conditioned on {gap <= m}; the sum never
    // exceeds k m, so the table stops there and the cdf is flat beyond.
    Index reach = std::min(n, k * cfg.m);
    auto t = k_step_table(d, k, reach, cfg.m, TruncMode::Conditioned);
    double exact = 1.0 - k_step_cdf(t, k, reach);
    bool ok = bound >= exact - 1e-12;
    s.flags_ok = s.flags_ok && ok;
    s.rows.push_back({fmt(n), fmt(k), fmt(cfg.m), fmt(bound), fmt(exact),
                      ok ? "1" : "0"});
  }
  return s;
}

Sheet run_reverse_avg(const ExperimentConfig& cfg, const InterArrival& d) {
  Sheet s;
  s.columns = {"n", "eps", "lhs", "rhs", "ratio"};
  Index n_max = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
  auto table = renewal_mass(d, n_max);
  for (Index n : cfg.n_grid) {
    double eps = cfg.eps.at(n);
    auto pair = reverse_avg_pair(d, table, n, eps);
    s.rows.push_back({fmt(n), fmt(eps), fmt(pair.lhs), fmt(pair.rhs),
                      fmt(pair.lhs / pair.rhs)});
  }
  return s;
}

Sheet run_intersect(const ExperimentConfig& cfg, const InterArrival& d) {
  Sheet s;
  s.columns = {"n", "u", "u_intersect", "f_recovered"};
  Index n_max = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
  auto table = renewal_mass(d, n_max);
  ArrayXd inter = intersect_renewals(table.u, table.u);
  auto inv = invert_renewal(inter);
  s.flags_ok = !inv.negative_pmf;
  for (Index n : cfg.n_grid) {
    s.rows.push_back(
        {fmt(n), fmt(table.u[n]), fmt(inter[n]), fmt(inv.pmf[n])});
  }
  return s;
}

Sheet run_big_jump(const ExperimentConfig& cfg, const InterArrival& d) {
  Sheet s;
  s.columns = {"n", "k", "eps", "conditional"};
  for (Index n : cfg.n_grid) {
    Index k = cfg.k_rule.at(d, n);
    double eps = cfg.eps.at(n);
    double cond = big_jump_conditional(d, k, n, eps);
    s.rows.push_back({fmt(n), fmt(k), fmt(eps), fmt(cond)});
  }
  return s;
}

Sheet run_is_vs_dp(const ExperimentConfig& cfg, const InterArrival& d,
                   const std::string& hash) {
  Sheet s;
  s.columns = {"n", "k", "dp", "is_value", "is_se", "within_3se"};
  s.extra = nlohmann::json::array();
  for (Index n : cfg.n_grid) {
    Index k = cfg.k_rule.at(d, n);
    double dp = std::exp(k_step_log_cdf_deep(d, k, n));
    auto est = is_estimate_cdf(d, n, k, cfg.eps.at(n), cfg.count, cfg.seed);
    bool within = std::abs(est.value - dp) <= std::max(3.0 * est.std_error, 1e-12);
    s.flags_ok = s.flags_ok && within;
    s.rows.push_back({fmt(n), fmt(k), fmt(dp), fmt(est.value),
                      fmt(est.std_error), within ? "1" : "0"});
    s.extra.push_back({{"value", est.value},
                       {"std_error", est.std_error},
                       {"n_samples", est.n_samples},
                       {"seed", est.seed},
                       {"method", "tilted"},
                       {"config_hash", hash}});
  }
  return s;
}

}  // namespace

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (const auto& kn : kKindNames)
    if (s == kn.name) return kn.kind;
  throw BadConfig("unknown experiment kind: " + s);
}

std::string to_string(ExperimentKind k) {
  for (const auto& kn : kKindNames)
    if (k == kn.kind) return kn.name;
  throw Error("unmapped experiment kind");
}

Index KRule::at(const InterArrival& d, Index n) const {
  switch (kind) {
    case Kind::FixedK:
      return fixed_k;
    case Kind::Balanced: {
      double p = d.phi_at(n), r = d.tail(n);
      if (!(p > 0.0) || !(r > 0.0))
        throw Error("balanced k-rule needs phi(n) > 0 and r(n) > 0");
      return std::max(Index{1}, static_cast<Index>(1.0 / std::sqrt(p * r)));
    }
    case Kind::OverTail: {
      double r = d.tail(n);
      if (!(r > 0.0)) throw Error("over-tail k-rule needs r(n) > 0");
      return std::max(Index{1}, static_cast<Index>(c / r));
    }
  }
  throw Error("unmapped k-rule kind");
}

double EpsRule::at(Index n) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::LogSchedule:
      return c / std::log(static_cast<double>(n) + std::exp(1.0));
  }
  throw Error("unmapped eps-rule kind");
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  if (!j.is_object()) throw BadConfig("config must be a JSON object");
  static const std::set<std::string> known = {
      "distribution", "kind", "n-grid", "k-grid", "k-rule", "eps",
      "m",            "count", "seed",  "horizon", "out"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key()))
      throw BadConfig("unknown config field '" + item.key() + "'");
  }
  if (!j.contains("distribution") || !j["distribution"].is_object())
    throw BadConfig("config needs a distribution object");
  if (!j.contains("kind") || !j["kind"].is_string())
    throw BadConfig("config needs a kind string");

  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.kind = experiment_kind_from_string(j["kind"].get<std::string>());
  cfg.distribution = j["distribution"];

  if (j.contains("horizon")) {
    if (!j["horizon"].is_number_integer() || j["horizon"].get<Index>() < 1)
      throw BadConfig("horizon must be an integer >= 1");
    if (cfg.distribution.contains("horizon")) {
      if (cfg.distribution["horizon"] != j["horizon"])
        throw BadConfig("horizon disagrees between config and distribution");
    } else {
      cfg.distribution["horizon"] = j["horizon"];
    }
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() ||
        (!j["seed"].is_number_unsigned() &&
         j["seed"].get<std::int64_t>() < 0))
      throw BadConfig("seed must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("count")) {
    if (!j["count"].is_number_integer() || j["count"].get<Index>() < 1)
      throw BadConfig("count must be an integer >= 1");
    cfg.count = j["count"].get<Index>();
  }
  if (j.contains("out") && !j["out"].is_string())
    throw BadConfig("out must be a string path");

  const bool wants_k_grid = cfg.kind == ExperimentKind::Darling;
  if (wants_k_grid) {
    if (!j.contains("k-grid")) throw BadConfig("darling needs a k-grid");
    if (j.contains("n-grid"))
      throw BadConfig("darling takes a k-grid, not an n-grid");
    cfg.k_grid = parse_index_grid(j["k-grid"], "k-grid");
  } else {
    if (j.contains("k-grid"))
      throw BadConfig("k-grid applies only to the darling kind");
    if (!j.contains("n-grid")) throw BadConfig("config needs an n-grid");
    cfg.n_grid = parse_index_grid(j["n-grid"], "n-grid");
  }

  if (uses_k_rule(cfg.kind)) {
    if (!j.contains("k-rule"))
      throw BadConfig(to_string(cfg.kind) + " needs a k-rule");
    cfg.k_rule = parse_k_rule(j["k-rule"]);
  } else if (j.contains("k-rule")) {
    throw BadConfig("k-rule does not apply to " + to_string(cfg.kind));
  }

  if (j.contains("eps")) cfg.eps = parse_eps_rule(j["eps"]);
  else cfg.eps = EpsRule{EpsRule::Kind::LogSchedule, 0.1, 1.0};

  if (cfg.kind == ExperimentKind::FukNagaev) {
    if (!j.contains("m") || !j["m"].is_number_integer() ||
        j["m"].get<Index>() < 1)
      throw BadConfig("fuk-nagaev needs an integer cutoff m >= 1");
    cfg.m = j["m"].get<Index>();
  } else if (j.contains("m")) {
    throw BadConfig("m applies only to the fuk-nagaev kind");
  }

  InterArrival d = [&] {
    try {
      return distribution_from_json(cfg.distribution);
    } catch (const BadConfig&) {
      throw;
    } catch (const std::exception& e) {
      throw BadConfig(std::string("distribution: ") + e.what());
    }
  }();
  if (!d.fully_resolved()) {
    for (Index n : cfg.n_grid) {
      if (n > d.horizon())
        throw BadConfig("n-grid point " + std::to_string(n) +
                        " exceeds the distribution horizon " +
                        std::to_string(d.horizon()));
    }
  }
  return cfg;
}

std::string config_hash(const nlohmann::json& j) {
  // FNV-1a over the canonical dump; nlohmann objects serialize with sorted
  // keys, so field order in the source file cannot change the hash.
  const std::string dump = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string hash = config_hash(cfg.raw);
  InterArrival d = distribution_from_json(cfg.distribution);

  Sheet sheet;
  switch (cfg.kind) {
    case ExperimentKind::RenewalMass: sheet = run_renewal_mass(cfg, d); break;
    case ExperimentKind::LocalLimit: sheet = run_local_limit(cfg, d); break;
    case ExperimentKind::Darling: sheet = run_darling(cfg, d); break;
    case ExperimentKind::LdRate: sheet = run_ld_rate(cfg, d); break;
    case ExperimentKind::FukNagaev: sheet = run_fuk_nagaev(cfg, d); break;
    case ExperimentKind::ReverseAvg: sheet = run_reverse_avg(cfg, d); break;
    case ExperimentKind::Intersect: sheet = run_intersect(cfg, d); break;
    case ExperimentKind::BigJump: sheet = run_big_jump(cfg, d); break;
    case ExperimentKind::IsVsDp: sheet = run_is_vs_dp(cfg, d, hash); break;
  }

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string kind = to_string(cfg.kind);

  // CSV bytes are a pure function of config and seed: fixed-width floats,
  // '\n' newlines, and no timestamps or runtimes.
  std::string csv;
  csv += "# renewal-zero " + std::string(kVersion) + "\n";
  csv += "# kind " + kind + "\n";
  csv += "# config_hash " + hash + "\n";
  csv += "# seed " + std::to_string(cfg.seed) + "\n";
  for (size_t i = 0; i < sheet.columns.size(); ++i) {
    if (i) csv += ',';
    csv += sheet.columns[i];
  }
  csv += '\n';
  for (const auto& row : sheet.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) csv += ',';
      csv += row[i];
    }
    csv += '\n';
  }

  ExperimentResult res;
  res.csv_path = (fs::path(out_dir) / (kind + ".csv")).string();
  res.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  res.rows = static_cast<Index>(sheet.rows.size());
  res.flags_ok = sheet.flags_ok;

  {
    std::ofstream f(res.csv_path, std::ios::binary);
    if (!f) throw Error("cannot write " + res.csv_path);
    f << csv;
  }
  if (cfg.kind == ExperimentKind::IsVsDp) {
    std::ofstream f((fs::path(out_dir) / "estimates.json").string(),
                    std::ios::binary);
    if (!f) throw Error("cannot write estimates.json");
    f << sheet.extra.dump(2) << '\n';
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  nlohmann::json manifest = {
      {"config_hash", hash},
      {"kind", kind},
      {"rows", res.rows},
      {"runtimes", {{"total_seconds", secs}}},
      {"versions", {{"renewal0", kVersion}}},
  };
  {
    std::ofstream f(res.manifest_path, std::ios::binary);
    if (!f) throw Error("cannot write " + res.manifest_path);
    f << manifest.dump(2) << '\n';
  }
  return res;
}

}  // namespace renewal0

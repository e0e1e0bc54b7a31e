// renewal-zero: experiment runner, acceptance selftest, and renewal-mass
// inversion over CSV. Exit codes: 0 success, 1 config/input parse error,
// 2 invariant or criterion failure.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <cxxabi.h>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <typeinfo>
#include <vector>

#include "renewal0/acceptance.hpp"
#include "renewal0/experiment.hpp"
#include "renewal0/renewal_table.hpp"

namespace {

// Short class name of an exception, so failures carry the originating
// module's error name (HorizonExceeded, RegimeUnknown, ...).
std::string error_name(const std::exception& e) {
  int status = 0;
  std::unique_ptr<char, void (*)(void*)> demangled(
      abi::__cxa_demangle(typeid(e).name(), nullptr, nullptr, &status),
      std::free);
  std::string full = status == 0 && demangled ? demangled.get()
                                              : typeid(e).name();
  auto pos = full.rfind("::");
  return pos == std::string::npos ? full : full.substr(pos + 2);
}

int run_command(const std::string& config_path, std::string out_dir) {
  nlohmann::json j;
  {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "error: cannot open config " << config_path << "\n";
      return 1;
    }
    try {
      f >> j;
    } catch (const std::exception& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return 1;
    }
  }
  renewal0::ExperimentConfig cfg;
  try {
    cfg = renewal0::parse_experiment_config(j);
  } catch (const renewal0::BadConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (out_dir.empty() && j.contains("out"))
    out_dir = j["out"].get<std::string>();
  if (out_dir.empty()) {
    std::cerr << "error: no output directory (--out or config field out)\n";
    return 1;
  }
  try {
    auto res = renewal0::run_experiment(cfg, out_dir);
    std::cout << "wrote " << res.csv_path << " (" << res.rows << " rows)\n"
              << "wrote " << res.manifest_path << "\n";
    if (!res.flags_ok) {
      std::cerr << "invariant failure: some row checks are false\n";
      return 2;
    }
    return 0;
  } catch (const renewal0::Error& e) {
    std::cerr << "invariant failure [" << error_name(e) << "]: " << e.what()
              << "\n";
    return 2;
  }
}

int selftest_command(bool corrupt_pmf) {
  renewal0::AcceptanceOptions opts;
  opts.corrupt_pmf = corrupt_pmf;
  auto report = renewal0::acceptance_selftest(opts);
  std::cout << report.text;
  std::cout << (report.all_pass ? "ALL PASS" : "FAILURES PRESENT") << "\n";
  return report.all_pass ? 0 : 2;
}

// Reads the last comma-separated field of each non-comment line as u_n,
// n counted from 0.
int invert_command(const std::string& csv_path) {
  std::ifstream f(csv_path);
  if (!f) {
    std::cerr << "error: cannot open " << csv_path << "\n";
    return 1;
  }
  std::vector<double> u;
  std::string line_text;
  while (std::getline(f, line_text)) {
    if (line_text.empty() || line_text[0] == '#') continue;
    auto pos = line_text.find_last_of(',');
    std::string field =
        pos == std::string::npos ? line_text : line_text.substr(pos + 1);
    try {
      size_t used = 0;
      double v = std::stod(field, &used);
      if (used == 0) throw std::invalid_argument(field);
      u.push_back(v);
    } catch (const std::exception&) {
      if (u.empty()) continue;  // tolerate one leading header row
      std::cerr << "error: non-numeric field '" << field << "'\n";
      return 1;
    }
  }
  if (u.empty()) {
    std::cerr << "error: no rows in " << csv_path << "\n";
    return 1;
  }
  renewal0::ArrayXd arr(u.size());
  for (size_t i = 0; i < u.size(); ++i) arr[i] = u[i];
  try {
    auto inv = renewal0::invert_renewal(arr);
    std::printf("# renewal-zero invert\n");
    std::printf("# negative_pmf %d\n", inv.negative_pmf ? 1 : 0);
    std::printf("n,f\n");
    for (renewal0::Index n = 0; n < inv.pmf.size(); ++n)
      std::printf("%lld,%.17g\n", static_cast<long long>(n), inv.pmf[n]);
    return inv.negative_pmf ? 2 : 0;
  } catch (const renewal0::Error& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact laws, asymptotic predictors, and rare-event samplers "
               "for heavy-tailed discrete renewal processes"};
  app.require_subcommand(1);

  std::string config_path, out_dir, u_csv;
  bool corrupt_pmf = false;

  auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "output directory");

  auto* selftest =
      app.add_subcommand("selftest", "run the acceptance suite twice");
  selftest
      ->add_flag("--corrupt-pmf", corrupt_pmf,
                 "negative control: corrupt the mass-conservation check")
      ->group("");  // hidden

  auto* invert = app.add_subcommand(
      "invert", "recover the gap pmf from a renewal-mass CSV column");
  invert->add_option("--u", u_csv, "CSV whose last field per row is u_n")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return run_command(config_path, out_dir);
  if (selftest->parsed()) return selftest_command(corrupt_pmf);
  return invert_command(u_csv);
}

#pragma once
// Desk-scale acceptance suite: every library-level guarantee condensed into
// one pass/fail line per criterion, with tolerances pinned against the exact
// DP tables and recorded next to each check.

#include <string>

namespace renewal0 {

struct AcceptanceOptions {
  // Negative-control hook: perturbs the suite's local pmf copy before the
  // mass-conservation check, which must then FAIL. Nothing outside that
  // check is affected.
  bool corrupt_pmf = false;
};

struct AcceptanceReport {
  std::string text;  // one line per criterion, PASS/FAIL plus measured values
  bool all_pass = true;
};

// Runs criteria C00..C13 once. The text is a pure function of the library
// and the options: fixed seeds, fixed grids, no timestamps.
AcceptanceReport acceptance_run(const AcceptanceOptions& opts = {});

// Runs acceptance_run twice and appends the C14 determinism line comparing
// the two reports byte for byte; the returned text is the first report plus
// that line.
AcceptanceReport acceptance_selftest(const AcceptanceOptions& opts = {});

}  // namespace renewal0

#include <doctest.h>

#include <sstream>

#include "renewal0/acceptance.hpp"

using namespace renewal0;

TEST_CASE("corrupt-pmf hook flips exactly the mass-conservation line") {
  AcceptanceOptions opts;
  opts.corrupt_pmf = true;
  auto rep = acceptance_run(opts);
  CHECK(!rep.all_pass);
  std::istringstream lines(rep.text);
  std::string line;
  int seen = 0;
  while (std::getline(lines, line)) {
    ++seen;
    if (line.rfind("C00", 0) == 0) {
      CHECK(line.find(" FAIL") != std::string::npos);
    } else {
      CHECK(line.find(" PASS") != std::string::npos);
    }
  }
  CHECK(seen == 14);  // C00..C13; the determinism line belongs to selftest
}

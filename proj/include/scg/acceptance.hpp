#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace scg {

struct CriterionResult {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id, title;
  std::function<CriterionResult()> run;
};

const std::vector<Criterion>& criteria();

// Prints one PASS/FAIL line per criterion; returns the number of failures.
// Empty `only` runs all.
int run_acceptance(std::ostream& os, const std::vector<std::string>& only = {});

}  // namespace scg

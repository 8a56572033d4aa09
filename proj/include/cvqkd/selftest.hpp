#pragma once

#include <string>
#include <vector>

namespace cvqkd::selftest {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Oracle and property checks of the whole engine; deterministic (fixed seeds).
std::vector<Check> run();

}  // namespace cvqkd::selftest

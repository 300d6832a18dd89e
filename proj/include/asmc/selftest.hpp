#pragma once

#include <string>
#include <vector>

namespace asmc {

struct SelftestCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

/// Fast invariant checks on small built-in problems; used by `asmc selftest`.
std::vector<SelftestCheck> run_selftest();

}  // namespace asmc

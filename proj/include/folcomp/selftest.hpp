#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace folcomp
{

struct CriterionResult
{
  int id = 0;
  std::string name;
  bool pass = false;
  /// Deterministic one-line summary with the pinned tolerance.
  std::string detail;
  double seconds = 0.0;
  std::vector<std::string> outputs;
};

struct SelftestOptions
{
  std::uint64_t seed = 42;
  std::string model_dir;
  std::string out_dir = "selftest";
  int threads = 1;
  std::ostream * log = nullptr;
};

/// Runs the property suite on the bundled models (criteria 1 to 11), writing one
/// CSV per criterion and criteria.csv into out_dir. Wall times are not written
/// to the CSVs so repeated runs are byte-identical.
std::vector<CriterionResult> run_selftest(const SelftestOptions & opt);

}  // namespace folcomp

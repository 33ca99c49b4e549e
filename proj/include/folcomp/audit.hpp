#pragma once

#include <string>
#include <utility>
#include <vector>

namespace folcomp
{

/// Table of measured quantities against comparison bounds.
struct AuditReport
{
  struct Row
  {
    std::vector<double> values;  // one per column
    std::string certificate;
    bool asserted = true;  // participates in the verdict
    bool ok = true;
  };

  std::string name;
  std::vector<std::string> columns;
  /// Unit label per column ("1" for dimensionless).
  std::vector<std::string> units;
  std::vector<Row> rows;
  std::vector<std::pair<std::string, double>> tolerances;
  std::vector<std::pair<std::string, double>> summary;
  int skipped = 0;
  bool pass = true;

  void add(std::vector<double> values, std::string certificate, bool asserted, bool ok)
  {
    if (asserted && !ok) { pass = false; }
    rows.push_back({std::move(values), std::move(certificate), asserted, ok});
  }

  double summary_value(const std::string & key, double fallback = 0.0) const
  {
    for (const auto & [k, v] : summary) {
      if (k == key) { return v; }
    }
    return fallback;
  }
};

}  // namespace folcomp

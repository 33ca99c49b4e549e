#pragma once

#include "folcomp/audit.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace folcomp
{

/// Fixed 17-significant-digit decimal; "nan" and "inf" spelled out.
std::string format_number(double x);

/// Header "column [unit]" then one row per audit row, with certificate and verdict columns.
std::string audit_csv(const AuditReport & rep);
nlohmann::json audit_json(const AuditReport & rep);

/// Generic table with units, 17 significant digits.
std::string table_csv(const std::vector<std::string> & columns, const std::vector<std::string> & units,
                      const std::vector<std::vector<double>> & rows);

std::string read_file(const std::string & path);
/// Writes atomically enough for our purposes; creates parent directories.
void write_file(const std::string & path, const std::string & content);

std::string sha256_hex(const std::string & data);
/// Git blob id: sha1("blob <size>\0" + data).
std::string git_blob_id(const std::string & data);

struct RunManifest
{
  std::string command_line;
  std::string model_path;
  std::string model_hash;  // sha256 of the model file bytes
  std::string model_blob;  // git blob id of the same bytes
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string started;
  std::string finished;
  double wall_seconds = 0.0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> verdicts;

  /// Hash and blob id of the outputs are read from disk at serialization time.
  nlohmann::json to_json() const;
};

const char * tool_version();
std::string utc_timestamp();

}  // namespace folcomp

#include "folcomp/report.hpp"

#include "folcomp/errors.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace folcomp
{

std::string format_number(double x)
{
  if (std::isnan(x)) { return "nan"; }
  if (std::isinf(x)) { return x > 0 ? "inf" : "-inf"; }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace
{

std::string header(const std::vector<std::string> & columns, const std::vector<std::string> & units)
{
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) { out += ','; }
    out += columns[i] + " [" + (i < units.size() ? units[i] : "1") + "]";
  }
  return out;
}

std::string digest(const EVP_MD * md, const std::string & data)
{
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out, &len, md, nullptr) != 1) { throw Error("digest failed"); }
  static const char * hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[out[i] >> 4];
    s += hex[out[i] & 15];
  }
  return s;
}

}  // namespace

std::string table_csv(const std::vector<std::string> & columns, const std::vector<std::string> & units,
                      const std::vector<std::vector<double>> & rows)
{
  std::string out = header(columns, units) + "\n";
  for (const auto & row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) { out += ','; }
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string audit_csv(const AuditReport & rep)
{
  std::string out = header(rep.columns, rep.units) + ",certificate [label],asserted [bool],ok [bool]\n";
  for (const auto & row : rep.rows) {
    for (double v : row.values) { out += format_number(v) + ','; }
    out += row.certificate + ',' + (row.asserted ? "1" : "0") + ',' + (row.ok ? "1" : "0") + '\n';
  }
  return out;
}

nlohmann::json audit_json(const AuditReport & rep)
{
  nlohmann::json j;
  j["name"] = rep.name;
  j["pass"] = rep.pass;
  j["rows"] = rep.rows.size();
  j["skipped"] = rep.skipped;
  // Numbers go through the fixed formatter so JSON output is reproducible too.
  for (const auto & [k, v] : rep.tolerances) { j["tolerances"][k] = format_number(v); }
  for (const auto & [k, v] : rep.summary) { j["summary"][k] = format_number(v); }
  return j;
}

std::string read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw Error("cannot read " + path); }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string & path, const std::string & content)
{
  const std::filesystem::path p(path);
  if (p.has_parent_path()) { std::filesystem::create_directories(p.parent_path()); }
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw Error("cannot write " + path); }
  out << content;
}

std::string sha256_hex(const std::string & data) { return digest(EVP_sha256(), data); }

std::string git_blob_id(const std::string & data)
{
  std::string framed = "blob " + std::to_string(data.size());
  framed.push_back('\0');
  return digest(EVP_sha1(), framed + data);
}

nlohmann::json RunManifest::to_json() const
{
  nlohmann::json j;
  j["command_line"] = command_line;
  j["model"] = {{"path", model_path}, {"sha256", model_hash}, {"git_blob", model_blob}};
  j["seed"] = seed;
  j["tool_version"] = tool_version;
  j["started"] = started;
  j["finished"] = finished;
  j["wall_seconds"] = wall_seconds;
  j["config"] = config;
  j["outputs"] = nlohmann::json::array();
  for (const auto & o : outputs) {
    nlohmann::json e{{"path", o}};
    if (std::filesystem::exists(o)) {
      const std::string bytes = read_file(o);
      e["sha256"] = sha256_hex(bytes);
      e["git_blob"] = git_blob_id(bytes);
    }
    j["outputs"].push_back(e);
  }
  j["verdicts"] = nlohmann::json::object();
  for (const auto & [k, v] : verdicts) { j["verdicts"][k] = v; }
  return j;
}

const char * tool_version() { return "folcomp 1.0.0"; }

std::string utc_timestamp()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace folcomp

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "folcomp/report.hpp"

#include <cmath>
#include <filesystem>
#include <limits>

using namespace folcomp;

TEST_CASE("number formatting keeps 17 significant digits")
{
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(1.0) == "1");
  CHECK(std::stod(format_number(-2.5e-20)) == -2.5e-20);
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(std::stod(format_number(M_PI)) == M_PI);
}

TEST_CASE("digests match published vectors")
{
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  // `git hash-object` of a file containing "hello\n".
  CHECK(git_blob_id("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_id("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("audit CSV layout")
{
  AuditReport rep;
  rep.columns = {"r", "measured"};
  rep.units = {"length", "1/length"};
  rep.add({0.5, 2.0}, "certified", true, true);
  rep.add({1.0, 1.0 / 3.0}, "uncertain", false, false);
  CHECK(rep.pass);
  const std::string csv = audit_csv(rep);
  CHECK(csv ==
        "r [length],measured [1/length],certificate [label],asserted [bool],ok [bool]\n"
        "0.5,2,certified,1,1\n"
        "1,0.33333333333333331,uncertain,0,0\n");
  CHECK(table_csv({"a"}, {}, {{1.0}}) == "a [1]\n1\n");
}

TEST_CASE("files and manifests")
{
  const auto dir = std::filesystem::temp_directory_path() / "folcomp_report_test";
  std::filesystem::remove_all(dir);
  const std::string path = (dir / "sub" / "x.csv").string();
  write_file(path, "hello\n");
  CHECK(read_file(path) == "hello\n");
  RunManifest m;
  m.seed = 7;
  m.outputs = {path};
  m.verdicts = {{"compare", "pass"}};
  const auto j = m.to_json();
  CHECK(j["seed"] == 7);
  CHECK(j["outputs"][0]["git_blob"] == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(j["verdicts"]["compare"] == "pass");
  std::filesystem::remove_all(dir);
}

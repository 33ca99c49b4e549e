#include "folcomp/comparison.hpp"
#include "folcomp/connection.hpp"
#include "folcomp/errors.hpp"
#include "folcomp/report.hpp"
#include "folcomp/selftest.hpp"
#include "folcomp/stochastic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>

using namespace folcomp;
using nlohmann::json;

namespace
{

enum ExitCode
{
  kPass = 0,
  kUsage = 1,
  kFail = 2,
  kInapplicable = 3,
};

struct Common
{
  std::string model_path;
  bool allow_non_generating = false;
  std::string out;
  std::string manifest;
  std::uint64_t seed = 42;
  int threads = 1;
};

Vec parse_vector(const std::string & text)
{
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) { vals.push_back(std::stod(item)); }
  Vec v(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) { v[i] = vals[i]; }
  return v;
}

std::vector<double> parse_list(const std::string & text)
{
  const Vec v = parse_vector(text);
  return {v.data(), v.data() + v.size()};
}

FoliatedModel load_model(const Common & c)
{
  ValidationOptions opt;
  opt.require_bracket_generating = !c.allow_non_generating;
  return validate_model(load_model_spec(c.model_path), opt);
}

json matrix_json(const Mat & m)
{
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) { r.push_back(m(i, j)); }
    rows.push_back(r);
  }
  return rows;
}

GroupPoint point_or(const Geodesy & geo, const std::string & text, const GroupPoint & fallback)
{
  if (text.empty()) { return fallback; }
  const Vec c = parse_vector(text);
  if (c.size() != geo.group().coordinate_count()) { throw CLI::ValidationError("point", "wrong coordinate count"); }
  return geo.group().from_coordinates(c);
}

class Run
{
public:
  Run(std::string command, const Common & c) : command_(std::move(command)), c_(c), t0_(std::chrono::steady_clock::now())
  {
    manifest_.command_line = command_line_;
    manifest_.seed = c.seed;
    manifest_.tool_version = tool_version();
    manifest_.started = utc_timestamp();
    if (!c.model_path.empty()) {
      const std::string bytes = read_file(c.model_path);
      manifest_.model_path = c.model_path;
      manifest_.model_hash = sha256_hex(bytes);
      manifest_.model_blob = git_blob_id(bytes);
    }
  }

  static void set_command_line(int argc, char ** argv)
  {
    for (int i = 0; i < argc; ++i) { command_line_ += (i ? " " : "") + std::string(argv[i]); }
  }

  RunManifest & manifest() { return manifest_; }

  void output(const std::string & path, const std::string & content)
  {
    write_file(path, content);
    manifest_.outputs.push_back(path);
  }

  int finish(int code, const std::string & verdict)
  {
    manifest_.verdicts.push_back({command_, verdict});
    manifest_.finished = utc_timestamp();
    manifest_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    std::string path = c_.manifest;
    if (path.empty()) { path = c_.out.empty() ? "folcomp-" + command_ + ".manifest.json" : c_.out + ".manifest.json"; }
    write_file(path, manifest_.to_json().dump(2) + "\n");
    return code;
  }

private:
  static inline std::string command_line_;
  std::string command_;
  Common c_;
  std::chrono::steady_clock::time_point t0_;
  RunManifest manifest_;
};

int finish_audit(Run & run, const Common & c, const AuditReport & rep)
{
  if (!c.out.empty()) { run.output(c.out, audit_csv(rep)); }
  std::cout << audit_json(rep).dump(2) << "\n";
  return run.finish(rep.pass ? kPass : kFail, rep.pass ? "pass" : "fail");
}

int describe(const Common & c)
{
  Run run("describe", c);
  const FoliatedModel m = load_model(c);
  const Geometry geo(m);
  const TensorReport rep = geo.report();
  const Certificates & cert = m.certificates();
  json j;
  j["name"] = m.name();
  j["dim"] = m.dim();
  j["n_horizontal"] = m.n_horizontal();
  j["certificates"] = {{"antisymmetric", cert.antisymmetric},     {"jacobi", cert.jacobi},
                       {"vertical_subalgebra", cert.vertical_subalgebra}, {"bundle_like", cert.bundle_like},
                       {"bracket_generating", cert.bracket_generating},   {"minimal_leaves", cert.minimal_leaves},
                       {"totally_geodesic", cert.totally_geodesic},       {"carnot", cert.carnot}};
  j["step"] = m.step() ? json(*m.step()) : json(nullptr);
  j["frak_R"] = matrix_json(rep.frak_R);
  j["K"] = rep.K;
  j["yang_mills"] = rep.yang_mills_residual <= 1e-10;
  j["yang_mills_residual"] = rep.yang_mills_residual;
  j["decomposition_residual"] = rep.decomposition_residual;
  j["gb_total_bound"] = cert.totally_geodesic ? json(geo.gb_total_bound()) : json(nullptr);
  const std::string text = j.dump(2) + "\n";
  if (!c.out.empty()) { run.output(c.out, text); }
  std::cout << text;
  return run.finish(kPass, "ok");
}

int geodesic(const Common & c, const std::string & from, const std::string & to, const std::string & velocity,
             double length, int samples)
{
  Run run("geodesic", c);
  const FoliatedModel m = load_model(c);
  const Geodesy geo(m);
  const GroupPoint p = point_or(geo, from, geo.group().identity());
  GeodesicRecord g;
  if (!to.empty()) {
    DistanceOptions opt;
    opt.samples = samples;
    g = geo.distance(p, point_or(geo, to, p), opt);
  } else {
    if (velocity.empty()) { throw CLI::ValidationError("--velocity", "give --to or --velocity"); }
    g = geo.exp_map(p, parse_vector(velocity), length);
  }
  std::vector<std::string> cols{"t"}, units{"length"};
  for (int i = 0; i < geo.group().coordinate_count(); ++i) {
    cols.push_back("x" + std::to_string(i + 1));
    units.push_back("coordinate");
  }
  for (int i = 0; i < m.dim(); ++i) {
    cols.push_back("v" + std::to_string(i + 1));
    units.push_back("1");
  }
  std::vector<std::vector<double>> rows;
  for (const auto & s : g.samples) {
    std::vector<double> r{s.t};
    for (int i = 0; i < s.point.c.size(); ++i) { r.push_back(s.point.c[i]); }
    for (int i = 0; i < s.v.size(); ++i) { r.push_back(s.v[i]); }
    rows.push_back(r);
  }
  if (!c.out.empty()) { run.output(c.out, table_csv(cols, units, rows)); }
  json j{{"length", format_number(g.length)}, {"certificate", to_string(g.minimal_certificate)}, {"steps", g.steps}};
  std::cout << j.dump(2) << "\n";
  const bool ok = !std::isnan(g.length);
  return run.finish(ok ? kPass : kFail, to_string(g.minimal_certificate));
}

int compare(const Common & c, const std::string & kind, const std::string & radii, int directions, double tol)
{
  Run run("compare", c);
  const FoliatedModel m = load_model(c);
  const Geodesy geo(m);
  ComparisonOptions opt;
  opt.kind = kind == "coupled" ? ComparisonKind::coupled : ComparisonKind::laplacian;
  opt.tol = tol;
  return finish_audit(run, c, comparison_audit(geo, parse_list(radii), directions, opt));
}

int bonnet_myers(const Common & c, int samples)
{
  Run run("bonnet-myers", c);
  const Geodesy geo(load_model(c));
  BonnetMyersOptions opt;
  opt.seed = c.seed;
  return finish_audit(run, c, bonnet_myers_audit(geo, samples, opt));
}

struct SimFlags
{
  std::string kind = "paths";
  double t = 1.0;
  double dt = 1e-3;
  int paths = 10000;
  int refresh = 1;
  int stride = 1;
  double r = 2.0;
  std::string q;
  std::string mode = "total";
};

int simulate(const Common & c, const SimFlags & f)
{
  Run run("simulate", c);
  const FoliatedModel m = load_model(c);
  const Geodesy geo(m);
  SimConfig cfg;
  cfg.dt = f.dt;
  cfg.t_end = f.t;
  cfg.n_paths = f.paths;
  cfg.seed = c.seed;
  cfg.coupling_refresh = f.refresh;
  cfg.threads = c.threads;
  run.manifest().config = {{"kind", f.kind},       {"t", f.t},           {"dt", f.dt},
                           {"paths", f.paths},     {"refresh", f.refresh}, {"stride", f.stride},
                           {"threads", c.threads}, {"r", f.r},           {"mode", f.mode}};
  const GroupPoint e = geo.group().identity();
  const std::vector<double> times{0.25 * f.t, 0.5 * f.t, f.t};

  if (f.kind == "paths") {
    const Diffusion diff(geo);
    std::vector<std::string> cols{"path_id", "t"}, units{"1", "time"};
    for (int i = 0; i < geo.group().coordinate_count(); ++i) {
      cols.push_back("x" + std::to_string(i + 1));
      units.push_back("coordinate");
    }
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < cfg.n_paths; ++k) {
      const GroupPoint x = diff.marginals(e, cfg, static_cast<std::uint64_t>(k), {f.t})[0];
      std::vector<double> r{static_cast<double>(k), f.t};
      for (int i = 0; i < x.c.size(); ++i) { r.push_back(x.c[i]); }
      rows.push_back(r);
    }
    if (!c.out.empty()) { run.output(c.out, table_csv(cols, units, rows)); }
    std::cout << json{{"paths", cfg.n_paths}, {"t", f.t}}.dump(2) << "\n";
    return run.finish(kPass, "ok");
  }
  if (f.kind == "radial") { return finish_audit(run, c, radial_comparison_run(geo, e, cfg, times)); }
  if (f.kind == "exit") {
    std::vector<double> grid;
    for (int k = 0; k <= 8; ++k) { grid.push_back(0.5 * k); }
    return finish_audit(run, c, exit_tail(geo, e, grid, f.t, cfg, 2.0, 4.0, f.stride));
  }
  const GroupPoint q = f.q.empty() ? geo.shoot(e, 0.5 * unit(m.dim(), m.frame().horizontal_indices()[0]), 64)
                                   : point_or(geo, f.q, e);
  if (f.kind == "coupling") { return finish_audit(run, c, parallel_coupling_run(geo, e, q, cfg, times)); }
  if (f.kind == "lipschitz") {
    const DistanceTracker tracker(geo);
    const PointFunction clamp = [&](const GroupPoint & x) {
      if (tracker.lower(e, x) >= 2.0) { return 2.0; }
      const auto r = tracker.certified(e, x, nullptr);
      return std::min(2.0, r.ok ? r.d : tracker.upper(e, x));
    };
    return finish_audit(run, c, lipschitz_audit(geo, clamp, 1.0, {{e, q}}, f.t, cfg));
  }
  if (f.kind == "gradient") {
    const PointFunction smooth = [](const GroupPoint & x) {
      return std::sin(x.c[0]) * std::cos(0.5 * x.c[1]) + 0.3 * std::sin(x.c[x.c.size() - 1]);
    };
    std::vector<double> ts;
    for (double t : {0.1, 0.2, 0.5, 1.0}) {
      if (t <= f.t) { ts.push_back(t); }
    }
    const GradientMode mode = f.mode == "mixed" ? GradientMode::mixed : GradientMode::total;
    return finish_audit(run, c, gradient_bound_audit(geo, smooth, q, ts, cfg, mode));
  }
  // heatdiag
  const HeatDiagBound b = heat_diag_lower(geo, e, f.t, f.r, cfg);
  const std::string csv =
      table_csv({"t", "r", "bound", "std_error", "exit_probability", "exit_se", "volume", "volume_se"},
                {"time", "length", "1/volume", "1/volume", "1", "1", "volume", "volume"},
                {{f.t, f.r, b.value, b.std_error, b.exit_probability, b.exit_se, b.volume, b.volume_se}});
  if (!c.out.empty()) { run.output(c.out, csv); }
  std::cout << json{{"bound", format_number(b.value)}, {"std_error", format_number(b.std_error)}}.dump(2) << "\n";
  return run.finish(kPass, "ok");
}

int selftest(const Common & c, const std::string & dir, const std::string & model_dir)
{
  Common cc = c;
  if (cc.manifest.empty()) { cc.manifest = dir + "/manifest.json"; }
  Run run("selftest", cc);
  SelftestOptions opt;
  opt.seed = c.seed;
  opt.out_dir = dir;
  opt.model_dir = model_dir;
  opt.threads = c.threads;
  opt.log = &std::cerr;
  const auto results = run_selftest(opt);
  bool all = true;
  for (const auto & r : results) {
    all = all && r.pass;
    for (const auto & o : r.outputs) { run.manifest().outputs.push_back(o); }
    run.manifest().verdicts.push_back({"criterion " + std::to_string(r.id), r.pass ? "pass" : "fail"});
    std::cout << "criterion " << r.id << ": " << (r.pass ? "PASS" : "FAIL") << " " << r.name << ": " << r.detail
              << "\n";
  }
  run.manifest().outputs.push_back(dir + "/criteria.csv");
  run.manifest().config = {{"threads", c.threads}, {"model_dir", model_dir}};
  return run.finish(all ? kPass : kFail, all ? "pass" : "fail");
}

}  // namespace

int main(int argc, char ** argv)
{
  Run::set_command_line(argc, argv);
  CLI::App app{"Comparison geometry audits and stochastic checks for left-invariant foliated models"};
  app.require_subcommand(1);
  Common c;
  if (const char * env = std::getenv("FOLCOMP_THREADS")) { c.threads = std::max(1, std::atoi(env)); }

  const auto add_common = [&](CLI::App * sub, bool model) {
    if (model) {
      sub->add_option("model", c.model_path, "model JSON file")->required()->check(CLI::ExistingFile);
      sub->add_flag("--allow-non-generating", c.allow_non_generating, "accept models whose H is not bracket generating");
    }
    sub->add_option("--out", c.out, "output file");
    sub->add_option("--manifest", c.manifest, "manifest path (default <out>.manifest.json)");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto * describe_cmd = app.add_subcommand("describe", "certificates and curvature report as JSON");
  add_common(describe_cmd, true);

  std::string from, to, velocity;
  double length = 1.0;
  int samples = 64;
  auto * geodesic_cmd = app.add_subcommand("geodesic", "geodesic by distance solve or by initial velocity");
  add_common(geodesic_cmd, true);
  geodesic_cmd->add_option("--from", from, "start point coordinates, comma separated");
  geodesic_cmd->add_option("--to", to, "end point coordinates");
  geodesic_cmd->add_option("--velocity", velocity, "initial velocity, model basis");
  geodesic_cmd->add_option("--length", length, "length for --velocity")->check(CLI::PositiveNumber);
  geodesic_cmd->add_option("--samples", samples, "samples on the record")->check(CLI::NonNegativeNumber);

  std::string kind = "laplacian", radii = "0.25,0.5,1,1.5,2";
  int directions = 16;
  double tol = -1.0;
  auto * compare_cmd = app.add_subcommand("compare", "Laplacian comparison audit");
  add_common(compare_cmd, true);
  compare_cmd->add_option("--kind", kind, "laplacian or coupled")->check(CLI::IsMember({"laplacian", "coupled"}));
  compare_cmd->add_option("--radii", radii, "comma separated radii");
  compare_cmd->add_option("--directions", directions, "directions per radius")->check(CLI::PositiveNumber);
  compare_cmd->add_option("--tol", tol, "additive tolerance (negative: default)");

  int bm_samples = 10000;
  auto * bm_cmd = app.add_subcommand("bonnet-myers", "diameter audit for K > 0");
  add_common(bm_cmd, true);
  bm_cmd->add_option("--samples", bm_samples, "sampled pairs")->check(CLI::PositiveNumber);

  SimFlags sf;
  auto * sim_cmd = app.add_subcommand("simulate", "horizontal Brownian motion runs");
  add_common(sim_cmd, true);
  sim_cmd->add_option("--kind", sf.kind, "run kind")
      ->check(CLI::IsMember({"paths", "radial", "exit", "coupling", "lipschitz", "gradient", "heatdiag"}));
  sim_cmd->add_option("--t", sf.t, "final time")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--dt", sf.dt, "time step")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--paths", sf.paths, "number of paths")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--refresh", sf.refresh, "coupling refresh interval in steps")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--stride", sf.stride, "distance checks every stride steps (exit)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--r", sf.r, "ball radius (heatdiag)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--q", sf.q, "second point (coupling, lipschitz) or base point (gradient)");
  sim_cmd->add_option("--mode", sf.mode, "gradient mode")->check(CLI::IsMember({"total", "mixed"}));

  std::string st_dir = "selftest", model_dir = FOLCOMP_MODEL_DIR;
  auto * st_cmd = app.add_subcommand("selftest", "property suite on the bundled models");
  add_common(st_cmd, false);
  st_cmd->add_option("--dir", st_dir, "output directory");
  st_cmd->add_option("--models", model_dir, "bundled model directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*describe_cmd) { return describe(c); }
    if (*geodesic_cmd) { return geodesic(c, from, to, velocity, length, samples); }
    if (*compare_cmd) { return compare(c, kind, radii, directions, tol); }
    if (*bm_cmd) { return bonnet_myers(c, bm_samples); }
    if (*sim_cmd) { return simulate(c, sf); }
    if (*st_cmd) { return selftest(c, st_dir, model_dir); }
  } catch (const ValidationFailure & e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const SpecError & e) {
    std::cerr << "SpecError: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::Error & e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const InapplicableK & e) {
    std::cerr << "inapplicable: " << e.what() << "\n";
    return kInapplicable;
  } catch (const NotTotallyGeodesic & e) {
    std::cerr << "inapplicable: " << e.what() << "\n";
    return kInapplicable;
  } catch (const std::invalid_argument & e) {
    std::cerr << "invalid number: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}

#include "folcomp/selftest.hpp"

#include "folcomp/comparison.hpp"
#include "folcomp/connection.hpp"
#include "folcomp/errors.hpp"
#include "folcomp/report.hpp"
#include "folcomp/stochastic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>

namespace folcomp
{

namespace
{

const char * const kTensorModels[] = {"heisenberg", "engel_step3", "su2_berger", "abelian3"};
const char * const kAllModels[] = {"heisenberg", "engel_step3", "su2_berger", "su2_round", "abelian3", "euclidean3"};

class Suite
{
public:
  explicit Suite(const SelftestOptions & opt) : opt_(opt) {}

  FoliatedModel load(const std::string & name) const
  {
    ValidationOptions v;
    // The flat control with a two-plane is not bracket generating by design.
    v.require_bracket_generating = name != "abelian3";
    return validate_model(load_model_spec(opt_.model_dir + "/" + name + ".json"), v);
  }

  SimConfig sim(int paths, double t_end, int refresh = 1) const
  {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = t_end;
    cfg.n_paths = paths;
    cfg.seed = opt_.seed;
    cfg.coupling_refresh = refresh;
    cfg.threads = opt_.threads;
    return cfg;
  }

  std::string emit(CriterionResult & c, const std::string & stem, const std::string & csv) const
  {
    const std::string path = opt_.out_dir + "/" + stem + ".csv";
    write_file(path, csv);
    c.outputs.push_back(path);
    return path;
  }

  void emit(CriterionResult & c, const std::string & stem, const AuditReport & rep) const
  {
    emit(c, stem, audit_csv(rep));
  }

  std::ostream * log() const { return opt_.log; }
  std::uint64_t seed() const { return opt_.seed; }

private:
  SelftestOptions opt_;
};

std::string fmt(double x)
{
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

// Koszul formula for left-invariant fields in the model basis:
// 2<D_x y, z> = <[x,y],z> - <[y,z],x> + <[z,x],y>.
Vec koszul(const FoliatedModel & m, const Vec & x, const Vec & y)
{
  const int d = m.dim();
  Vec rhs(d);
  for (int w = 0; w < d; ++w) {
    const Vec z = unit(d, w);
    rhs[w] = 0.5 * (m.inner(bracket(m, x, y), z) - m.inner(bracket(m, y, z), x) + m.inner(bracket(m, z, x), y));
  }
  return m.metric().ldlt().solve(rhs);
}

Vec koszul_curvature(const FoliatedModel & m, const Vec & x, const Vec & y, const Vec & z)
{
  return koszul(m, x, koszul(m, y, z)) - koszul(m, y, koszul(m, x, z)) - koszul(m, bracket(m, x, y), z);
}

CriterionResult tensor_exactness(const Suite & s)
{
  CriterionResult c;
  c.id = 1;
  c.name = "tensor exactness";
  std::vector<std::vector<double>> rows;
  double worst[4] = {0, 0, 0, 0};
  int id = 0;
  for (const char * name : kTensorModels) {
    const FoliatedModel m = s.load(name);
    const Geometry geo(m);
    const int d = m.dim();
    const TensorReport rep = geo.report();
    const double a = (rep.frak_R - rep.frak_R_definitional).cwiseAbs().maxCoeff();
    double b = 0.0, rel = 0.0, sym = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const Vec x = unit(d, i), y = unit(d, j);
        for (int k = 0; k < d; ++k) {
          const Vec z = unit(d, k);
          b = std::max(b, (riem_D_via_decomposition(m, x, y, z) - koszul_curvature(m, x, y, z)).cwiseAbs().maxCoeff());
        }
        const Vec r = geo.adapted(x, y) - geo.levi_civita(x, y) - 0.5 * geo.torsion(x, y) + 0.5 * geo.j_map(x, y) +
                      0.5 * geo.j_map(y, x);
        rel = std::max(rel, r.cwiseAbs().maxCoeff());
        // Horizontal Ricci of the adapted connection: symmetric and blind to vertical parts.
        double uv = 0.0, vu = 0.0, hh = 0.0;
        for (int h : geo.algebra().horizontal_indices()) {
          const Vec e = unit(d, h);
          uv += geo.curvature(ConnectionKind::adapted, x, e, e).dot(y);
          vu += geo.curvature(ConnectionKind::adapted, y, e, e).dot(x);
          hh += geo.curvature(ConnectionKind::adapted, geo.algebra().proj_h(x), e, e).dot(geo.algebra().proj_h(y));
        }
        sym = std::max({sym, std::abs(uv - vu), std::abs(uv - hh)});
      }
    }
    rows.push_back({static_cast<double>(id++), a, b, rel, sym});
    worst[0] = std::max(worst[0], a);
    worst[1] = std::max(worst[1], b);
    worst[2] = std::max(worst[2], rel);
    worst[3] = std::max(worst[3], sym);
  }
  s.emit(c, "c01_tensor_exactness",
         table_csv({"model_id", "frak_R_decomposition", "riem_D_vs_koszul", "D_nabla_relation", "ricci_symmetry"},
                   {"1", "1", "1", "1", "1"}, rows));
  c.pass = worst[0] <= 1e-10 && worst[1] <= 1e-10 && worst[2] <= 1e-12 && worst[3] <= 1e-10;
  c.detail = "max residuals " + fmt(worst[0]) + ", " + fmt(worst[1]) + ", " + fmt(worst[2]) + ", " + fmt(worst[3]) +
             " (tol 1e-10, 1e-10, 1e-12, 1e-10)";
  return c;
}

CriterionResult named_values(const Suite & s)
{
  CriterionResult c;
  c.id = 2;
  c.name = "named values";
  struct Case
  {
    const char * model;
    std::vector<double> diag;
    double K;
  };
  const std::vector<Case> cases = {{"heisenberg", {-1.0, -1.0, 0.5}, -1.0},
                                   {"su2_round", {0.0, 0.0, 2.0}, 0.0},
                                   {"su2_berger", {}, 1.0}};
  std::vector<std::vector<double>> rows;
  bool ok = true;
  double worst = 0.0;
  int id = 0;
  for (const auto & cs : cases) {
    const Geometry geo(s.load(cs.model));
    const Mat def = geo.frak_R();
    double dev = 0.0;
    if (!cs.diag.empty()) {
      Mat expect = Mat::Zero(def.rows(), def.cols());
      for (std::size_t i = 0; i < cs.diag.size(); ++i) { expect(i, i) = cs.diag[i]; }
      dev = (def - expect).cwiseAbs().maxCoeff();
    }
    // K from the definitional tensor, independent of the assembled report.
    const double k_def = min_sym_eigenvalue(def);
    const double k_dev = std::max(std::abs(k_def - cs.K), std::abs(geo.report().K - cs.K));
    worst = std::max({worst, dev, k_dev});
    ok = ok && dev <= 1e-10 && k_dev <= 1e-10;
    rows.push_back({static_cast<double>(id++), dev, k_def, cs.K, k_dev});
  }
  s.emit(c, "c02_named_values",
         table_csv({"case_id", "tensor_deviation", "K_definitional", "K_expected", "K_deviation"},
                   {"1", "1/length^2", "1/length^2", "1/length^2", "1/length^2"}, rows));
  c.pass = ok;
  c.detail = "max deviation " + fmt(worst) + " (tol 1e-10)";
  return c;
}

CriterionResult index_forms(const Suite & s)
{
  CriterionResult c;
  c.id = 3;
  c.name = "index-form equality";
  std::mt19937_64 rng(s.seed());
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> len(0.5, 2.0);
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  int mid = 0;
  for (const char * name : kAllModels) {
    const FoliatedModel m = s.load(name);
    const Geodesy geo(m);
    const int d = m.dim();
    const auto & h = m.frame().horizontal_indices();
    for (int k = 0; k < 50; ++k) {
      Vec a(d), w(d);
      for (int i = 0; i < d; ++i) { a[i] = 0.5 * nd(rng); }
      for (int i = 0; i < d; ++i) { w[i] = nd(rng); }
      w *= len(rng) / w.norm();
      const GroupPoint p = geo.group().exp(a);
      const GeodesicRecord g = geo.record(p, w, 2000, 2000);
      // Horizontal field c0 + c1 t + c2 sin(c3 t) per horizontal frame slot.
      std::vector<std::array<double, 4>> coef;
      for (std::size_t i = 0; i < h.size(); ++i) { coef.push_back({nd(rng), nd(rng), nd(rng), 2.0 * nd(rng)}); }
      const auto field = [&](double t) {
        Vec x = Vec::Zero(d);
        for (std::size_t i = 0; i < h.size(); ++i) { x[h[i]] = coef[i][0] + coef[i][1] * t + coef[i][2] * std::sin(coef[i][3] * t); }
        return geo.to_model(x);
      };
      const auto deriv = [&](double t) {
        Vec x = Vec::Zero(d);
        for (std::size_t i = 0; i < h.size(); ++i) { x[h[i]] = coef[i][1] + coef[i][2] * coef[i][3] * std::cos(coef[i][3] * t); }
        return geo.to_model(x);
      };
      const double ir = geo.index_form(g, field, Geodesy::IndexMode::riemannian, deriv);
      const double ih = geo.index_form(g, field, Geodesy::IndexMode::horizontal, deriv);
      worst = std::max(worst, std::abs(ir - ih));
      rows.push_back({static_cast<double>(mid), static_cast<double>(k), g.length, ir, ih, std::abs(ir - ih)});
    }
    ++mid;
  }
  s.emit(c, "c03_index_forms",
         table_csv({"model_id", "pair_id", "length", "I_riemannian", "I_horizontal", "difference"},
                   {"1", "1", "length", "1/length", "1/length", "1/length"}, rows));
  c.pass = worst <= 1e-6;
  c.detail = std::to_string(rows.size()) + " pairs, max |difference| " + fmt(worst) + " (tol 1e-6)";
  return c;
}

CriterionResult laplacian_comparison(const Suite & s)
{
  CriterionResult c;
  c.id = 4;
  c.name = "horizontal Laplacian comparison";
  const std::vector<double> radii{0.25, 0.5, 1.0, 1.5, 2.0};
  const Geodesy heis(s.load("heisenberg"));
  ComparisonOptions co;
  co.tol = 5e-3;
  const AuditReport h = comparison_audit(heis, radii, 16, co);
  const Geodesy flat(s.load("abelian3"));
  co.tol = 2e-3;
  const AuditReport f = comparison_audit(flat, radii, 16, co);
  s.emit(c, "c04_laplacian_heisenberg", h);
  s.emit(c, "c04_laplacian_abelian", f);
  const double certified = h.summary_value("certified_rows");
  c.pass = h.pass && f.pass && certified > 0.0;
  c.detail = "heisenberg certified rows " + fmt(certified) + "/80, min margin " + fmt(h.summary_value("min_margin")) +
             " (tol 5e-3); abelian min margin " + fmt(f.summary_value("min_margin")) + " (tol 2e-3)";
  return c;
}

CriterionResult coupled_comparison(const Suite & s)
{
  CriterionResult c;
  c.id = 5;
  c.name = "coupled Laplacian comparison";
  ComparisonOptions co;
  co.kind = ComparisonKind::coupled;
  co.tol = 5e-3;
  const AuditReport h = comparison_audit(Geodesy(s.load("heisenberg")), {0.5, 1.0, 1.5}, 16, co);
  co.tol = 1e-6;
  const AuditReport f = comparison_audit(Geodesy(s.load("abelian3")), {0.5, 1.0, 1.5}, 16, co);
  s.emit(c, "c05_coupled_heisenberg", h);
  s.emit(c, "c05_coupled_abelian", f);
  double flat_max = 0.0;
  for (const auto & row : f.rows) { flat_max = std::max(flat_max, std::abs(row.values[2])); }
  const double certified = h.summary_value("certified_rows");
  c.pass = h.pass && f.pass && flat_max <= 1e-6 && certified > 0.0;
  c.detail = "heisenberg certified rows " + fmt(certified) + "/48, min margin " + fmt(h.summary_value("min_margin")) +
             " (tol 5e-3); abelian max |measured| " + fmt(flat_max) + " (tol 1e-6)";
  return c;
}

CriterionResult bonnet_myers(const Suite & s)
{
  CriterionResult c;
  c.id = 6;
  c.name = "Bonnet-Myers";
  BonnetMyersOptions bo;
  bo.seed = s.seed();
  const AuditReport rep = bonnet_myers_audit(Geodesy(s.load("su2_berger")), 10000, bo);
  s.emit(c, "c06_bonnet_myers", rep);
  int inapplicable = 0;
  for (const char * name : {"heisenberg", "abelian3", "su2_round", "engel_step3"}) {
    try {
      bonnet_myers_audit(Geodesy(s.load(name)), 10, bo);
    } catch (const NonPositiveK &) {
      ++inapplicable;
    }
  }
  const double dmax = rep.summary_value("max_certified_distance");
  const double bound = kPi * std::sqrt(2.0);
  c.pass = rep.pass && dmax <= bound * 1.01 && rep.summary_value("pairs") >= 10000 && inapplicable == 4;
  c.detail = "max certified distance " + fmt(dmax) + " <= " + fmt(bound) + " (1 + 1e-2) over " +
             fmt(rep.summary_value("pairs")) + " pairs; inapplicable on " + std::to_string(inapplicable) +
             "/4 K <= 0 models";
  return c;
}

CriterionResult flat_laws(const Suite & s)
{
  CriterionResult c;
  c.id = 7;
  c.name = "stochastic completeness and flat laws";
  const Geodesy heis(s.load("heisenberg"));
  const SemigroupEstimate one =
      semigroup_estimate(heis, [](const GroupPoint &) { return 1.0; }, heis.group().identity(), 1.0, s.sim(10000, 1.0));
  const FoliatedModel am = s.load("abelian3");
  const Geodesy flat(am);
  const int n = am.n_horizontal();
  std::vector<std::vector<double>> rows;
  bool ok = one.value == 1.0 && one.std_error == 0.0;
  rows.push_back({0.0, 1.0, one.value, one.std_error, 1.0, 0.0});
  for (double t : {0.5, 1.0}) {
    const SemigroupEstimate e = semigroup_estimate(
        flat, [](const GroupPoint & x) { return x.c.squaredNorm(); }, flat.group().identity(), t, s.sim(10000, t));
    const double expect = 2.0 * n * t;
    const double margin = 3.0 * e.std_error - std::abs(e.value - expect);
    ok = ok && margin >= 0.0;
    rows.push_back({1.0, t, e.value, e.std_error, expect, margin});
  }
  s.emit(c, "c07_flat_laws",
         table_csv({"case_id", "t", "estimate", "std_error", "expected", "margin"},
                   {"1", "time", "length^2", "length^2", "length^2", "length^2"}, rows));
  c.pass = ok;
  c.detail = "P_t 1 = " + fmt(one.value) + " (se " + fmt(one.std_error) + "); abelian second moment within 3 SE of 2nt";
  return c;
}

CriterionResult radial(const Suite & s)
{
  CriterionResult c;
  c.id = 8;
  c.name = "radial quantile domination";
  const Geodesy heis(s.load("heisenberg"));
  const AuditReport rep = radial_comparison_run(heis, heis.group().identity(), s.sim(10000, 1.0));
  s.emit(c, "c08_radial_heisenberg", rep);
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto & row : rep.rows) { min_margin = std::min(min_margin, row.values[6]); }
  c.pass = rep.pass && rep.rows.size() == 9;
  c.detail = "9 (t, q) rows, min margin " + fmt(min_margin) + " with 3 SE slack, uncertified fraction " +
             fmt(rep.summary_value("uncertified_fraction"));
  return c;
}

CriterionResult exits(const Suite & s)
{
  CriterionResult c;
  c.id = 9;
  c.name = "exit tails and heat diagonal";
  std::vector<double> grid;
  for (int k = 0; k <= 8; ++k) { grid.push_back(0.5 * k); }
  const Geodesy flat(s.load("abelian3"));
  const AuditReport a = exit_tail(flat, flat.group().identity(), grid, 1.0, s.sim(10000, 1.0));
  const Geodesy heis(s.load("heisenberg"));
  const AuditReport h = exit_tail(heis, heis.group().identity(), grid, 1.0, s.sim(4000, 1.0), 2.0, 4.0, 10);
  const Geodesy euc(s.load("euclidean3"));
  const HeatDiagBound b = heat_diag_lower(euc, euc.group().identity(), 0.25, 2.0, s.sim(10000, 0.25));
  const double exact = std::pow(4.0 * kPi * 0.5, -1.5);
  s.emit(c, "c09_exit_abelian", a);
  s.emit(c, "c09_exit_heisenberg", h);
  s.emit(c, "c09_heat_diagonal",
         table_csv({"t", "r", "bound", "std_error", "exit_probability", "exit_se", "volume", "volume_se", "exact"},
                   {"time", "length", "1/length^3", "1/length^3", "1", "1", "length^3", "length^3", "1/length^3"},
                   {{0.25, 2.0, b.value, b.std_error, b.exit_probability, b.exit_se, b.volume, b.volume_se, exact}}));
  const double sa = a.summary_value("slope"), sh = h.summary_value("slope");
  const bool heat_ok = b.value >= 0.0 && b.value <= exact + 3.0 * b.std_error;
  c.pass = a.pass && h.pass && sa <= -0.125 && sh < 0.0 && heat_ok;
  c.detail = "abelian slope " + fmt(sa) + " (<= -1/8), heisenberg slope " + fmt(sh) + " (< 0), heat bound " +
             fmt(b.value) + " <= " + fmt(exact) + " + 3 SE";
  return c;
}

CriterionResult coupling(const Suite & s)
{
  CriterionResult c;
  c.id = 10;
  c.name = "coupling contraction";
  const Geodesy flat(s.load("abelian3"));
  Vec q(3);
  q << 0.4, -0.3, 0.0;
  const AuditReport a = parallel_coupling_run(flat, flat.group().identity(), {q}, s.sim(1000, 1.0));
  double flat_dev = 0.0;
  for (const auto & row : a.rows) { flat_dev = std::max(flat_dev, std::abs(row.values[1] - q.norm()) + row.values[2]); }
  flat_dev = std::max(flat_dev, std::abs(a.summary_value("max_abs_change")));

  const Geodesy heis(s.load("heisenberg"));
  Vec qh = Vec::Zero(3);
  qh[0] = 0.5;
  const AuditReport h = parallel_coupling_run(heis, heis.group().identity(), {qh}, s.sim(4000, 1.0, 10));

  const Geodesy berger(s.load("su2_berger"));
  Vec wb = Vec::Zero(3);
  wb[0] = 0.5;
  const GroupPoint qb = berger.shoot(berger.group().identity(), wb, 64);
  const AuditReport b = parallel_coupling_run(berger, berger.group().identity(), qb, s.sim(4000, 1.0, 10));
  s.emit(c, "c10_coupling_abelian", a);
  s.emit(c, "c10_coupling_heisenberg", h);
  s.emit(c, "c10_coupling_berger", b);
  const double d0 = b.summary_value("d0");
  const double final_mean = b.rows.back().values[1];
  c.pass = a.pass && flat_dev <= 1e-12 && h.pass && b.pass && final_mean < d0;
  c.detail = "abelian deviation " + fmt(flat_dev) + " (tol 1e-12); heisenberg and berger within e^{-Kt} d 1.02 + 3 SE;"
             " berger mean at t = 1 " + fmt(final_mean) + " < d = " + fmt(d0);
  return c;
}

CriterionResult lipschitz_gradient(const Suite & s)
{
  CriterionResult c;
  c.id = 11;
  c.name = "Lipschitz and gradient bounds";
  const Geodesy heis(s.load("heisenberg"));
  const GroupPoint e = heis.group().identity();
  // Distance to the origin clamped at 2: Lipschitz constant 1.
  const DistanceTracker tracker(heis);
  const PointFunction clamp = [&](const GroupPoint & x) {
    const double u = tracker.upper(e, x);
    if (tracker.lower(e, x) >= 2.0) { return 2.0; }
    const auto r = tracker.certified(e, x, nullptr);
    return std::min(2.0, r.ok ? r.d : u);
  };
  std::vector<std::pair<GroupPoint, GroupPoint>> pairs;
  const auto dirs = quasi_random_directions(3, 3);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    // Roughly radial pairs, where the clamped distance changes fastest.
    const GroupPoint p = heis.group().exp(0.3 * dirs[k]);
    pairs.push_back({p, heis.shoot(p, 0.5 * dirs[k], 64)});
  }
  const AuditReport lip = lipschitz_audit(heis, clamp, 1.0, pairs, 0.5, s.sim(1000, 0.5, 10));

  Vec x0(3);
  x0 << 0.2, -0.1, 0.3;
  const PointFunction coord = [](const GroupPoint & x) { return x.c[0]; };
  const PointFunction smooth = [](const GroupPoint & x) {
    return std::sin(x.c[0]) * std::cos(0.5 * x.c[1]) + 0.3 * std::sin(x.c[2]);
  };
  const AuditReport g1 = gradient_bound_audit(heis, coord, {x0}, {0.5}, s.sim(4000, 0.5));
  const AuditReport g2 = gradient_bound_audit(heis, smooth, {x0}, {0.1, 0.5, 1.0}, s.sim(4000, 1.0));
  const AuditReport mix =
      gradient_bound_audit(heis, smooth, {x0}, {0.1, 0.2, 0.5, 1.0}, s.sim(4000, 1.0), GradientMode::mixed);
  s.emit(c, "c11_lipschitz_heisenberg", lip);
  s.emit(c, "c11_gradient_coordinate", g1);
  s.emit(c, "c11_gradient_smooth", g2);
  s.emit(c, "c11_gradient_mixed", mix);
  double worst_ratio = 0.0;
  for (const auto & row : lip.rows) { worst_ratio = std::max(worst_ratio, row.values[2]); }
  c.pass = lip.pass && lip.rows.size() == pairs.size() && g1.pass && g2.pass && mix.pass;
  c.detail = "lipschitz max ratio " + fmt(worst_ratio) + " <= e^0.5 1.02 + 3 SE; gradient K = " +
             fmt(g2.summary_value("K_gb")) + "; mixed max ratio " + fmt(mix.summary_value("max_ratio")) +
             " <= " + fmt(mix.summary_value("ceiling"));
  return c;
}

}  // namespace

std::vector<CriterionResult> run_selftest(const SelftestOptions & opt)
{
  const Suite suite(opt);
  const std::vector<std::function<CriterionResult(const Suite &)>> criteria = {
      tensor_exactness, named_values, index_forms, laplacian_comparison, coupled_comparison, bonnet_myers,
      flat_laws,        radial,       exits,       coupling,             lipschitz_gradient};
  std::vector<CriterionResult> out;
  std::vector<std::vector<double>> rows;
  for (const auto & run : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult c;
    try {
      c = run(suite);
    } catch (const std::exception & e) {
      c.id = static_cast<int>(out.size()) + 1;
      c.name = "criterion " + std::to_string(c.id);
      c.pass = false;
      c.detail = std::string("error: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opt.log) {
      *opt.log << "criterion " << c.id << " " << (c.pass ? "PASS" : "FAIL") << " " << c.name << ": " << c.detail
               << " [" << fmt(c.seconds) << " s]" << std::endl;
    }
    out.push_back(c);
  }
  std::string csv = "criterion [1],name [label],pass [bool],detail [text]\n";
  for (const auto & c : out) {
    csv += std::to_string(c.id) + "," + c.name + "," + (c.pass ? "1" : "0") + ",\"" + c.detail + "\"\n";
  }
  write_file(opt.out_dir + "/criteria.csv", csv);
  return out;
}

}  // namespace folcomp

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "folcomp/errors.hpp"
#include "folcomp/stochastic.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

using namespace folcomp;
using folcomp::test::load;

namespace
{

SimConfig small(int paths, double t_end = 1.0, double dt = 1e-2)
{
  SimConfig cfg;
  cfg.n_paths = paths;
  cfg.t_end = t_end;
  cfg.dt = dt;
  return cfg;
}

// Probabilists' Gauss-Hermite rule (weight e^{-x^2/2} / sqrt(2 pi)) by Golub-Welsch.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int n)
{
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) { jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k)); }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  const Eigen::VectorXd w = es.eigenvectors().row(0).transpose().array().square();
  return {es.eigenvalues(), w};
}

// E f(p exp(sqrt(2 dt) sum g_i X_i)) - f(p) - dt Delta_H f(p), expectation by quadrature.
double local_weak_error(const Geodesy & geo, const PointFunction & f, const GroupPoint & p, double dt)
{
  const FoliatedModel & m = geo.model();
  const auto & h = m.frame().horizontal_indices();
  REQUIRE(h.size() == 2);
  const auto [x, w] = gauss_hermite(24);
  const double s = std::sqrt(2.0 * dt);
  double mean = 0.0;
  for (int a = 0; a < x.size(); ++a) {
    for (int b = 0; b < x.size(); ++b) {
      Vec v = Vec::Zero(m.dim());
      v[h[0]] = s * x[a];
      v[h[1]] = s * x[b];
      mean += w[a] * w[b] * f(geo.mul_exp_frame(p, v));
    }
  }
  // Sum of second derivatives along the one-parameter subgroups of the frame.
  const double e = 1e-4;
  double lap = 0.0;
  for (int i : h) {
    const Vec u = e * unit(m.dim(), i);
    lap += (f(geo.mul_exp_frame(p, u)) - 2.0 * f(p) + f(geo.mul_exp_frame(p, -u))) / (e * e);
  }
  return mean - f(p) - dt * lap;
}

}  // namespace

TEST_CASE("constant function has exact semigroup value")
{
  const Geodesy geo(load("heisenberg"));
  const auto est = semigroup_estimate(geo, [](const GroupPoint &) { return 1.0; }, geo.group().identity(), 0.5,
                                      small(500));
  CHECK(est.value == 1.0);
  CHECK(est.std_error == 0.0);
  CHECK(est.n_paths == 500);
}

TEST_CASE("flat second moment grows like 2nt")
{
  const FoliatedModel m = load("abelian3");
  const Geodesy geo(m);
  const int n = m.n_horizontal();
  for (double t : {0.25, 1.0}) {
    const auto est = semigroup_estimate(geo, [](const GroupPoint & x) { return x.c.squaredNorm(); },
                                        geo.group().identity(), t, small(4000));
    CHECK(std::abs(est.value - 2.0 * n * t) <= 3.0 * est.std_error);
  }
  // Vertical coordinates do not move.
  const PathRecord rec = hbm_path(geo, geo.group().identity(), small(1), 7);
  for (int k : m.spec().vertical_indices) { CHECK(rec.points.back().c[k] == 0.0); }
  CHECK(rec.noise.size() + 1 == rec.points.size());
}

TEST_CASE("Heisenberg moments")
{
  const FoliatedModel m = load("heisenberg");
  const Geodesy geo(m);
  const GroupPoint e = geo.group().identity();
  const auto z = semigroup_estimate(geo, [](const GroupPoint & x) { return x.c[2]; }, e, 1.0, small(4000));
  CHECK(std::abs(z.value) <= 3.0 * z.std_error);
  const auto xx = semigroup_estimate(geo, [](const GroupPoint & x) { return x.c[0] * x.c[0]; }, e, 1.0, small(4000));
  CHECK(std::abs(xx.value - 2.0) <= 3.0 * xx.std_error);
}

TEST_CASE("runs are deterministic across repeats and thread counts")
{
  const Geodesy geo(load("heisenberg"));
  const GroupPoint e = geo.group().identity();
  const PathRecord a = hbm_path(geo, e, small(1), 3);
  const PathRecord b = hbm_path(geo, e, small(1), 3);
  const PathRecord c = hbm_path(geo, e, small(1), 4);
  CHECK(a.points.back().c == b.points.back().c);
  CHECK(a.points.back().c != c.points.back().c);
  const auto f = [](const GroupPoint & x) { return std::cos(x.c[0]) + x.c[2]; };
  SimConfig one = small(300);
  SimConfig two = one;
  two.threads = 2;
  CHECK(semigroup_estimate(geo, f, e, 0.5, one).value == semigroup_estimate(geo, f, e, 0.5, two).value);
}

TEST_CASE("order statistic quantiles")
{
  std::vector<double> x(1001);
  std::iota(x.begin(), x.end(), 0.0);
  const auto [q, se] = quantile_with_se(x, 0.5);
  CHECK(q == 500.0);
  // Binomial spread sqrt(n q (1 - q)) ~ 15.8 indices.
  CHECK(se == doctest::Approx(16.0).epsilon(0.07));
  CHECK(std::isnan(quantile_with_se({}, 0.5).first));
}

TEST_CASE("flat coupling keeps the distance")
{
  const Geodesy geo(load("abelian3"));
  Vec q(3);
  q << 0.7, -0.2, 0.3;
  const AuditReport rep = parallel_coupling_run(geo, geo.group().identity(), {q}, small(50));
  CHECK(rep.pass);
  for (const auto & row : rep.rows) {
    CHECK(row.values[1] == doctest::Approx(q.norm()).epsilon(1e-12));
    CHECK(row.values[2] <= 1e-12);
  }
}

TEST_CASE("Heisenberg coupling contracts within the bound")
{
  const Geodesy geo(load("heisenberg"));
  Vec q(3);
  q << 0.5, 0.0, 0.0;
  SimConfig cfg = small(200, 0.5);
  cfg.coupling_refresh = 5;
  const AuditReport rep = parallel_coupling_run(geo, geo.group().identity(), {q}, cfg, {0.25, 0.5});
  CHECK(rep.pass);
  CHECK(rep.summary_value("lost_fraction") <= 0.05);
}

TEST_CASE("flat Lipschitz audit is exact for linear functions")
{
  const Geodesy geo(load("abelian3"));
  const auto f = [](const GroupPoint & x) { return x.c[0]; };
  Vec q(3);
  q << 0.4, 0.0, 0.0;
  const AuditReport rep = lipschitz_audit(geo, f, 1.0, {{geo.group().identity(), {q}}}, 0.5, small(50));
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].values[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.pass);
}

TEST_CASE("exit tail")
{
  const Geodesy flat(load("abelian3"));
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 3.0, 4.0};
  const AuditReport rep = exit_tail(flat, flat.group().identity(), grid, 1.0, small(2000));
  CHECK(rep.pass);
  CHECK(rep.rows.front().values[1] == 1.0);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) { CHECK(rep.rows[i].values[1] <= rep.rows[i - 1].values[1]); }
  CHECK(rep.summary_value("slope") < 0.0);
  CHECK_THROWS_AS(exit_tail(Geodesy(load("su2_berger")), GroupPoint{Vec(Vec::Unit(4, 0))}, grid, 1.0, small(10)),
                  InapplicableK);
}

TEST_CASE("heat kernel diagonal lower bound on the Euclidean model")
{
  const Geodesy geo(load("euclidean3"));
  SimConfig cfg = small(2000, 0.25);
  const HeatDiagBound b = heat_diag_lower(geo, geo.group().identity(), 0.25, 2.0, cfg, 20000);
  const double exact = std::pow(4.0 * kPi * 0.5, -1.5);
  // Ball volume of radius 2.
  CHECK(std::abs(b.volume - 4.0 / 3.0 * kPi * 8.0) <= 3.0 * b.volume_se);
  CHECK(b.value - 3.0 * b.std_error <= exact);
  CHECK(b.value > 0.0);
}

TEST_CASE("radial comparison")
{
  const Geodesy flat(load("abelian3"));
  const AuditReport rep = radial_comparison_run(flat, flat.group().identity(), small(2000));
  CHECK(rep.pass);
  CHECK(rep.rows.size() == 9);
  CHECK_THROWS_AS(radial_comparison_run(Geodesy(load("su2_berger")), GroupPoint{Vec(Vec::Unit(4, 0))}, small(10)),
                  InapplicableK);
}

TEST_CASE("gradient bound audits")
{
  const Geodesy flat(load("abelian3"));
  const auto f = [](const GroupPoint & x) { return std::sin(x.c[0]) * std::cos(0.5 * x.c[1]); };
  Vec x0(3);
  x0 << 0.3, -0.2, 0.1;
  const AuditReport tot = gradient_bound_audit(flat, f, {x0}, {0.1, 0.5}, small(1000));
  CHECK(tot.pass);

  const Geodesy heis(load("heisenberg"));
  const auto g = [](const GroupPoint & x) { return std::sin(x.c[0] + 0.3 * x.c[2]); };
  const AuditReport mix = gradient_bound_audit(heis, g, {x0}, {0.1, 0.5}, small(1000), GradientMode::mixed);
  CHECK(mix.pass);
  CHECK(mix.summary_value("ceiling") == doctest::Approx(std::sqrt(2.0) * std::exp(1.0) / std::sqrt(0.1)));
  CHECK_THROWS_AS(gradient_bound_audit(Geodesy(load("engel_step3")), g, {Vec(Vec::Zero(4))}, {0.1}, small(10),
                                       GradientMode::mixed),
                  NotTotallyGeodesic);
}

TEST_CASE("one-step weak consistency")
{
  const Geodesy heis(load("heisenberg"));
  Vec p(3);
  p << 0.4, -0.7, 0.3;
  const PointFunction z2 = [](const GroupPoint & x) { return x.c[2] * x.c[2]; };
  // Quadratic in the increment: the scheme is exact at first order and the FD Laplacian is exact.
  for (double dt : {0.1, 0.01}) { CHECK(std::abs(local_weak_error(heis, z2, {p}, dt)) <= 1e-7); }

  const Geodesy berger(load("su2_berger"));
  Vec q(4);
  q << 0.8, 0.2, -0.4, 0.4;
  const GroupPoint qp{Vec(q.normalized())};
  const PointFunction f = [](const GroupPoint & x) { return x.c[1] * x.c[1] + x.c[0] * x.c[3]; };
  const double e1 = std::abs(local_weak_error(berger, f, qp, 0.02));
  const double e2 = std::abs(local_weak_error(berger, f, qp, 0.01));
  CHECK(e1 > 0.0);
  // O(dt^2) local error: halving dt divides it by about 4.
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("left translation maps paths to paths")
{
  const Geodesy geo(load("engel_step3"));
  const Diffusion diff(geo);
  Vec a(4), b(4);
  a << 0.3, -0.2, 0.5, 0.1;
  b << -0.6, 0.4, 0.2, -0.3;
  const GroupPoint p = geo.group().exp(a), g = geo.group().exp(b);
  const SimConfig cfg = small(1, 0.5);
  for (std::uint64_t k = 0; k < 5; ++k) {
    const GroupPoint x = diff.marginals(p, cfg, k, {0.5})[0];
    const GroupPoint y = diff.marginals(geo.group().mul(g, p), cfg, k, {0.5})[0];
    CHECK((geo.group().mul(g, x).c - y.c).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

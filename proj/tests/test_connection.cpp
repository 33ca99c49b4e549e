#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "folcomp/connection.hpp"
#include "folcomp/errors.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace folcomp;
using folcomp::test::load;
using folcomp::test::max_abs;

namespace
{

const char * const kModels[] = {"heisenberg", "engel_step3", "su2_round", "su2_berger", "abelian3"};

// Koszul formula for left-invariant fields, solved against the metric:
// 2<D_x y, z> = <[x,y],z> - <[y,z],x> + <[z,x],y>.
Vec koszul_oracle(const FoliatedModel & m, const Vec & x, const Vec & y)
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
  return koszul_oracle(m, x, koszul_oracle(m, y, z)) - koszul_oracle(m, y, koszul_oracle(m, x, z)) -
         koszul_oracle(m, bracket(m, x, y), z);
}

Vec random_vec(std::mt19937_64 & rng, int d)
{
  std::normal_distribution<double> n;
  Vec v(d);
  for (int i = 0; i < d; ++i) { v[i] = n(rng); }
  return v;
}

}  // namespace

TEST_CASE("levi-civita agrees with the Koszul oracle")
{
  const FoliatedModel h = load("heisenberg");
  CHECK(max_abs(levi_civita(h, unit(3, 0), unit(3, 1)) - 0.5 * unit(3, 2)) < 1e-15);
  CHECK(max_abs(levi_civita(h, unit(3, 0), unit(3, 2)) + 0.5 * unit(3, 1)) < 1e-15);
  CHECK(max_abs(levi_civita(load("abelian3"), unit(3, 0), unit(3, 1))) == 0.0);
  for (const char * name : kModels) {
    const FoliatedModel m = load(name);
    const int d = m.dim();
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        CHECK(max_abs(levi_civita(m, unit(d, a), unit(d, b)) - koszul_oracle(m, unit(d, a), unit(d, b))) < 1e-13);
      }
    }
  }
}

TEST_CASE("connection identities on basis triples")
{
  for (const char * name : kModels) {
    const Geometry geo(load(name));
    const int d = geo.dim();
    for (int a = 0; a < d; ++a) {
      const Vec x = unit(d, a);
      for (int b = 0; b < d; ++b) {
        const Vec y = unit(d, b);
        // torsion-free Levi-Civita
        CHECK(max_abs(geo.levi_civita(x, y) - geo.levi_civita(y, x) - geo.bracket(x, y)) < 1e-12);
        // relation between D and nabla
        const Vec rel = geo.adapted(x, y) - geo.levi_civita(x, y) - 0.5 * geo.torsion(x, y) + 0.5 * geo.j_map(x, y) +
                        0.5 * geo.j_map(y, x);
        CHECK(max_abs(rel) < 1e-12);
        // torsion is vertical
        CHECK(max_abs(geo.algebra().proj_h(geo.torsion(x, y))) < 1e-15);
        for (int c = 0; c < d; ++c) {
          const Vec z = unit(d, c);
          for (auto kind : {ConnectionKind::levi_civita, ConnectionKind::adapted, ConnectionKind::circ}) {
            CHECK(std::abs(geo.connection(kind, x, y).dot(z) + y.dot(geo.connection(kind, x, z))) < 1e-12);
          }
          // skew J
          CHECK(std::abs(geo.j_map(z, x).dot(y) + x.dot(geo.j_map(z, y))) < 1e-12);
          // <Tor(Z, X), V> = <Tor(V, X), Z> for Z, V vertical, X horizontal
          if (!geo.algebra().is_horizontal(a) && geo.algebra().is_horizontal(b) && !geo.algebra().is_horizontal(c)) {
            CHECK(std::abs(geo.torsion(x, y).dot(z) - geo.torsion(z, y).dot(x)) < 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("adapted connection preserves the splitting")
{
  for (const char * name : kModels) {
    const Geometry geo(load(name));
    const FrameAlgebra & g = geo.algebra();
    const int d = geo.dim();
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        const Vec out = geo.adapted(unit(d, a), unit(d, b));
        if (g.is_horizontal(b)) {
          CHECK(max_abs(g.proj_v(out)) == 0.0);
        } else {
          CHECK(max_abs(g.proj_h(out)) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("torsion table and J map on Heisenberg")
{
  const FoliatedModel h = load("heisenberg");
  const Vec x1 = unit(3, 0), x2 = unit(3, 1), z = unit(3, 2);
  CHECK(max_abs(torsion(h, x1, x2) + z) < 1e-15);
  CHECK(max_abs(torsion(h, z, z)) == 0.0);
  CHECK(max_abs(torsion(h, x1, x1)) == 0.0);
  CHECK(max_abs(j_map(h, z, x1) + x2) < 1e-15);
  CHECK(max_abs(j_map(h, z, x2) - x1) < 1e-15);
  CHECK(max_abs(j_map(h, x1, x2)) == 0.0);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) { CHECK(max_abs(adapted_connection(h, unit(3, a), unit(3, b))) < 1e-15); }
  }
  // On SU(2) the vertical direction rotates the horizontal plane: nabla_e3 e1 = [e3, e1]_H = 2 e2.
  const FoliatedModel s = load("su2_round");
  CHECK(max_abs(adapted_connection(s, z, x1) - 2.0 * x2) < 1e-15);
  CHECK(max_abs(adapted_connection(s, x1, x2)) < 1e-15);
  CHECK(max_abs(adapted_connection(load("abelian3"), x1, z)) == 0.0);
}

TEST_CASE("torsion on mixed pairs is the C tensor")
{
  for (const char * name : kModels) {
    const Geometry geo(load(name));
    const FrameAlgebra & g = geo.algebra();
    const int d = geo.dim();
    for (int a : g.horizontal_indices()) {
      for (int b : g.horizontal_indices()) {
        CHECK(max_abs(geo.torsion(unit(d, a), unit(d, b)) + g.proj_v(g.bracket(unit(d, a), unit(d, b)))) < 1e-14);
      }
      for (int u : g.vertical_indices()) {
        CHECK(max_abs(geo.torsion(unit(d, a), unit(d, u)) - geo.c_map(unit(d, a), unit(d, u))) < 1e-14);
      }
    }
  }
}

TEST_CASE("C tensor")
{
  const FoliatedModel h = load("heisenberg");
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) { CHECK(c_tensor(h, unit(3, a), unit(3, b), unit(3, c)) == 0.0); }
    }
  }
  const FoliatedModel e = load("engel_step3");
  // <C_X1 X3, X4> = -1/2 (<[X1,X3],X4> + <X3,[X1,X4]>) = -1/2
  CHECK(c_tensor(e, unit(4, 0), unit(4, 2), unit(4, 3)) == doctest::Approx(-0.5));
  CHECK(c_tensor(e, unit(4, 2), unit(4, 2), unit(4, 3)) == 0.0);
}

TEST_CASE("curvature against the Koszul oracle and the A decomposition")
{
  for (const char * name : kModels) {
    const FoliatedModel m = load(name);
    const Geometry geo(m);
    const int d = m.dim();
    double worst_direct = 0.0, worst_decomp = 0.0;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        for (int c = 0; c < d; ++c) {
          const Vec x = unit(d, a), y = unit(d, b), z = unit(d, c);
          const Vec direct = curvature(m, ConnectionKind::levi_civita, x, y, z);
          worst_direct = std::max(worst_direct, max_abs(direct - koszul_curvature(m, x, y, z)));
          worst_decomp = std::max(worst_decomp, max_abs(riem_D_via_decomposition(m, x, y, z) - direct));
        }
      }
    }
    CHECK(worst_direct < 1e-12);
    CHECK(worst_decomp < 1e-10);
  }
}

TEST_CASE("sectional curvatures")
{
  const FoliatedModel h = load("heisenberg");
  const Vec x1 = unit(3, 0), x2 = unit(3, 1);
  CHECK(curvature(h, ConnectionKind::levi_civita, x1, x2, x2).dot(x1) == doctest::Approx(-0.75).epsilon(1e-14));
  const FoliatedModel s = load("su2_round");
  CHECK(curvature(s, ConnectionKind::levi_civita, x1, x2, x2).dot(x1) == doctest::Approx(1.0).epsilon(1e-14));
  const FoliatedModel a = load("abelian3");
  CHECK(max_abs(curvature(a, ConnectionKind::adapted, x1, x2, x2)) == 0.0);
}

TEST_CASE("horizontal Ricci symmetry identities")
{
  std::mt19937_64 rng(11);
  for (const char * name : kModels) {
    const Geometry geo(load(name));
    const FrameAlgebra & g = geo.algebra();
    const int d = geo.dim();
    for (int k = 0; k < 10; ++k) {
      const Vec u = random_vec(rng, d), v = random_vec(rng, d);
      for (int i : g.horizontal_indices()) {
        const Vec x = unit(d, i);
        const double uv = geo.curvature(ConnectionKind::adapted, u, x, x).dot(v);
        const double vu = geo.curvature(ConnectionKind::adapted, v, x, x).dot(u);
        const double hh = geo.curvature(ConnectionKind::adapted, g.proj_h(u), x, x).dot(g.proj_h(v));
        CHECK(std::abs(uv - vu) < 1e-10);
        CHECK(std::abs(uv - hh) < 1e-10);
      }
    }
  }
}

TEST_CASE("named values of the Ricci-like tensor")
{
  const TensorReport h = frak_R_decomposed(load("heisenberg"));
  Mat expect = Mat::Zero(3, 3);
  expect.diagonal() << -1.0, -1.0, 0.5;
  CHECK((h.frak_R_definitional - expect).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(h.K == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(h.yang_mills_residual <= 1e-12);
  CHECK(h.symmetric);

  const TensorReport s = frak_R_decomposed(load("su2_round"));
  expect.diagonal() << 0.0, 0.0, 2.0;
  CHECK((s.frak_R_definitional - expect).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(s.K) < 1e-10);
  CHECK(s.components.ric_h(0, 0) == doctest::Approx(4.0));
  CHECK(s.components.torsion_pairing(0, 0) == doctest::Approx(4.0));
  CHECK(0.25 * s.components.j_pairing(2, 2) == doctest::Approx(2.0));

  const TensorReport b = frak_R_decomposed(load("su2_berger"));
  CHECK(b.K == doctest::Approx(1.0).epsilon(1e-12));
  const TensorReport b2 = frak_R_decomposed(canonical_variation(load("su2_round"), 2.0));
  CHECK((b2.frak_R_definitional - b.frak_R_definitional).cwiseAbs().maxCoeff() < 1e-12);

  const TensorReport a = frak_R_decomposed(load("abelian3"));
  CHECK(a.frak_R_definitional.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("decomposed and definitional tensors agree")
{
  for (const char * name : kModels) {
    const TensorReport r = frak_R_decomposed(load(name));
    CHECK(r.decomposition_residual <= 1e-10);
    CHECK(r.K == doctest::Approx(min_sym_eigenvalue(r.frak_R)).epsilon(1e-10));
    CHECK(r.symmetric == (r.yang_mills_residual <= 1e-10));
  }
}

TEST_CASE("mixed entries vanish on totally geodesic models")
{
  for (const char * name : {"heisenberg", "su2_round", "su2_berger"}) {
    const FoliatedModel m = load(name);
    const Geometry geo(m);
    const Mat r = geo.frak_R();
    for (int u : geo.algebra().vertical_indices()) {
      for (int x : geo.algebra().horizontal_indices()) { CHECK(std::abs(r(u, x)) < 1e-12); }
    }
  }
}

TEST_CASE("frame independence")
{
  std::mt19937_64 rng(5);
  for (const char * name : kModels) {
    const Geometry geo(load(name));
    const FrameAlgebra & g = geo.algebra();
    const int d = geo.dim();
    const int n = g.n_horizontal();
    Mat q = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) { q(i, j) = std::normal_distribution<double>()(rng); }
    }
    const Mat rot = Eigen::HouseholderQR<Mat>(q).householderQ();
    Mat frame = Mat::Zero(d, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) { frame(g.horizontal_indices()[j], i) = rot(j, i); }
    }
    CHECK((geo.frak_R(frame) - geo.frak_R()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("canonical variation law on step-two Carnot")
{
  const FoliatedModel h = load("heisenberg");
  const Geometry base(h);
  const int d = h.dim();
  const auto & hs = base.algebra().horizontal_indices();
  for (double eps : {0.5, 1.0, 2.0}) {
    const FoliatedModel he = canonical_variation(h, eps);
    const Geometry geo(he);
    // Bilinear form in model coordinates: u^T B^{-T} R B^{-1} v.
    const Mat binv = he.frame_basis().inverse();
    const Mat r_model = binv.transpose() * geo.frak_R() * binv;
    Mat law = Mat::Zero(d, d);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        const Vec u = h.to_frame(unit(d, a)), v = h.to_frame(unit(d, b));
        for (int i : hs) {
          const Vec xi = unit(d, i);
          law(a, b) += base.algebra().proj_h(base.j_map(u, xi)).dot(base.algebra().proj_h(base.j_map(v, xi))) /
                       (4.0 * eps * eps);
          law(a, b) -= base.torsion(xi, u).dot(base.torsion(xi, v)) / eps;
        }
      }
    }
    CHECK((r_model - law).cwiseAbs().maxCoeff() < 1e-10);
  }
  // Entry of the varied Heisenberg metric: frak_R_eps(X1, X1) = -1/eps.
  const Geometry g2(canonical_variation(h, 2.0));
  CHECK(g2.frak_R()(0, 0) == doctest::Approx(-0.5));
}

TEST_CASE("Carnot models: Yang-Mills and nonpositive K")
{
  for (const char * name : {"heisenberg", "engel_step3"}) {
    const TensorReport r = frak_R_decomposed(load(name));
    CHECK(r.symmetric);
    CHECK(r.K <= 1e-12);
    REQUIRE(r.carnot_formula_residuals.has_value());
    CHECK((*r.carnot_formula_residuals)[0] < 1e-12);
    CHECK((*r.carnot_formula_residuals)[1] < 1e-12);
    CHECK((*r.carnot_formula_residuals)[2] < 1e-12);
  }
}

TEST_CASE("gradient-bound constant")
{
  CHECK(gb_total_bound(load("heisenberg")) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(gb_total_bound(load("abelian3")) == 0.0);
  CHECK_THROWS_AS(gb_total_bound(load("engel_step3")), NotTotallyGeodesic);
  const Geometry h(load("heisenberg"));
  CHECK(h.components().j_pairing(2, 2) == doctest::Approx(2.0));
  CHECK(max_abs(h.horizontal_drift()) == 0.0);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "folcomp/errors.hpp"
#include "folcomp/model.hpp"
#include "test_support.hpp"

#include <random>

using namespace folcomp;
using folcomp::test::load;
using folcomp::test::max_abs;

namespace
{

// Solves <a, e_w>_G = <u, [x, e_w]>_G for every basis w.
Vec ad_star_oracle(const FoliatedModel & m, const Vec & x, const Vec & u)
{
  const int d = m.dim();
  Vec rhs(d);
  for (int w = 0; w < d; ++w) { rhs[w] = m.inner(u, bracket(m, x, unit(d, w))); }
  return m.metric().ldlt().solve(rhs);
}

Vec random_vec(std::mt19937_64 & rng, int d)
{
  std::normal_distribution<double> n;
  Vec v(d);
  for (int i = 0; i < d; ++i) { v[i] = n(rng); }
  return v;
}

}  // namespace

TEST_CASE("heisenberg certificates")
{
  const FoliatedModel m = load("heisenberg");
  const Certificates & c = m.certificates();
  CHECK(c.antisymmetric);
  CHECK(c.jacobi);
  CHECK(c.vertical_subalgebra);
  CHECK(c.bundle_like);
  CHECK(c.bracket_generating);
  CHECK(c.minimal_leaves);
  CHECK(c.totally_geodesic);
  CHECK(c.carnot);
  REQUIRE(m.step().has_value());
  CHECK(*m.step() == 2);
  CHECK(m.generation_depth() == 2);
  CHECK(m.nilpotency_class() == 2);
}

TEST_CASE("abelian with a two-plane is not bracket generating")
{
  const ModelSpec spec = load_model_spec(test::model_path("abelian3"));
  try {
    validate_model(spec);
    FAIL("expected ValidationFailure");
  } catch (const ValidationFailure & e) {
    CHECK(e.certificate() == "bracket_generating");
    CHECK(e.witness()[0] == 3);
  }
  const FoliatedModel waived = load("abelian3");
  CHECK_FALSE(waived.certificates().bracket_generating);
  CHECK(waived.is_abelian());
}

TEST_CASE("su2 certificates")
{
  for (const char * name : {"su2_round", "su2_berger"}) {
    const FoliatedModel m = load(name);
    CHECK(m.certificates().bracket_generating);
    CHECK(m.certificates().totally_geodesic);
    CHECK_FALSE(m.certificates().carnot);
    CHECK(m.nilpotency_class() == 0);
  }
  const FoliatedModel berger = load("su2_berger");
  CHECK(berger.metric()(2, 2) == doctest::Approx(0.5));
}

TEST_CASE("engel is step three and not totally geodesic")
{
  const FoliatedModel m = load("engel_step3");
  CHECK(m.certificates().carnot);
  CHECK(*m.step() == 3);
  CHECK_FALSE(m.certificates().totally_geodesic);
  CHECK(m.nilpotency_class() == 3);
}

TEST_CASE("totally geodesic iff step two on Carnot models")
{
  for (const char * name : {"heisenberg", "engel_step3"}) {
    const FoliatedModel m = load(name);
    REQUIRE(m.certificates().carnot);
    CHECK(m.certificates().totally_geodesic == (*m.step() == 2));
  }
}

TEST_CASE("bracket values")
{
  const FoliatedModel h = load("heisenberg");
  CHECK(max_abs(bracket(h, unit(3, 0), unit(3, 1)) - unit(3, 2)) == 0.0);
  const Vec u = Vec::LinSpaced(3, 0.3, 1.7);
  CHECK(max_abs(bracket(h, u, u)) == 0.0);
  const FoliatedModel s = load("su2_round");
  CHECK(max_abs(bracket(s, unit(3, 1), unit(3, 2)) - 2.0 * unit(3, 0)) == 0.0);
}

TEST_CASE("ad_star against the defining linear system")
{
  const FoliatedModel h = load("heisenberg");
  CHECK(max_abs(ad_star(h, unit(3, 0), unit(3, 2)) - unit(3, 1)) < 1e-15);
  CHECK(max_abs(ad_star(h, unit(3, 1), unit(3, 2)) + unit(3, 0)) < 1e-15);
  const FoliatedModel a = load("abelian3");
  CHECK(max_abs(ad_star(a, unit(3, 0), unit(3, 1))) == 0.0);

  std::mt19937_64 rng(7);
  for (const char * name : {"heisenberg", "engel_step3", "su2_round", "su2_berger"}) {
    const FoliatedModel m = load(name);
    for (int k = 0; k < 20; ++k) {
      const Vec x = random_vec(rng, m.dim()), u = random_vec(rng, m.dim());
      CHECK(max_abs(ad_star(m, x, u) - ad_star_oracle(m, x, u)) < 1e-12);
    }
  }
}

TEST_CASE("canonical variation")
{
  const FoliatedModel h = load("heisenberg");
  const FoliatedModel same = canonical_variation(h, 1.0);
  CHECK((same.metric() - h.metric()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(same.certificates().carnot == h.certificates().carnot);
  CHECK(same.certificates().totally_geodesic == h.certificates().totally_geodesic);

  const FoliatedModel h2 = canonical_variation(h, 2.0);
  CHECK(h2.inner(unit(3, 2), unit(3, 2)) == doctest::Approx(0.5));
  CHECK(h2.inner(unit(3, 0), unit(3, 0)) == doctest::Approx(1.0));
  CHECK(h2.certificates().bundle_like);
  CHECK(h2.certificates().minimal_leaves);

  CHECK_THROWS_AS(canonical_variation(h, 0.0), NonPositiveEpsilon);
  CHECK_THROWS_AS(canonical_variation(h, -1.0), NonPositiveEpsilon);
}

TEST_CASE("split")
{
  const FoliatedModel h = load("heisenberg");
  const auto [a, b] = split(h, unit(3, 0) + unit(3, 2));
  CHECK(max_abs(a - unit(3, 0)) == 0.0);
  CHECK(max_abs(b - unit(3, 2)) == 0.0);
  const auto [z1, z2] = split(h, Vec::Zero(3));
  CHECK(max_abs(z1) == 0.0);
  CHECK(max_abs(z2) == 0.0);
  const FoliatedModel berger = load("su2_berger");
  const Vec u = Vec::LinSpaced(3, -0.4, 2.2);
  const auto [uh, uv] = split(berger, u);
  CHECK(std::abs(berger.inner(uh, uv)) < 1e-15);
  CHECK(max_abs(uh + uv - u) == 0.0);
}

TEST_CASE("frame is orthonormal for a non-identity metric")
{
  ModelSpec spec = load_model_spec(test::model_path("heisenberg"));
  spec.metric = Mat::Identity(3, 3);
  spec.metric(0, 1) = spec.metric(1, 0) = 0.3;
  spec.metric(2, 2) = 2.5;
  const FoliatedModel m = validate_model(spec);
  const Mat b = m.frame_basis();
  CHECK((b.transpose() * m.metric() * b - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const Vec x = random_vec(rng, 3), y = random_vec(rng, 3);
    const Vec direct = bracket(m, x, y);
    const Vec via = m.from_frame(m.frame().bracket(m.to_frame(x), m.to_frame(y)));
    CHECK(max_abs(direct - via) < 1e-13);
  }
}

TEST_CASE("malformed specs")
{
  ModelSpec spec = load_model_spec(test::model_path("heisenberg"));
  ModelSpec overlap = spec;
  overlap.vertical_indices = {1, 2};
  CHECK_THROWS_AS(validate_model(overlap), SpecError);

  ModelSpec cross = spec;
  cross.metric = Mat::Identity(3, 3);
  cross.metric(0, 2) = cross.metric(2, 0) = 0.1;
  CHECK_THROWS_AS(validate_model(cross), SpecError);

  ModelSpec jac = spec;
  jac.structure_constants = {{0, 1, 2, 1.0}, {0, 2, 0, 1.0}};
  CHECK_THROWS_AS(validate_model(jac), ValidationFailure);

  ModelSpec bundle = spec;
  bundle.structure_constants = {{2, 0, 0, 1.0}};
  try {
    validate_model(bundle);
    FAIL("expected ValidationFailure");
  } catch (const ValidationFailure & e) {
    CHECK(e.certificate() == "bundle_like");
    CHECK(e.witness() == std::array<int, 3>{3, 1, 1});
  }

  CHECK_THROWS_AS(parse_model_spec("{\"dim\": 2"), SpecError);
  CHECK_THROWS_AS(parse_model_spec(R"({"dim": 2, "horizontal_indices": [3]})"), SpecError);
}

TEST_CASE("json round trip")
{
  const ModelSpec spec = load_model_spec(test::model_path("engel_step3"));
  const ModelSpec back = parse_model_spec(model_spec_to_json(spec));
  CHECK(back.dim == spec.dim);
  CHECK(back.structure_constants.size() == spec.structure_constants.size());
  CHECK(back.grading == spec.grading);
  CHECK(back.horizontal_indices == spec.horizontal_indices);
}

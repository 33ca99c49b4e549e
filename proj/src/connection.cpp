#include "folcomp/connection.hpp"

#include "folcomp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace folcomp
{

const char * to_string(ConnectionKind kind)
{
  switch (kind) {
    case ConnectionKind::levi_civita: return "levi_civita";
    case ConnectionKind::adapted: return "adapted";
    case ConnectionKind::circ: return "circ";
  }
  return "unknown";
}

double min_sym_eigenvalue(const Mat & a)
{
  if (a.rows() == 0) { return 0.0; }
  const Mat s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Geometry::Geometry(const FoliatedModel & m) : model_(m), dim_(m.dim())
{
  const FrameAlgebra & g = model_.frame();
  const int d = dim_;
  auto empty = [d]() { return Table(d, Mat::Zero(d, d)); };
  d_ = empty();
  nabla_ = empty();
  c_ = empty();
  tor_ = empty();
  j_ = empty();
  a_ = empty();

  auto lc = [&g](const Vec & x, const Vec & y) {
    return Vec(0.5 * g.bracket(x, y) - 0.5 * g.ad_star(x, y) - 0.5 * g.ad_star(y, x));
  };
  for (int a = 0; a < d; ++a) {
    const Vec x = unit(d, a);
    const Vec xh = g.proj_h(x), xv = g.proj_v(x);
    for (int b = 0; b < d; ++b) {
      const Vec y = unit(d, b);
      const Vec yh = g.proj_h(y), yv = g.proj_v(y);
      d_[a].col(b) = lc(x, y);
      c_[a].col(b) = -0.5 * g.proj_v(g.bracket(xh, yv) + g.ad_star(xh, yv));
      nabla_[a].col(b) = g.proj_h(lc(xh, yh)) + g.proj_h(g.bracket(xv, yh)) + g.proj_v(g.bracket(xh, yv)) +
                         c_[a].col(b) + g.proj_v(lc(xv, yv));
    }
  }
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      tor_[a].col(b) = nabla_[a].col(b) - nabla_[b].col(a) - g.bracket(unit(d, a), unit(d, b));
    }
  }
  // <J_z x, y> = <z, Tor(x, y)>
  for (int c = 0; c < d; ++c) {
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) { j_[c](b, a) = tor_[a](c, b); }
    }
  }
  circ_ = nabla_;
  for (int a = 0; a < d; ++a) {
    circ_[a] += j_[a];
    a_[a] = d_[a] - nabla_[a];
  }
  drift_ = Vec::Zero(d);
  for (int i : g.horizontal_indices()) { drift_ += nabla_[i].col(i); }
}

const Geometry::Table & Geometry::table(ConnectionKind kind) const
{
  switch (kind) {
    case ConnectionKind::levi_civita: return d_;
    case ConnectionKind::adapted: return nabla_;
    case ConnectionKind::circ: return circ_;
  }
  return nabla_;
}

Vec Geometry::apply(const Table & t, const Vec & x, const Vec & y) const
{
  Vec out = Vec::Zero(dim_);
  for (int a = 0; a < dim_; ++a) {
    if (x[a] != 0.0) { out.noalias() += x[a] * (t[a] * y); }
  }
  return out;
}

Mat Geometry::contract(const Table & t, const Vec & x) const
{
  Mat out = Mat::Zero(dim_, dim_);
  for (int a = 0; a < dim_; ++a) {
    if (x[a] != 0.0) { out += x[a] * t[a]; }
  }
  return out;
}

Vec Geometry::curvature(ConnectionKind kind, const Vec & x, const Vec & y, const Vec & z) const
{
  const Table & t = table(kind);
  return apply(t, x, apply(t, y, z)) - apply(t, y, apply(t, x, z)) - apply(t, bracket(x, y), z);
}

Vec Geometry::cov_torsion(const Vec & w, const Vec & x, const Vec & y) const
{
  return adapted(w, torsion(x, y)) - torsion(adapted(w, x), y) - torsion(x, adapted(w, y));
}

Vec Geometry::cov_a(const Vec & w, const Vec & x, const Vec & y) const
{
  return adapted(w, a_map(x, y)) - a_map(adapted(w, x), y) - a_map(x, adapted(w, y));
}

Vec Geometry::riem_D_decomposed(const Vec & x, const Vec & y, const Vec & z) const
{
  return curvature(ConnectionKind::adapted, x, y, z) + cov_a(x, y, z) - cov_a(y, x, z) + a_map(torsion(x, y), z) +
         a_map(x, a_map(y, z)) - a_map(y, a_map(x, z));
}

Mat Geometry::horizontal_frame(const std::optional<Mat> & frame) const
{
  if (frame) { return *frame; }
  const auto & hs = algebra().horizontal_indices();
  Mat f = Mat::Zero(dim_, static_cast<int>(hs.size()));
  for (std::size_t i = 0; i < hs.size(); ++i) { f(hs[i], static_cast<int>(i)) = 1.0; }
  return f;
}

Mat Geometry::frak_R(const std::optional<Mat> & frame) const
{
  const Mat xs = horizontal_frame(frame);
  const FrameAlgebra & g = algebra();
  const int d = dim_;
  Mat r = Mat::Zero(d, d);
  for (int a = 0; a < d; ++a) {
    const Vec u = unit(d, a);
    Vec w = Vec::Zero(d);
    for (int i = 0; i < xs.cols(); ++i) {
      const Vec xi = xs.col(i);
      w += curvature(ConnectionKind::adapted, u, xi, xi) - cov_torsion(xi, xi, u) - torsion(torsion(u, xi), xi);
    }
    r.row(a) = w.transpose();
  }
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      double s = 0.0;
      for (int i = 0; i < xs.cols(); ++i) {
        const Vec xi = xs.col(i);
        s += 0.25 * g.proj_h(j_map(unit(d, a), xi)).dot(g.proj_h(j_map(unit(d, b), xi)));
        s -= torsion(xi, unit(d, a)).dot(torsion(xi, unit(d, b)));
      }
      r(a, b) += s;
    }
  }
  return r;
}

TensorComponents Geometry::components(const std::optional<Mat> & frame) const
{
  const Mat xs = horizontal_frame(frame);
  const FrameAlgebra & g = algebra();
  const int d = dim_;
  TensorComponents c{Mat::Zero(d, d), Mat::Zero(d, d), Mat::Zero(d, d), Mat::Zero(d, d)};
  for (int a = 0; a < d; ++a) {
    const Vec u = unit(d, a);
    Vec ric = Vec::Zero(d), div = Vec::Zero(d);
    for (int i = 0; i < xs.cols(); ++i) {
      const Vec xi = xs.col(i);
      ric += curvature(ConnectionKind::adapted, u, xi, xi);
      div += cov_torsion(xi, xi, u);
    }
    c.ric_h.row(a) = ric.transpose();
    c.div_torsion.row(a) = div.transpose();
    for (int b = 0; b < d; ++b) {
      const Vec v = unit(d, b);
      for (int i = 0; i < xs.cols(); ++i) {
        const Vec xi = xs.col(i);
        c.torsion_pairing(a, b) += torsion(u, xi).dot(torsion(v, xi));
        c.j_pairing(a, b) += g.proj_h(j_map(u, xi)).dot(g.proj_h(j_map(v, xi)));
      }
    }
  }
  return c;
}

TensorReport Geometry::report() const
{
  TensorReport rep;
  const FrameAlgebra & g = algebra();
  const int d = dim_;
  rep.components = components();
  const TensorComponents & c = rep.components;
  rep.frak_R = Mat::Zero(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const bool ha = g.is_horizontal(a), hb = g.is_horizontal(b);
      double v = 0.0;
      if (ha && hb) {
        v = c.ric_h(a, b) - c.torsion_pairing(a, b);
      } else if (!ha && hb) {
        v = -c.torsion_pairing(a, b);
      } else if (ha && !hb) {
        v = -c.div_torsion(a, b) - 2.0 * c.torsion_pairing(b, a);
      } else {
        v = -c.div_torsion(a, b) + 0.25 * c.j_pairing(a, b) - 2.0 * c.torsion_pairing(a, b);
      }
      rep.frak_R(a, b) = v;
    }
  }
  rep.frak_R_definitional = frak_R();
  rep.decomposition_residual = (rep.frak_R - rep.frak_R_definitional).cwiseAbs().maxCoeff();
  rep.K = min_sym_eigenvalue(rep.frak_R_definitional);
  double ym = 0.0;
  for (int x : g.horizontal_indices()) {
    for (int u : g.vertical_indices()) {
      ym = std::max(ym, std::abs(c.div_torsion(x, u) + c.torsion_pairing(u, x)));
    }
  }
  rep.yang_mills_residual = ym;
  rep.symmetric = ym <= 1e-10;

  if (model_.certificates().carnot) {
    // Closed-form nilpotent expressions, evaluated as printed.
    const auto & hs = g.horizontal_indices();
    auto ad_ad = [&](const Vec & p, const Vec & q) {
      double s = 0.0;
      for (int i : hs) { s += bracket(unit(d, i), p).dot(bracket(unit(d, i), q)); }
      return s;
    };
    auto ad_adstar = [&](const Vec & p, const Vec & q) {
      double s = 0.0;
      for (int i : hs) { s += bracket(unit(d, i), p).dot(g.ad_star(unit(d, i), q)); }
      return s;
    };
    std::array<double, 4> res{0.0, 0.0, 0.0, 0.0};
    const Mat & r = rep.frak_R_definitional;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        const Vec ea = unit(d, a), eb = unit(d, b);
        const bool ha = g.is_horizontal(a), hb = g.is_horizontal(b);
        if (ha && hb) {
          res[0] = std::max(res[0], std::abs(r(a, b) + ad_ad(ea, eb)));
        } else if (!ha && hb) {
          res[1] = std::max(res[1], std::abs(r(a, b) + 0.5 * ad_adstar(eb, ea)));
        } else if (ha && !hb) {
          res[2] = std::max(res[2], std::abs(r(a, b) + 0.5 * ad_adstar(ea, eb)));
        } else {
          const double printed =
            0.25 * c.j_pairing(a, b) - ad_ad(ea, eb) - 0.5 * ad_adstar(ea, eb) - 0.5 * ad_adstar(ea, eb);
          res[3] = std::max(res[3], std::abs(r(a, b) - printed));
        }
      }
    }
    rep.carnot_formula_residuals = res;
  }
  return rep;
}

double Geometry::gb_total_bound() const
{
  if (!model_.certificates().totally_geodesic) {
    throw NotTotallyGeodesic("model '" + model_.name() + "' is not totally geodesic");
  }
  const TensorComponents c = components();
  return min_sym_eigenvalue(frak_R() - 0.25 * c.j_pairing);
}

Vec levi_civita(const FoliatedModel & m, const Vec & x, const Vec & y)
{
  const Geometry geo(m);
  return m.from_frame(geo.levi_civita(m.to_frame(x), m.to_frame(y)));
}

double c_tensor(const FoliatedModel & m, const Vec & x, const Vec & y, const Vec & z)
{
  const Geometry geo(m);
  return geo.c_map(m.to_frame(x), m.to_frame(y)).dot(m.to_frame(z));
}

Vec adapted_connection(const FoliatedModel & m, const Vec & x, const Vec & y)
{
  const Geometry geo(m);
  return m.from_frame(geo.adapted(m.to_frame(x), m.to_frame(y)));
}

Vec torsion(const FoliatedModel & m, const Vec & x, const Vec & y)
{
  const Geometry geo(m);
  return m.from_frame(geo.torsion(m.to_frame(x), m.to_frame(y)));
}

Vec j_map(const FoliatedModel & m, const Vec & z, const Vec & x)
{
  const Geometry geo(m);
  return m.from_frame(geo.j_map(m.to_frame(z), m.to_frame(x)));
}

Vec curvature(const FoliatedModel & m, ConnectionKind kind, const Vec & x, const Vec & y, const Vec & z)
{
  const Geometry geo(m);
  return m.from_frame(geo.curvature(kind, m.to_frame(x), m.to_frame(y), m.to_frame(z)));
}

Vec riem_D_via_decomposition(const FoliatedModel & m, const Vec & x, const Vec & y, const Vec & z)
{
  const Geometry geo(m);
  return m.from_frame(geo.riem_D_decomposed(m.to_frame(x), m.to_frame(y), m.to_frame(z)));
}

double frak_R(const FoliatedModel & m, const Vec & u, const Vec & v)
{
  const Geometry geo(m);
  return m.to_frame(u).dot(geo.frak_R() * m.to_frame(v));
}

TensorReport frak_R_decomposed(const FoliatedModel & m) { return Geometry(m).report(); }

double gb_total_bound(const FoliatedModel & m) { return Geometry(m).gb_total_bound(); }

}  // namespace folcomp

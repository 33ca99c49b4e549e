#include "folcomp/geodesy.hpp"

#include "folcomp/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

namespace folcomp
{

const char * to_string(MinimalCertificate c)
{
  switch (c) {
    case MinimalCertificate::certified: return "certified";
    case MinimalCertificate::uncertified: return "uncertified";
    case MinimalCertificate::failed: return "failed";
  }
  return "unknown";
}

const char * to_string(TransportKind k) { return k == TransportKind::skewed ? "skewed" : "circ"; }

const char * to_string(CutStatus c) { return c == CutStatus::in_C ? "in_C" : "uncertain"; }

std::vector<Vec> quasi_random_directions(int d, int count)
{
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  auto radical_inverse = [](int i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * (i % base);
      i /= base;
    }
    return r;
  };
  std::vector<Vec> out;
  const int pairs = (d + 1) / 2;
  for (int k = 1; static_cast<int>(out.size()) < count; ++k) {
    Vec g(2 * pairs);
    for (int p = 0; p < pairs; ++p) {
      const double u1 = radical_inverse(k, primes[2 * p]);
      const double u2 = radical_inverse(k, primes[2 * p + 1]);
      const double rad = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
      g[2 * p] = rad * std::cos(2.0 * kPi * u2);
      g[2 * p + 1] = rad * std::sin(2.0 * kPi * u2);
    }
    Vec v = g.head(d);
    const double n = v.norm();
    if (n < 1e-12) { continue; }
    out.push_back(v / n);
  }
  return out;
}

Geodesy::Geodesy(const FoliatedModel & m) : geometry_(m), group_(m), dim_(m.dim())
{
  identity_frame_ = (m.frame_basis() - Mat::Identity(dim_, dim_)).cwiseAbs().maxCoeff() == 0.0;
  const FrameAlgebra & g = geometry_.algebra();
  Mat ph = Mat::Zero(dim_, dim_);
  ph.diagonal() = g.h_mask();
  for (int a = 0; a < dim_; ++a) {
    const Vec e = unit(dim_, a);
    const Mat n = geometry_.connection_matrix(ConnectionKind::adapted, e);
    const Mat j = geometry_.j_matrix(e);
    skew_gen_.push_back(-(n + 0.5 * ph * j * ph));
    circ_gen_.push_back(-(n + j));
  }
}

Mat Geodesy::transport_generator(const Vec & v, TransportKind kind) const
{
  const auto & gens = kind == TransportKind::skewed ? skew_gen_ : circ_gen_;
  Mat a = Mat::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    if (v[i] != 0.0) { a += v[i] * gens[i]; }
  }
  return a;
}

void Geodesy::step(GroupPoint & x, Vec & v, Vec & f0, double h) const
{
  const double speed = v.norm();
  const Vec k1 = f0;
  const Vec k2 = euler_arnold(v + 0.5 * h * k1);
  const Vec k3 = euler_arnold(v + 0.5 * h * k2);
  const Vec k4 = euler_arnold(v + h * k3);
  Vec v1 = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  const double n1 = v1.norm();
  if (n1 > 0.0) { v1 *= speed / n1; }
  const Vec f1 = euler_arnold(v1);
  const Vec vm = 0.5 * (v + v1) + (h / 8.0) * (k1 - f1);
  // Fourth-order Magnus step for x' = x v(t).
  const Vec omega = (h / 6.0) * (v + 4.0 * vm + v1) + (h * h / 12.0) * geometry_.bracket(v, v1);
  x = mul_exp_frame(x, omega);
  v = v1;
  f0 = f1;
}

GroupPoint Geodesy::shoot(const GroupPoint & p, const Vec & w, int steps) const
{
  const double len = w.norm();
  if (len == 0.0) { return p; }
  if (group_.abelian()) { return mul_exp_frame(p, w); }
  GroupPoint x = p;
  Vec v = w / len;
  Vec f = euler_arnold(v);
  const double h = len / steps;
  for (int k = 0; k < steps; ++k) { step(x, v, f, h); }
  return x;
}

GroupPoint Geodesy::shoot_transport(const GroupPoint & p, const Vec & w, int steps, TransportKind kind,
                                    Mat & transport) const
{
  transport = Mat::Identity(dim_, dim_);
  const double len = w.norm();
  if (len == 0.0) { return p; }
  GroupPoint x = p;
  Vec v = w / len;
  Vec f = euler_arnold(v);
  const double h = len / steps;
  for (int k = 0; k < steps; ++k) {
    const Vec v0 = v, f0 = f;
    step(x, v, f, h);
    const Vec vm = 0.5 * (v0 + v) + (h / 8.0) * (f0 - f);
    const Mat a0 = transport_generator(v0, kind);
    const Mat am = transport_generator(vm, kind);
    const Mat a1 = transport_generator(v, kind);
    const Mat omega = (h / 6.0) * (a0 + 4.0 * am + a1) + (h * h / 12.0) * (a1 * a0 - a0 * a1);
    if (omega.cwiseAbs().maxCoeff() == 0.0) { continue; }
    const Mat e = omega.exp();
    transport = e * transport;
  }
  return x;
}

GeodesicRecord Geodesy::record(const GroupPoint & p, const Vec & w, int steps, int samples) const
{
  GeodesicRecord rec;
  rec.start = p;
  rec.shooting_vector = w;
  rec.steps = steps;
  const double len = w.norm();
  rec.length = len;
  const Vec u = len > 0.0 ? Vec(w / len) : Vec(Vec::Zero(dim_));
  rec.initial_velocity = to_model(u);
  const int every = samples > 0 ? std::max(1, steps / samples) : steps;
  GroupPoint x = p;
  Vec v = u;
  Vec f = euler_arnold(v);
  const double h = steps > 0 ? len / steps : 0.0;
  rec.samples.push_back({0.0, to_model(v), x});
  for (int k = 1; k <= steps; ++k) {
    if (len > 0.0) { step(x, v, f, h); }
    if (k % every == 0 || k == steps) { rec.samples.push_back({k * h, to_model(v), x}); }
  }
  return rec;
}

GeodesicRecord Geodesy::exp_map(const GroupPoint & p, const Vec & v_model, double T, int steps) const
{
  const Vec w = to_frame(v_model) * T;
  const double len = w.norm();
  if (!(len > 0.0)) { throw DomainError("exp_map needs a nonzero velocity and time"); }
  if (steps <= 0) { steps = std::max(100, static_cast<int>(std::ceil(len / 0.002))); }
  for (double c : w) {
    if (!std::isfinite(c)) { throw IntegrationFailure("non-finite initial velocity"); }
  }
  GeodesicRecord rec = record(p, w, steps, steps);
  for (const auto & s : rec.samples) {
    for (double c : s.v) {
      if (!std::isfinite(c)) { throw IntegrationFailure("geodesic integration produced non-finite values"); }
    }
  }
  return rec;
}

Vec Geodesy::residual(const Vec & w, const GroupPoint & target, int steps) const
{
  return between_frame(target, shoot(group_.identity(), w, steps));
}

Mat Geodesy::jacobian(const Vec & w, const Vec & r0, const GroupPoint & target, int steps) const
{
  Mat j(dim_, dim_);
  const double delta = 1e-7 * std::max(1.0, w.norm());
  for (int c = 0; c < dim_; ++c) {
    Vec wp = w;
    wp[c] += delta;
    j.col(c) = (residual(wp, target, steps) - r0) / delta;
  }
  return j;
}

bool Geodesy::newton(Vec & w, const GroupPoint & target, int steps, const DistanceOptions & opt, double & res) const
{
  Vec r = residual(w, target, steps);
  res = r.norm();
  for (int it = 0; it < opt.max_iter && res > opt.tol; ++it) {
    const Mat j = jacobian(w, r, target, steps);
    const Mat jtj = j.transpose() * j;
    const Vec jtr = j.transpose() * r;
    const double scale = std::max(jtj.diagonal().maxCoeff(), 1e-300);
    const double cap = 0.5 + 0.5 * w.norm();
    bool accepted = false;
    // Plain Newton first, then Levenberg-Marquardt damping of increasing strength.
    for (int attempt = 0; attempt < 14; ++attempt) {
      Vec dw;
      if (attempt == 0) {
        dw = -j.fullPivLu().solve(r);
      } else {
        const double mu = scale * std::pow(10.0, attempt - 8);
        dw = -(jtj + mu * Mat::Identity(dim_, dim_)).ldlt().solve(jtr);
      }
      if (!dw.allFinite()) { continue; }
      if (dw.norm() > cap) { dw *= cap / dw.norm(); }
      const Vec wn = w + dw;
      const Vec rn = residual(wn, target, steps);
      const double resn = rn.norm();
      if (resn < res) {
        const bool stalled = resn > 0.5 * res && resn < 1e-10;
        w = wn;
        r = rn;
        res = resn;
        accepted = !stalled;
        break;
      }
    }
    if (!accepted) { break; }
  }
  return res <= 1e-10;
}

DistanceSolution Geodesy::solve(const GroupPoint & p, const GroupPoint & q, const DistanceOptions & opt) const
{
  DistanceSolution sol;
  const GroupPoint target = group_.mul(group_.inverse(p), q);
  const Vec w0 = to_frame(group_.log(target));
  const double scale = w0.norm();
  if (scale == 0.0) {
    sol.w = Vec::Zero(dim_);
    sol.certificate = MinimalCertificate::certified;
    sol.unique = true;
    sol.jacobian_ratio = 1.0;
    sol.converged = sol.agreeing = 1;
    return sol;
  }
  if (group_.abelian()) {
    sol.w = w0;
    sol.length = scale;
    sol.certificate = MinimalCertificate::certified;
    sol.unique = true;
    sol.jacobian_ratio = 1.0;
    sol.converged = sol.agreeing = opt.min_agree;
    sol.steps = 1;
    return sol;
  }

  std::vector<Vec> candidates = opt.seeds;
  candidates.push_back(w0);
  const std::size_t warm = candidates.size();
  if (opt.multistart) {
    const auto branches = group_.log_branches(target);
    for (std::size_t b = 1; b < branches.size(); ++b) { candidates.push_back(to_frame(branches[b])); }
    static const double radius[] = {1.0, 0.6, 1.4};
    const auto dirs = quasi_random_directions(dim_, opt.starts);
    for (std::size_t k = 0; k < dirs.size(); ++k) { candidates.push_back(radius[k % 3] * scale * dirs[k]); }
  }
  int steps = opt.steps;
  if (opt.max_step > 0.0) {
    steps = std::max(4, static_cast<int>(std::ceil(candidates.front().norm() / opt.max_step)));
  }
  sol.steps = steps;

  struct Found
  {
    Vec w;
    double len;
    double res;
  };
  std::vector<Found> found;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    Vec w = candidates[c];
    if (w.norm() == 0.0) { continue; }
    double res = 0.0;
    if (newton(w, target, steps, opt, res)) { found.push_back({w, w.norm(), res}); }
    // Without multistart, stop at the first warm seed that converges.
    if (!opt.multistart && c + 1 >= warm && !found.empty()) { break; }
  }
  sol.converged = static_cast<int>(found.size());
  if (found.empty()) {
    sol.certificate = MinimalCertificate::failed;
    sol.length = std::numeric_limits<double>::quiet_NaN();
    sol.w = w0;
    return sol;
  }
  const auto best = std::min_element(found.begin(), found.end(),
                                     [](const Found & a, const Found & b) { return a.len < b.len; });
  sol.w = best->w;
  sol.length = best->len;
  sol.residual = best->res;
  const double tie = 1e-6 * (1.0 + sol.length);
  sol.unique = true;
  for (const auto & f : found) {
    const double dw = (f.w - sol.w).norm();
    if (dw <= tie) {
      ++sol.agreeing;
    } else if (f.len - sol.length <= tie) {
      sol.unique = false;
    }
  }
  const Vec r = residual(sol.w, target, steps);
  const Mat j = jacobian(sol.w, r, target, steps);
  Eigen::JacobiSVD<Mat> svd(j);
  const auto & s = svd.singularValues();
  sol.jacobian_ratio = s[0] > 0.0 ? s[s.size() - 1] / s[0] : 0.0;
  sol.certificate = sol.agreeing >= opt.min_agree ? MinimalCertificate::certified : MinimalCertificate::uncertified;
  return sol;
}

GeodesicRecord Geodesy::distance(const GroupPoint & p, const GroupPoint & q, const DistanceOptions & opt) const
{
  const DistanceSolution sol = solve(p, q, opt);
  if (sol.certificate == MinimalCertificate::failed) {
    GeodesicRecord rec;
    rec.start = p;
    rec.length = sol.length;
    rec.initial_velocity = Vec::Zero(dim_);
    rec.shooting_vector = sol.w;
    rec.minimal_certificate = MinimalCertificate::failed;
    rec.samples.push_back({0.0, Vec::Zero(dim_), p});
    return rec;
  }
  const int steps = std::max(sol.steps, 1);
  GeodesicRecord rec = record(p, sol.w, steps, opt.samples);
  rec.minimal_certificate = sol.certificate;
  return rec;
}

Vec Geodesy::transport(const GeodesicRecord & g, const Vec & v0_model, TransportKind kind) const
{
  const Vec x0 = to_frame(v0_model);
  if (kind == TransportKind::skewed) {
    const double vert = geometry_.algebra().proj_v(x0).norm();
    if (vert > 1e-12 * std::max(1.0, x0.norm())) {
      throw NonHorizontalInput("skewed transport needs a horizontal vector");
    }
  }
  if (g.length == 0.0) { return v0_model; }
  return to_model(transport_matrix(g.shooting_vector, std::max(g.steps, 1), kind) * x0);
}

Mat Geodesy::transport_matrix(const Vec & w, int steps, TransportKind kind) const
{
  Mat t;
  shoot_transport(group_.identity(), w, steps, kind, t);
  return t;
}

CutStatus Geodesy::cut_certificate(const GroupPoint & p, const GroupPoint & q, const DistanceOptions & opt) const
{
  DistanceOptions o = opt;
  o.multistart = true;
  const DistanceSolution sol = solve(p, q, o);
  if (sol.certificate == MinimalCertificate::certified && sol.unique && sol.jacobian_ratio > 1e-8) {
    return CutStatus::in_C;
  }
  return CutStatus::uncertain;
}

double Geodesy::index_form(const GeodesicRecord & g, const Field & field, IndexMode mode, const Field & derivative) const
{
  const int n = static_cast<int>(g.samples.size()) - 1;
  if (n < 2 || n % 2 != 0) { throw DomainError("index_form needs an even number of sample intervals"); }
  const FrameAlgebra & alg = geometry_.algebra();
  const double len = g.length;
  const double fd = 1e-3 * std::max(len, 1e-3);
  auto deriv = [&](double t) -> Vec {
    if (derivative) { return derivative(t); }
    return (-field(t + 2 * fd) + 8.0 * field(t + fd) - 8.0 * field(t - fd) + field(t - 2 * fd)) / (12.0 * fd);
  };
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double t = g.samples[k].t;
    const Vec v = to_frame(g.samples[k].v);
    const Vec x = to_frame(field(t));
    const Vec xd = to_frame(deriv(t));
    double val = 0.0;
    if (mode == IndexMode::riemannian) {
      const Vec dx = xd + geometry_.levi_civita(v, x);
      val = dx.squaredNorm() - geometry_.curvature(ConnectionKind::levi_civita, v, x, x).dot(v);
    } else {
      if (alg.proj_v(x).norm() > 1e-12 * std::max(1.0, x.norm())) {
        throw NonHorizontalField("horizontal index form needs a horizontal field");
      }
      const Vec jx = geometry_.j_map(v, x);
      const Vec a = xd + geometry_.adapted(v, x) + 0.5 * alg.proj_h(jx);
      const Vec tor_xv = geometry_.torsion(x, v);
      val = a.squaredNorm() - geometry_.curvature(ConnectionKind::adapted, v, x, x).dot(v) +
            geometry_.cov_torsion(x, x, v).dot(alg.proj_v(v)) - 0.25 * alg.proj_h(jx).squaredNorm() +
            tor_xv.squaredNorm() + geometry_.torsion(geometry_.torsion(v, x), x).dot(v);
    }
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += w * val;
  }
  const double h = len / n;
  return sum * h / 3.0;
}

GeodesicRecord exp_map(const FoliatedModel & m, const GroupPoint & p, const Vec & v, double T)
{
  return Geodesy(m).exp_map(p, v, T);
}

GeodesicRecord distance(const FoliatedModel & m, const GroupPoint & p, const GroupPoint & q)
{
  DistanceOptions opt;
  opt.samples = 64;
  return Geodesy(m).distance(p, q, opt);
}

Vec transport(const FoliatedModel & m, const GeodesicRecord & g, const Vec & v0, TransportKind kind)
{
  return Geodesy(m).transport(g, v0, kind);
}

CutStatus cut_certificate(const FoliatedModel & m, const GroupPoint & p, const GroupPoint & q)
{
  return Geodesy(m).cut_certificate(p, q);
}

}  // namespace folcomp

#include "folcomp/comparison.hpp"

#include "folcomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace folcomp
{

double model_bound(double K, int n, double r)
{
  if (!(r > 0.0) || n < 1) { throw DomainError("model_bound needs r > 0 and n >= 1"); }
  if (K > 0.0) {
    const double a = std::sqrt(K / n) * r;
    if (a >= kPi) { throw DomainError("model_bound: r beyond pi sqrt(n/K)"); }
    return std::sqrt(n * K) / std::tan(a);
  }
  if (K == 0.0) { return n / r; }
  return std::sqrt(n * -K) / std::tanh(std::sqrt(-K / n) * r);
}

double coupled_bound(double K, int n, double r)
{
  if (!(r > 0.0) || n < 1) { throw DomainError("coupled_bound needs r > 0 and n >= 1"); }
  if (K > 0.0) {
    const double a = std::sqrt(K / n) * r;
    if (a >= kPi) { throw DomainError("coupled_bound: r beyond pi sqrt(n/K)"); }
    return -2.0 * n * std::sqrt(K) * std::tan(0.5 * a);
  }
  if (K == 0.0) { return 0.0; }
  return 2.0 * n * std::sqrt(-K) * std::tanh(0.5 * std::sqrt(-K / n) * r);
}

double ComparisonProfile::s(double t) const
{
  if (K > 0.0) { return std::sin(std::sqrt(K / n) * t); }
  if (K == 0.0) { return t; }
  return std::sinh(std::sqrt(-K / n) * t);
}

double ComparisonProfile::c(double t, double r) const
{
  if (K > 0.0) {
    const double a = std::sqrt(K / n);
    return std::cos(a * t) + (1.0 - std::cos(a * r)) / std::sin(a * r) * std::sin(a * t);
  }
  if (K == 0.0) { return 1.0; }
  const double a = std::sqrt(-K / n);
  return std::cosh(a * t) + (1.0 - std::cosh(a * r)) / std::sinh(a * r) * std::sinh(a * t);
}

namespace
{

// Distance with the full multistart certificate, seeded by a nearby solution.
double certified_distance(const Geodesy & geo, const GroupPoint & a, const GroupPoint & b, const Vec & seed)
{
  DistanceOptions opt;
  opt.seeds = {seed};
  const DistanceSolution s = geo.solve(a, b, opt);
  if (s.certificate != MinimalCertificate::certified || !s.unique) {
    throw UncertifiedDistance("distance evaluation is not certified");
  }
  return s.length;
}

DistanceSolution certified_base(const Geodesy & geo, const GroupPoint & p, const GroupPoint & q)
{
  const DistanceSolution s = geo.solve(p, q);
  if (s.certificate != MinimalCertificate::certified || !s.unique || !(s.jacobian_ratio > 1e-8)) {
    throw UncertifiedDistance("base pair is not certified (possible cut locus)");
  }
  if (s.length == 0.0) { throw UncertifiedDistance("distance function is not smooth at p"); }
  return s;
}

FdEstimate richardson(double coarse, double fine, double base)
{
  FdEstimate e;
  e.value = coarse;
  e.refined = fine;
  e.richardson = (4.0 * fine - coarse) / 3.0;
  e.error = std::abs(coarse - fine);
  e.distance = base;
  return e;
}

}  // namespace

FdEstimate horizontal_laplacian_distance(const Geodesy & geo, const GroupPoint & p, const GroupPoint & x, double h)
{
  if (!(h > 0.0)) { throw DomainError("finite-difference step must be positive"); }
  const DistanceSolution base = certified_base(geo, p, x);
  const FoliatedModel & m = geo.model();
  const Group & g = geo.group();
  const auto hidx = m.frame().horizontal_indices();
  const Vec drift = geo.geometry().horizontal_drift();
  const bool has_drift = drift.norm() > 1e-14;

  auto estimate = [&](double s) {
    double sum = 0.0;
    for (int i : hidx) {
      const Vec step = geo.to_model(s * unit(m.dim(), i));
      const double plus = certified_distance(geo, p, g.mul_exp(x, step), base.w);
      const double minus = certified_distance(geo, p, g.mul_exp(x, -step), base.w);
      sum += (plus - 2.0 * base.length + minus) / (s * s);
    }
    if (has_drift) {
      // Delta_H = sum X_i^2 - (sum nabla_{X_i} X_i), the last term a first derivative.
      const Vec step = geo.to_model(s * drift);
      const double plus = certified_distance(geo, p, g.mul_exp(x, step), base.w);
      const double minus = certified_distance(geo, p, g.mul_exp(x, -step), base.w);
      sum -= (plus - minus) / (2.0 * s);
    }
    return sum;
  };
  return richardson(estimate(h), estimate(0.5 * h), base.length);
}

FdEstimate coupled_laplacian_distance(const Geodesy & geo, const GroupPoint & p, const GroupPoint & q, double h)
{
  if (!(h > 0.0)) { throw DomainError("finite-difference step must be positive"); }
  const DistanceSolution base = certified_base(geo, p, q);
  const FoliatedModel & m = geo.model();
  const auto hidx = m.frame().horizontal_indices();
  const Mat transport = geo.transport_matrix(base.w, std::max(base.steps, 1), TransportKind::skewed);

  auto estimate = [&](double s) {
    double sum = 0.0;
    for (int i : hidx) {
      const Vec v = unit(m.dim(), i);
      const Vec vt = transport * v;
      double second = -2.0 * base.length;
      for (double sign : {1.0, -1.0}) {
        const GroupPoint a = geo.shoot(p, sign * s * v, 8);
        const GroupPoint b = geo.shoot(q, sign * s * vt, 8);
        second += certified_distance(geo, a, b, base.w);
      }
      sum += second / (s * s);
    }
    return sum;
  };
  return richardson(estimate(h), estimate(0.5 * h), base.length);
}

namespace
{

std::vector<Vec> audit_directions(const FoliatedModel & m, int count)
{
  const auto hidx = m.frame().horizontal_indices();
  const int nh = static_cast<int>(hidx.size());
  const int n_h = (count + 1) / 2;
  std::vector<Vec> out;
  const auto hq = quasi_random_directions(nh, std::max(n_h, 1));
  for (int k = 0; k < n_h; ++k) {
    Vec v = Vec::Zero(m.dim());
    if (nh == 2) {
      const double th = 2.0 * kPi * k / n_h;
      v[hidx[0]] = std::cos(th);
      v[hidx[1]] = std::sin(th);
    } else {
      for (int i = 0; i < nh; ++i) { v[hidx[i]] = hq[k][i]; }
    }
    out.push_back(v);
  }
  for (const Vec & v : quasi_random_directions(m.dim(), count - n_h)) { out.push_back(v); }
  return out;
}

}  // namespace

AuditReport comparison_audit(const Geodesy & geo, const std::vector<double> & radii, int directions,
                             const ComparisonOptions & opt)
{
  const FoliatedModel & m = geo.model();
  const int n = m.n_horizontal();
  const double K = std::isnan(opt.K) ? geo.geometry().report().K : opt.K;
  const bool flat = geo.group().abelian();
  double tol = opt.tol;
  if (tol < 0.0) { tol = (flat && opt.kind == ComparisonKind::laplacian) ? 2e-3 : 5e-3; }

  AuditReport rep;
  rep.name = opt.kind == ComparisonKind::laplacian ? "comparison_laplacian" : "comparison_coupled";
  rep.columns = {"r", "direction_id", "measured", "bound", "margin", "fd_error"};
  rep.units = {"length", "1", "1/length", "1/length", "1/length", "1/length"};
  rep.tolerances = {{"additive", tol}, {"h", opt.h}};
  rep.summary = {{"K", K}, {"n", static_cast<double>(n)}};

  const auto dirs = audit_directions(m, directions);
  const GroupPoint p = geo.group().identity();
  for (double r : radii) {
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      const GroupPoint x = geo.shoot(p, r * dirs[d], std::max(64, static_cast<int>(std::ceil(r / 0.005))));
      FdEstimate est;
      try {
        est = opt.kind == ComparisonKind::laplacian ? horizontal_laplacian_distance(geo, p, x, opt.h)
                                                    : coupled_laplacian_distance(geo, p, x, opt.h);
      } catch (const UncertifiedDistance &) {
        ++rep.skipped;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rep.add({r, static_cast<double>(d), nan, nan, nan, nan}, "uncertain", false, true);
        continue;
      }
      const double dist = est.distance;
      double bound;
      try {
        bound = opt.kind == ComparisonKind::laplacian ? model_bound(K, n, dist) : coupled_bound(K, n, dist);
      } catch (const DomainError &) {
        ++rep.skipped;
        rep.add({r, static_cast<double>(d), est.value, std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(), est.error},
                "out_of_domain", false, true);
        continue;
      }
      const double margin = bound - est.value;
      rep.add({dist, static_cast<double>(d), est.value, bound, margin, est.error}, "certified", true,
              margin >= -tol);
    }
  }
  double min_margin = std::numeric_limits<double>::infinity(), max_fd = 0.0;
  for (const auto & row : rep.rows) {
    if (!row.asserted) { continue; }
    min_margin = std::min(min_margin, row.values[4]);
    max_fd = std::max(max_fd, row.values[5]);
  }
  rep.summary.push_back({"certified_rows", static_cast<double>(rep.rows.size() - rep.skipped)});
  rep.summary.push_back({"skipped_rows", static_cast<double>(rep.skipped)});
  if (std::isfinite(min_margin)) { rep.summary.push_back({"min_margin", min_margin}); }
  rep.summary.push_back({"max_fd_error", max_fd});
  return rep;
}

AuditReport bonnet_myers_audit(const Geodesy & geo, int samples, const BonnetMyersOptions & opt)
{
  const FoliatedModel & m = geo.model();
  const double K = geo.geometry().report().K;
  if (!(K > 0.0)) {
    throw NonPositiveK("Bonnet-Myers needs K > 0 (model '" + m.name() + "' has K = " + std::to_string(K) + ")");
  }
  const int n = m.n_horizontal();
  const double bound = kPi * std::sqrt(n / K);

  AuditReport rep;
  rep.name = "bonnet_myers";
  rep.columns = {"pair_id", "distance", "bound", "margin"};
  rep.units = {"1", "length", "length", "length"};
  rep.tolerances = {{"relative", opt.tol}};
  rep.summary = {{"K", K}, {"n", static_cast<double>(n)}, {"bound", bound}};

  // d(p, q) = d(e, p^-1 q) and p^-1 q is again Haar distributed.
  std::mt19937_64 rng(opt.seed);
  std::vector<GroupPoint> pts;
  pts.reserve(samples);
  for (int k = 0; k < samples; ++k) {
    const GroupPoint p = haar_sample(geo.group(), rng);
    const GroupPoint q = haar_sample(geo.group(), rng);
    pts.push_back(geo.group().mul(geo.group().inverse(p), q));
  }
  // Cheap pass: a connecting geodesic from the group logarithm. Its length is
  // an upper bound of the distance.
  DistanceOptions cheap;
  cheap.multistart = false;
  cheap.max_step = 0.02;
  std::vector<double> upper(samples, std::numeric_limits<double>::infinity());
  const GroupPoint e = geo.group().identity();
  for (int k = 0; k < samples; ++k) {
    const DistanceSolution s = geo.solve(e, pts[k], cheap);
    if (s.certificate != MinimalCertificate::failed) { upper[k] = s.length; }
  }
  std::vector<int> order(samples);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return upper[a] > upper[b]; });
  std::vector<int> chosen(order.begin(), order.begin() + std::min(samples, opt.certify_top));
  if (opt.certify_spread > 0 && samples > 0) {
    const int stride = std::max(1, samples / opt.certify_spread);
    for (int k = 0; k < samples; k += stride) { chosen.push_back(k); }
  }
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());

  double max_cert = 0.0, max_upper = 0.0;
  for (int k = 0; k < samples; ++k) {
    if (std::isfinite(upper[k])) { max_upper = std::max(max_upper, upper[k]); }
  }
  int certified = 0;
  for (int k : chosen) {
    DistanceOptions full;
    full.max_step = 0.02;
    const DistanceSolution s = geo.solve(e, pts[k], full);
    if (s.certificate != MinimalCertificate::certified) {
      ++rep.skipped;
      rep.add({static_cast<double>(k), s.length, bound, bound - s.length}, to_string(s.certificate), false, true);
      continue;
    }
    ++certified;
    max_cert = std::max(max_cert, s.length);
    rep.add({static_cast<double>(k), s.length, bound, bound - s.length}, "certified", true,
            s.length <= bound * (1.0 + opt.tol));
  }
  rep.summary.push_back({"pairs", static_cast<double>(samples)});
  rep.summary.push_back({"certified_pairs", static_cast<double>(certified)});
  rep.summary.push_back({"max_certified_distance", max_cert});
  rep.summary.push_back({"max_connecting_length", max_upper});
  return rep;
}

}  // namespace folcomp

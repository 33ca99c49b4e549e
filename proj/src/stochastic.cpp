#include "folcomp/stochastic.hpp"

#include "folcomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace folcomp
{

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t purpose)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

namespace
{

// Runs body(i) for i in [0, n); results must be written per index so the
// outcome does not depend on scheduling.
template <class F>
void parallel_for(int n, int threads, F body)
{
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) { body(i); }
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) { body(i); }
    });
  }
  for (auto & th : pool) { th.join(); }
}

struct MeanSe
{
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};

MeanSe mean_se(const std::vector<double> & x)
{
  MeanSe out;
  out.n = static_cast<int>(x.size());
  if (x.empty()) { return out; }
  double s = 0.0;
  for (double v : x) { s += v; }
  out.mean = s / out.n;
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : x) { ss += (v - out.mean) * (v - out.mean); }
    out.se = std::sqrt(ss / (out.n - 1) / out.n);
  }
  return out;
}

std::vector<int> observation_steps(const std::vector<double> & times, double dt)
{
  std::vector<int> out;
  for (double t : times) {
    if (t < 0.0) { throw DomainError("observation times must be nonnegative"); }
    out.push_back(static_cast<int>(std::llround(t / dt)));
  }
  return out;
}

void check_config(const SimConfig & cfg)
{
  if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0) || cfg.dt > cfg.t_end) {
    throw DomainError("SimConfig needs 0 < dt <= t_end");
  }
  if (cfg.n_paths < 1) { throw DomainError("SimConfig needs n_paths >= 1"); }
  if (cfg.coupling_refresh < 1) { throw DomainError("coupling_refresh must be >= 1"); }
}

double lower_k(const Geodesy & geo) { return geo.geometry().report().K; }

}  // namespace

Diffusion::Diffusion(const Geodesy & geo)
    : geo_(geo), hidx_(geo.model().frame().horizontal_indices()), drift_(geo.geometry().horizontal_drift())
{
}

int Diffusion::steps(double t, double dt) const { return static_cast<int>(std::llround(t / dt)); }

Vec Diffusion::embed(const Vec & eta) const
{
  Vec v = Vec::Zero(geo_.dim());
  for (int i = 0; i < n(); ++i) { v[hidx_[i]] = eta[i]; }
  return v;
}

Vec Diffusion::increment(PathRng & rng, double dt, Vec * eta) const
{
  const double s = std::sqrt(2.0 * dt);
  Vec e(n());
  for (int i = 0; i < n(); ++i) { e[i] = s * rng.normal(); }
  if (eta) { *eta = e; }
  Vec v = embed(e);
  if (drift_.size() > 0) { v -= dt * drift_; }
  return v;
}

std::vector<GroupPoint> Diffusion::marginals(const GroupPoint & p, const SimConfig & cfg, std::uint64_t stream,
                                             const std::vector<double> & times) const
{
  const std::vector<int> obs = observation_steps(times, cfg.dt);
  const int last = obs.empty() ? 0 : *std::max_element(obs.begin(), obs.end());
  std::vector<GroupPoint> out(obs.size(), p);
  PathRng rng(cfg.seed, stream, kPathNoise);
  GroupPoint x = p;
  for (int k = 1; k <= last; ++k) {
    x = advance(x, increment(rng, cfg.dt));
    for (std::size_t j = 0; j < obs.size(); ++j) {
      if (obs[j] == k) { out[j] = x; }
    }
  }
  return out;
}

DistanceTracker::DistanceTracker(const Geodesy & geo, double max_step) : geo_(geo), max_step_(max_step)
{
  // With all brackets vertical, projecting to the horizontal coordinates is a
  // homomorphism onto a Euclidean space that is isometric on H: distances can only shrink.
  const FoliatedModel & m = geo.model();
  projection_lower_ = geo.group().kind() == GroupKind::nilpotent;
  for (int i = 0; i < m.dim() && projection_lower_; ++i) {
    for (int j = 0; j < m.dim() && projection_lower_; ++j) {
      for (int k = 0; k < m.dim(); ++k) {
        if (m.is_horizontal(k) && m.c(i, j, k) != 0.0) {
          projection_lower_ = false;
          break;
        }
      }
    }
  }
}

double DistanceTracker::upper(const GroupPoint & a, const GroupPoint & b) const
{
  return geo_.between_frame(a, b).norm();
}

double DistanceTracker::lower(const GroupPoint & a, const GroupPoint & b) const
{
  if (!projection_lower_) { return 0.0; }
  return geo_.model().frame().proj_h(geo_.between_frame(a, b)).norm();
}

DistanceTracker::Result DistanceTracker::warm(const GroupPoint & a, const GroupPoint & b, const Vec * seed) const
{
  DistanceOptions opt;
  opt.multistart = false;
  opt.max_step = max_step_;
  opt.tol = 1e-11;
  if (seed && seed->norm() > 0.0) { opt.seeds = {*seed}; }
  const DistanceSolution s = geo_.solve(a, b, opt);
  if (s.certificate == MinimalCertificate::failed || s.length > upper(a, b) + 1e-9) { return certified(a, b, seed); }
  return {s.length, s.w, true};
}

DistanceTracker::Result DistanceTracker::certified(const GroupPoint & a, const GroupPoint & b, const Vec * seed) const
{
  DistanceOptions opt;
  opt.max_step = max_step_;
  opt.starts = 6;
  opt.min_agree = 3;
  opt.tol = 1e-11;
  if (seed && seed->norm() > 0.0) { opt.seeds = {*seed}; }
  const DistanceSolution s = geo_.solve(a, b, opt);
  return {s.length, s.w, s.certificate == MinimalCertificate::certified};
}

PathRecord hbm_path(const Geodesy & geo, const GroupPoint & p, const SimConfig & cfg, std::uint64_t stream)
{
  check_config(cfg);
  const Diffusion diff(geo);
  const int n_steps = diff.steps(cfg.t_end, cfg.dt);
  PathRecord rec;
  rec.stream_id = stream;
  rec.times.reserve(n_steps + 1);
  rec.points.reserve(n_steps + 1);
  rec.noise.reserve(n_steps);
  rec.times.push_back(0.0);
  rec.points.push_back(p);
  PathRng rng(cfg.seed, stream, kPathNoise);
  GroupPoint x = p;
  for (int k = 1; k <= n_steps; ++k) {
    Vec eta;
    x = diff.advance(x, diff.increment(rng, cfg.dt, &eta));
    rec.noise.push_back(eta);
    rec.times.push_back(k * cfg.dt);
    rec.points.push_back(x);
  }
  return rec;
}

SemigroupEstimate semigroup_estimate(const Geodesy & geo, const PointFunction & f, const GroupPoint & x, double t,
                                     const SimConfig & cfg)
{
  check_config(cfg);
  const Diffusion diff(geo);
  std::vector<double> values(cfg.n_paths);
  parallel_for(cfg.n_paths, cfg.threads, [&](int i) {
    values[i] = f(diff.marginals(x, cfg, static_cast<std::uint64_t>(i), {t})[0]);
  });
  const MeanSe m = mean_se(values);
  return {m.mean, m.se, m.n};
}

std::pair<double, double> quantile_with_se(const std::vector<double> & sorted, double q)
{
  const int n = static_cast<int>(sorted.size());
  if (n == 0) { return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()}; }
  const double pos = q * (n - 1);
  const int lo = static_cast<int>(std::floor(pos));
  const int hi = std::min(lo + 1, n - 1);
  const double value = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
  // Binomial spread of the order statistic index.
  const double spread = std::sqrt(n * q * (1.0 - q));
  const int a = std::clamp(static_cast<int>(std::floor(n * q - spread)), 0, n - 1);
  const int b = std::clamp(static_cast<int>(std::ceil(n * q + spread)), 0, n - 1);
  return {value, 0.5 * (sorted[b] - sorted[a])};
}

AuditReport radial_comparison_run(const Geodesy & geo, const GroupPoint & p, const SimConfig & cfg,
                                  const std::vector<double> & times, const std::vector<double> & quantiles)
{
  check_config(cfg);
  const double K = lower_k(geo);
  if (K > 0.0) { throw InapplicableK("radial comparison is stated for K <= 0"); }
  const FoliatedModel & m = geo.model();
  const int n = m.n_horizontal();
  const Diffusion diff(geo);
  const DistanceTracker tracker(geo);
  const std::vector<int> obs = observation_steps(times, cfg.dt);
  const int nt = static_cast<int>(times.size());

  const double a = std::sqrt(-K / n);
  const double c0 = std::sqrt(n * -K);
  // Radial drift beyond the Bessel part n / r; bounded and smooth.
  auto excess = [&](double r) {
    if (K == 0.0) { return 0.0; }
    const double x = a * r;
    if (x < 1e-4) { return c0 * x / 3.0; }
    return c0 / std::tanh(x) - n / r;
  };

  std::vector<std::vector<double>> r(nt, std::vector<double>(cfg.n_paths, -1.0));
  std::vector<std::vector<double>> rt(nt, std::vector<double>(cfg.n_paths, 0.0));
  parallel_for(cfg.n_paths, cfg.threads, [&](int i) {
    const auto pts = diff.marginals(p, cfg, static_cast<std::uint64_t>(i), times);
    for (int j = 0; j < nt; ++j) {
      if (obs[j] == 0) {
        r[j][i] = 0.0;
        continue;
      }
      const auto res = tracker.certified(p, pts[j], nullptr);
      r[j][i] = res.ok ? res.d : -1.0;
    }
    // Comparison diffusion as the norm of an (n+1)-dimensional process, which
    // carries the singular n / r drift exactly.
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(i), kComparisonNoise);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n + 1);
    const double s = std::sqrt(2.0 * cfg.dt);
    const int last = obs.empty() ? 0 : *std::max_element(obs.begin(), obs.end());
    for (int k = 1; k <= last; ++k) {
      const double ny = y.norm();
      Eigen::VectorXd step(n + 1);
      for (int c = 0; c < n + 1; ++c) { step[c] = s * rng.normal(); }
      if (ny > 0.0) { step += cfg.dt * excess(ny) / ny * y; }
      y += step;
      for (int j = 0; j < nt; ++j) {
        if (obs[j] == k) { rt[j][i] = y.norm(); }
      }
    }
  });

  AuditReport rep;
  rep.name = "radial_comparison";
  rep.columns = {"t", "quantile", "r_quantile", "r_se", "comparison_quantile", "comparison_se", "margin"};
  rep.units = {"time", "1", "length", "length", "length", "length", "length"};
  rep.tolerances = {{"se_multiple", 3.0}};
  rep.summary = {{"K", K}, {"n", static_cast<double>(n)}, {"paths", static_cast<double>(cfg.n_paths)}};
  int dropped = 0;
  for (int j = 0; j < nt; ++j) {
    std::vector<double> a_sorted, b_sorted = rt[j];
    for (double v : r[j]) {
      if (v >= 0.0) {
        a_sorted.push_back(v);
      } else {
        ++dropped;
      }
    }
    std::sort(a_sorted.begin(), a_sorted.end());
    std::sort(b_sorted.begin(), b_sorted.end());
    for (double q : quantiles) {
      const auto [qa, sa] = quantile_with_se(a_sorted, q);
      const auto [qb, sb] = quantile_with_se(b_sorted, q);
      const double margin = qb + 3.0 * std::hypot(sa, sb) - qa;
      rep.add({times[j], q, qa, sa, qb, sb, margin}, "certified", true, margin >= 0.0);
    }
  }
  const double frac = static_cast<double>(dropped) / (static_cast<double>(cfg.n_paths) * std::max(nt, 1));
  rep.summary.push_back({"uncertified_fraction", frac});
  rep.skipped = dropped;
  if (frac > 0.05) { rep.pass = false; }
  return rep;
}

namespace
{

// Running maximum of d(p, xi_s) over the path grid (every `stride` steps).
std::vector<double> running_max(const Geodesy & geo, const GroupPoint & p, double t, const SimConfig & cfg, int stride,
                                int & failures)
{
  const Diffusion diff(geo);
  const DistanceTracker tracker(geo);
  const int n_steps = diff.steps(t, cfg.dt);
  const bool flat = geo.group().abelian();
  std::vector<double> out(cfg.n_paths, 0.0);
  std::vector<int> failed(cfg.n_paths, 0);
  parallel_for(cfg.n_paths, cfg.threads, [&](int i) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(i), kPathNoise);
    GroupPoint x = p;
    double best = 0.0;
    Vec w = Vec::Zero(geo.dim());
    for (int k = 1; k <= n_steps; ++k) {
      x = diff.advance(x, diff.increment(rng, cfg.dt));
      if (k % stride != 0 && k != n_steps) { continue; }
      const double u = tracker.upper(p, x);
      if (flat) {
        best = std::max(best, u);
        continue;
      }
      if (u <= best) { continue; }
      auto res = tracker.warm(p, x, &w);
      if (!res.ok) {
        ++failed[i];
        continue;
      }
      w = res.w;
      best = std::max(best, std::min(res.d, u));
    }
    out[i] = best;
  });
  failures = std::accumulate(failed.begin(), failed.end(), 0);
  return out;
}

}  // namespace

AuditReport exit_tail(const Geodesy & geo, const GroupPoint & p, const std::vector<double> & r_grid, double t,
                      const SimConfig & cfg, double fit_lo, double fit_hi, int stride)
{
  check_config(cfg);
  const double K = lower_k(geo);
  if (K > 0.0) { throw InapplicableK("exit-time estimate is stated for K <= 0"); }
  int failures = 0;
  const std::vector<double> sup = running_max(geo, p, t, cfg, std::max(stride, 1), failures);

  AuditReport rep;
  rep.name = "exit_tail";
  rep.columns = {"r", "probability", "std_error"};
  rep.units = {"length", "1", "1"};
  rep.summary = {{"K", K}, {"t", t}, {"paths", static_cast<double>(cfg.n_paths)}};
  double prev = 1.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int nfit = 0;
  for (double r : r_grid) {
    int hits = 0;
    for (double s : sup) { hits += (s >= r) ? 1 : 0; }
    const double prob = static_cast<double>(hits) / cfg.n_paths;
    const double se = std::sqrt(prob * (1.0 - prob) / cfg.n_paths);
    const bool monotone = prob <= prev;
    prev = prob;
    rep.add({r, prob, se}, "mc", true, monotone);
    if (r >= fit_lo && r <= fit_hi && prob > 0.0) {
      const double x = r * r, y = std::log(prob);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++nfit;
    }
  }
  double slope = std::numeric_limits<double>::quiet_NaN();
  if (nfit >= 2) { slope = (nfit * sxy - sx * sy) / (nfit * sxx - sx * sx); }
  rep.summary.push_back({"fit_points", static_cast<double>(nfit)});
  rep.summary.push_back({"slope", slope});
  rep.summary.push_back({"distance_failures", static_cast<double>(failures)});
  if (!(slope < 0.0)) { rep.pass = false; }
  return rep;
}

HeatDiagBound heat_diag_lower(const Geodesy & geo, const GroupPoint & x, double t, double r, const SimConfig & cfg,
                              int volume_samples)
{
  check_config(cfg);
  if (!(r > 0.0) || !(t > 0.0)) { throw DomainError("heat_diag_lower needs r > 0 and t > 0"); }
  const double K = lower_k(geo);
  if (K > 0.0) { throw InapplicableK("heat-kernel lower bound is stated for K <= 0"); }
  const Group & g = geo.group();
  if (g.kind() != GroupKind::nilpotent) { throw InapplicableK("ball volumes need a nilpotent model"); }

  HeatDiagBound out;
  int failures = 0;
  const std::vector<double> sup = running_max(geo, x, t, cfg, 1, failures);
  int hits = 0;
  for (double s : sup) { hits += (s >= r) ? 1 : 0; }
  out.exit_probability = static_cast<double>(hits) / cfg.n_paths;
  out.exit_se = std::sqrt(out.exit_probability * (1.0 - out.exit_probability) / cfg.n_paths);

  // Haar measure is Lebesgue in exponential coordinates, scaled by the metric volume.
  const FoliatedModel & m = geo.model();
  const int d = m.dim();
  const int cls = std::max(1, m.nilpotency_class());
  // Coordinates of points in the ball grow at most like r^layer, up to the metric scale.
  const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(m.metric()).eigenvalues().minCoeff();
  const double coord_scale = std::max(1.0, 1.0 / std::sqrt(lmin));
  Vec half(d);
  for (int i = 0; i < d; ++i) {
    double h = 0.0, rp = 1.0;
    for (int j = 1; j <= (m.is_horizontal(i) ? 1 : cls); ++j) {
      rp *= r;
      h += rp;
    }
    half[i] = h * coord_scale;
  }
  const double box = std::pow(2.0, d) * half.prod();
  const double vol_factor = std::sqrt(m.metric().determinant());
  const DistanceTracker tracker(geo);
  const GroupPoint e = g.identity();
  std::vector<char> inside(volume_samples, 0);
  const int blocks = std::max(1, std::min(volume_samples, 64));
  parallel_for(blocks, cfg.threads, [&](int b) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(b), kVolumeSamples);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int s = b; s < volume_samples; s += blocks) {
      Vec c(d);
      for (int i = 0; i < d; ++i) { c[i] = half[i] * u(rng.engine); }
      const GroupPoint y{c};
      const double up = tracker.upper(e, y);
      if (up <= r) {
        inside[s] = 1;
        continue;
      }
      if (g.abelian() || tracker.lower(e, y) > r) { continue; }
      const auto res = tracker.certified(e, y, nullptr);
      inside[s] = (res.ok && res.d <= r) ? 1 : 0;
    }
  });
  const double frac = std::accumulate(inside.begin(), inside.end(), 0.0) / volume_samples;
  out.volume = vol_factor * box * frac;
  out.volume_se = vol_factor * box * std::sqrt(frac * (1.0 - frac) / volume_samples);

  // Cauchy-Schwarz: p_{2t}(x,x) >= (int_B p_t)^2 / mu(B) and int_B p_t >= 1 - P(exit).
  const double mass = std::max(0.0, 1.0 - out.exit_probability);
  if (out.volume > 0.0) {
    out.value = mass * mass / out.volume;
    const double d_mass = 2.0 * mass / out.volume;
    const double d_vol = mass * mass / (out.volume * out.volume);
    out.std_error = std::hypot(d_mass * out.exit_se, d_vol * out.volume_se);
  }
  return out;
}

namespace
{

// One pair of paths coupled by skewed transport. Calls observe(j, x, y, d) at
// each observation step; returns false when the pair lost its certificate.
template <class Observe>
bool coupled_pair(const Geodesy & geo, const Diffusion & diff, const DistanceTracker & tracker, const GroupPoint & p,
                  const GroupPoint & q, const DistanceSolution & start, const SimConfig & cfg,
                  const std::vector<int> & obs, std::uint64_t stream, Observe observe)
{
  const bool flat = geo.group().abelian();
  PathRng rng(cfg.seed, stream, kPathNoise);
  GroupPoint x = p, y = q;
  Vec w = start.w;
  double d = start.length;
  Mat transport = flat ? Mat(Mat::Identity(geo.dim(), geo.dim()))
                       : geo.transport_matrix(w, std::max(start.steps, 1), TransportKind::skewed);
  bool met = d < 1e-4;
  const int last = obs.empty() ? 0 : *std::max_element(obs.begin(), obs.end());
  const Vec drift = geo.geometry().horizontal_drift();
  for (int j = 0; j < static_cast<int>(obs.size()); ++j) {
    if (obs[j] == 0) { observe(j, x, y, d); }
  }
  for (int k = 1; k <= last; ++k) {
    Vec eta;
    const Vec inc = diff.increment(rng, cfg.dt, &eta);
    x = diff.advance(x, inc);
    if (met) {
      y = x;
    } else {
      Vec inc2 = transport * diff.embed(eta);
      if (drift.size() > 0) { inc2 -= cfg.dt * drift; }
      y = diff.advance(y, inc2);
    }
    const bool observe_now = std::find(obs.begin(), obs.end(), k) != obs.end();
    if (!met && (k % cfg.coupling_refresh == 0 || observe_now)) {
      if (flat) {
        d = tracker.upper(x, y);
      } else {
        const auto res = tracker.warm(x, y, &w);
        if (!res.ok) { return false; }
        w = res.w;
        d = res.d;
        if (d >= 1e-4) {
          const int steps = std::max(4, static_cast<int>(std::ceil(d / 0.05)));
          geo.shoot_transport(geo.group().identity(), w, steps, TransportKind::skewed, transport);
        }
      }
      if (d < 1e-4) {
        met = true;
        y = x;
        d = 0.0;
      }
    }
    if (observe_now) {
      for (int j = 0; j < static_cast<int>(obs.size()); ++j) {
        if (obs[j] == k) { observe(j, x, y, d); }
      }
    }
  }
  return true;
}

DistanceSolution certified_start(const Geodesy & geo, const GroupPoint & p, const GroupPoint & q)
{
  DistanceOptions opt;
  opt.max_step = 0.05;
  const DistanceSolution s = geo.solve(p, q, opt);
  if (s.certificate != MinimalCertificate::certified || !s.unique || !(s.jacobian_ratio > 1e-8)) {
    throw UncertifiedDistance("coupling start pair is not certified");
  }
  return s;
}

}  // namespace

AuditReport parallel_coupling_run(const Geodesy & geo, const GroupPoint & p, const GroupPoint & q,
                                  const SimConfig & cfg, const std::vector<double> & times, double rel_tol)
{
  check_config(cfg);
  const double K = lower_k(geo);
  const DistanceSolution start = certified_start(geo, p, q);
  const Diffusion diff(geo);
  const DistanceTracker tracker(geo);
  const std::vector<int> obs = observation_steps(times, cfg.dt);
  const int nt = static_cast<int>(times.size());
  std::vector<std::vector<double>> dist(nt, std::vector<double>(cfg.n_paths, 0.0));
  std::vector<char> alive(cfg.n_paths, 1);
  parallel_for(cfg.n_paths, cfg.threads, [&](int i) {
    alive[i] = coupled_pair(geo, diff, tracker, p, q, start, cfg, obs, static_cast<std::uint64_t>(i),
                            [&](int j, const GroupPoint &, const GroupPoint &, double d) { dist[j][i] = d; });
  });
  const int lost = static_cast<int>(std::count(alive.begin(), alive.end(), 0));
  const double lost_frac = static_cast<double>(lost) / cfg.n_paths;

  AuditReport rep;
  rep.name = "parallel_coupling";
  rep.columns = {"t", "mean_distance", "std_error", "bound", "margin", "paths"};
  rep.units = {"time", "length", "length", "length", "length", "count"};
  rep.tolerances = {{"relative", rel_tol}, {"se_multiple", 3.0}};
  rep.summary = {{"K", K}, {"d0", start.length}, {"refresh", static_cast<double>(cfg.coupling_refresh)}};
  double spread = 0.0;
  for (int j = 0; j < nt; ++j) {
    std::vector<double> v;
    for (int i = 0; i < cfg.n_paths; ++i) {
      if (alive[i]) {
        v.push_back(dist[j][i]);
        spread = std::max(spread, std::abs(dist[j][i] - start.length));
      }
    }
    const MeanSe ms = mean_se(v);
    const double bound = std::exp(-K * times[j]) * start.length * (1.0 + rel_tol);
    const double margin = bound + 3.0 * ms.se - ms.mean;
    const std::string cert = lost_frac > 0.05 ? "uncertified" : "certified";
    rep.add({times[j], ms.mean, ms.se, bound, margin, static_cast<double>(ms.n)}, cert, true,
            margin >= 0.0 && lost_frac <= 0.05);
  }
  rep.skipped = lost;
  rep.summary.push_back({"lost_fraction", lost_frac});
  rep.summary.push_back({"max_abs_change", spread});
  return rep;
}

AuditReport lipschitz_audit(const Geodesy & geo, const PointFunction & f, double lip_f,
                            const std::vector<std::pair<GroupPoint, GroupPoint>> & pairs, double t,
                            const SimConfig & cfg, double rel_tol)
{
  check_config(cfg);
  const double K = lower_k(geo);
  const Diffusion diff(geo);
  const DistanceTracker tracker(geo);
  const std::vector<int> obs = observation_steps({t}, cfg.dt);

  AuditReport rep;
  rep.name = "lipschitz";
  rep.columns = {"pair_id", "distance", "ratio", "std_error", "bound", "margin"};
  rep.units = {"1", "length", "1", "1", "1", "1"};
  rep.tolerances = {{"relative", rel_tol}, {"se_multiple", 3.0}};
  rep.summary = {{"K", K}, {"t", t}, {"lip_f", lip_f}};
  const double bound = std::exp(-K * t) * lip_f * (1.0 + rel_tol);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto & [p, q] = pairs[k];
    DistanceSolution start;
    try {
      start = certified_start(geo, p, q);
    } catch (const UncertifiedDistance &) {
      ++rep.skipped;
      continue;
    }
    std::vector<double> diffs(cfg.n_paths, 0.0);
    std::vector<char> alive(cfg.n_paths, 1);
    parallel_for(cfg.n_paths, cfg.threads, [&](int i) {
      alive[i] = coupled_pair(geo, diff, tracker, p, q, start, cfg, obs, static_cast<std::uint64_t>(i),
                              [&](int, const GroupPoint & x, const GroupPoint & y, double) {
                                diffs[i] = f(y) - f(x);
                              });
    });
    std::vector<double> v;
    for (int i = 0; i < cfg.n_paths; ++i) {
      if (alive[i]) { v.push_back(diffs[i] / start.length); }
    }
    const MeanSe ms = mean_se(v);
    const double ratio = std::abs(ms.mean);
    const double margin = bound + 3.0 * ms.se - ratio;
    const double lost = 1.0 - static_cast<double>(v.size()) / cfg.n_paths;
    rep.add({static_cast<double>(k), start.length, ratio, ms.se, bound, margin},
            lost > 0.05 ? "uncertified" : "certified", true, margin >= 0.0 && lost <= 0.05);
  }
  return rep;
}

namespace
{

Vec numeric_gradient(const Geodesy & geo, const PointFunction & f, const GroupPoint & y)
{
  const double h = 1e-5;
  Vec g(geo.dim());
  for (int a = 0; a < geo.dim(); ++a) {
    const Vec e = h * unit(geo.dim(), a);
    g[a] = (f(geo.mul_exp_frame(y, e)) - f(geo.mul_exp_frame(y, -e))) / (2.0 * h);
  }
  return g;
}

}  // namespace

AuditReport gradient_bound_audit(const Geodesy & geo, const PointFunction & f, const GroupPoint & x,
                                 const std::vector<double> & times, const SimConfig & cfg, GradientMode mode,
                                 const GradientFunction & grad, double rel_tol)
{
  check_config(cfg);
  const FoliatedModel & m = geo.model();
  const double K = geo.geometry().gb_total_bound();  // throws NotTotallyGeodesic
  if (mode == GradientMode::mixed && m.step() != 2) {
    throw DomainError("mixed gradient mode needs a step-2 Carnot model");
  }
  const FrameAlgebra & fa = m.frame();
  const int d = geo.dim();
  const Diffusion diff(geo);
  const auto gradient = [&](const GroupPoint & y) { return grad ? grad(y) : numeric_gradient(geo, f, y); };
  // Common random numbers: P_t f(y) = E f(y W_t) with W the path from the identity.
  const GroupPoint e = geo.group().identity();
  const double h = 1e-5;

  AuditReport rep;
  rep.name = mode == GradientMode::total ? "gradient_total" : "gradient_mixed";
  if (mode == GradientMode::total) {
    rep.columns = {"t", "lhs", "lhs_se", "rhs", "rhs_se", "bound", "margin"};
    rep.units = {"time", "f/length", "f/length", "f/length", "f/length", "f/length", "f/length"};
  } else {
    rep.columns = {"t", "lhs", "lhs_se", "rhs", "rhs_se", "ratio", "ceiling"};
    rep.units = {"time", "f/length", "f/length", "f/length", "f/length", "1", "1"};
  }
  rep.tolerances = {{"relative", rel_tol}, {"se_multiple", 3.0}};
  rep.summary = {{"K_gb", K}};

  const double k_mix = -K;
  double ceiling = 0.0;
  for (double t : times) { ceiling = std::max(ceiling, std::max(1.0 / std::sqrt(t), std::sqrt(t))); }
  ceiling *= std::sqrt(2.0) * std::exp(k_mix);
  double max_ratio = 0.0;

  for (double t : times) {
    std::vector<Vec> dirs(cfg.n_paths);
    std::vector<double> gh(cfg.n_paths), gv(cfg.n_paths), gfull(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.threads, [&](int i) {
      const GroupPoint wt = diff.marginals(e, cfg, static_cast<std::uint64_t>(i), {t})[0];
      Vec dv(d);
      for (int a = 0; a < d; ++a) {
        const Vec step = h * unit(d, a);
        dv[a] = (f(geo.group().mul(geo.mul_exp_frame(x, step), wt)) -
                 f(geo.group().mul(geo.mul_exp_frame(x, -step), wt))) /
                (2.0 * h);
      }
      dirs[i] = dv;
      const Vec g = gradient(geo.group().mul(x, wt));
      gh[i] = fa.proj_h(g).norm();
      gv[i] = fa.proj_v(g).norm();
      gfull[i] = g.norm();
    });
    Vec mean = Vec::Zero(d);
    for (const Vec & v : dirs) { mean += v; }
    mean /= cfg.n_paths;
    Mat cov = Mat::Zero(d, d);
    for (const Vec & v : dirs) { cov += (v - mean) * (v - mean).transpose(); }
    cov /= std::max(1, cfg.n_paths - 1) * static_cast<double>(cfg.n_paths);  // covariance of the mean
    // Delta method for the norm of a mean vector.
    auto norm_se = [&](const Vec & sel) {
      const Vec mm = mean.cwiseProduct(sel);
      const double nrm = mm.norm();
      if (nrm == 0.0) { return std::sqrt(cov.diagonal().dot(sel)); }
      const Vec u = mm / nrm;
      return std::sqrt(std::max(0.0, u.dot(cov * u)));
    };
    const Vec all = Vec::Ones(d);
    const Vec hs = fa.h_mask();
    const Vec vs = all - hs;
    if (mode == GradientMode::total) {
      const double lhs = mean.norm();
      const double lhs_se = norm_se(all);
      const MeanSe rhs = mean_se(gfull);
      const double factor = std::exp(-K * t);
      const double bound = factor * rhs.mean * (1.0 + rel_tol);
      const double margin = bound + 3.0 * std::hypot(lhs_se, factor * rhs.se) - lhs;
      rep.add({t, lhs, lhs_se, rhs.mean, rhs.se, bound, margin}, "mc", true, margin >= 0.0);
    } else {
      const double lh = mean.cwiseProduct(hs).norm(), lv = mean.cwiseProduct(vs).norm();
      const double lhs = lh + t * lv;
      const double lhs_se = std::hypot(norm_se(hs), t * norm_se(vs));
      const MeanSe rh = mean_se(gh), rv = mean_se(gv);
      const double rhs = rh.mean + t * rv.mean;
      const double rhs_se = std::hypot(rh.se, t * rv.se);
      const double ratio = rhs > 0.0 ? lhs / rhs : 0.0;
      max_ratio = std::max(max_ratio, ratio);
      const double slack = rhs > 0.0 ? 3.0 * std::hypot(lhs_se, ratio * rhs_se) / rhs : 0.0;
      rep.add({t, lhs, lhs_se, rhs, rhs_se, ratio, ceiling}, "mc", true, ratio <= ceiling * (1.0 + rel_tol) + slack);
    }
  }
  if (mode == GradientMode::mixed) {
    rep.summary.push_back({"max_ratio", max_ratio});
    rep.summary.push_back({"ceiling", ceiling});
  }
  return rep;
}

}  // namespace folcomp

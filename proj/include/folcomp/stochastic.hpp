#pragma once

#include "folcomp/audit.hpp"
#include "folcomp/geodesy.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace folcomp
{

struct SimConfig
{
  double dt = 1e-3;
  double t_end = 1.0;
  int n_paths = 10000;
  std::uint64_t seed = 42;
  /// Steps between transport-map refreshes in coupled runs.
  int coupling_refresh = 1;
  int threads = 1;
};

struct PathRecord
{
  std::vector<double> times;
  std::vector<GroupPoint> points;
  /// Horizontal Gaussian increments, covariance 2 dt I.
  std::vector<Vec> noise;
  std::uint64_t stream_id = 0;
  bool exploded = false;
};

struct SemigroupEstimate
{
  double value = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
};

using PointFunction = std::function<double(const GroupPoint &)>;

/// Independent generator for (seed, stream, purpose).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t purpose);

/// Engine plus its own normal distribution (which caches a variate), one per path.
struct PathRng
{
  PathRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t purpose)
      : engine(make_stream(seed, stream, purpose))
  {
  }
  double normal() { return dist(engine); }

  std::mt19937_64 engine;
  std::normal_distribution<double> dist{0.0, 1.0};
};

/// Purposes keep the substreams of one path apart.
enum StreamPurpose : std::uint64_t
{
  kPathNoise = 1,
  kComparisonNoise = 2,
  kVolumeSamples = 3,
};

/// Geometric Stratonovich scheme for horizontal Brownian motion with generator Delta_H.
class Diffusion
{
public:
  explicit Diffusion(const Geodesy & geo);

  const Geodesy & geodesy() const { return geo_; }
  int n() const { return static_cast<int>(hidx_.size()); }
  int steps(double t, double dt) const;

  /// Frame increment sum eta_i X_i - dt * sum nabla_{X_i} X_i; eta receives the
  /// horizontal noise when given.
  Vec increment(PathRng & rng, double dt, Vec * eta = nullptr) const;
  /// Frame vector with the horizontal noise placed on the horizontal indices.
  Vec embed(const Vec & eta) const;
  GroupPoint advance(const GroupPoint & x, const Vec & frame_increment) const
  {
    return geo_.mul_exp_frame(x, frame_increment);
  }

  /// Points of the path from p at the grid steps closest to `times`.
  std::vector<GroupPoint> marginals(const GroupPoint & p, const SimConfig & cfg, std::uint64_t stream,
                                    const std::vector<double> & times) const;

private:
  const Geodesy & geo_;
  std::vector<int> hidx_;
  Vec drift_;
};

/// Distances along Monte Carlo paths: continuation from a nearby solution,
/// checked against the one-parameter-subgroup length, with a reduced multistart
/// certificate as fallback.
class DistanceTracker
{
public:
  explicit DistanceTracker(const Geodesy & geo, double max_step = 0.05);

  struct Result
  {
    double d = 0.0;
    Vec w;
    bool ok = false;
  };

  /// Length of exp(t log(a^-1 b)), an upper bound of d(a, b).
  double upper(const GroupPoint & a, const GroupPoint & b) const;
  /// Lower bound from the projection to the horizontal layer (graded models), else 0.
  double lower(const GroupPoint & a, const GroupPoint & b) const;

  Result warm(const GroupPoint & a, const GroupPoint & b, const Vec * seed) const;
  Result certified(const GroupPoint & a, const GroupPoint & b, const Vec * seed) const;

private:
  const Geodesy & geo_;
  double max_step_;
  bool projection_lower_;
};

PathRecord hbm_path(const Geodesy & geo, const GroupPoint & p, const SimConfig & cfg, std::uint64_t stream);

SemigroupEstimate semigroup_estimate(const Geodesy & geo, const PointFunction & f, const GroupPoint & x, double t,
                                     const SimConfig & cfg);

/// Quantiles of d(p, xi_t) against the radial comparison diffusion.
/// Columns: t, quantile, r_quantile, r_se, comparison_quantile, comparison_se, margin.
AuditReport radial_comparison_run(const Geodesy & geo, const GroupPoint & p, const SimConfig & cfg,
                                  const std::vector<double> & times = {0.25, 0.5, 1.0},
                                  const std::vector<double> & quantiles = {0.5, 0.9, 0.99});

/// P(sup_{s <= t} d(p, xi_s) >= r) on a grid. Columns: r, probability, std_error.
/// Summary: fitted slope of log P against r^2 on [fit_lo, fit_hi].
AuditReport exit_tail(const Geodesy & geo, const GroupPoint & p, const std::vector<double> & r_grid, double t,
                      const SimConfig & cfg, double fit_lo = 2.0, double fit_hi = 4.0, int stride = 1);

struct HeatDiagBound
{
  double value = 0.0;
  double std_error = 0.0;
  double exit_probability = 0.0;
  double exit_se = 0.0;
  double volume = 0.0;
  double volume_se = 0.0;
};

/// Lower bound of p_{2t}(x, x) from (1 - P(exit))^2 / mu(B(x, r)).
HeatDiagBound heat_diag_lower(const Geodesy & geo, const GroupPoint & x, double t, double r, const SimConfig & cfg,
                              int volume_samples = 200000);

/// Coupling by skewed transport. Columns: t, mean_distance, std_error, bound, margin, paths.
AuditReport parallel_coupling_run(const Geodesy & geo, const GroupPoint & p, const GroupPoint & q,
                                  const SimConfig & cfg, const std::vector<double> & times = {0.25, 0.5, 1.0},
                                  double rel_tol = 0.02);

/// Lip(P_t f) against e^{-Kt} Lip(f) over pairs, via coupled paths.
/// Columns: pair_id, distance, ratio, std_error, bound, margin.
AuditReport lipschitz_audit(const Geodesy & geo, const PointFunction & f, double lip_f,
                            const std::vector<std::pair<GroupPoint, GroupPoint>> & pairs, double t,
                            const SimConfig & cfg, double rel_tol = 0.02);

enum class GradientMode
{
  total,  // |grad P_t f| <= e^{-Kt} P_t |grad f|
  mixed,  // step-2 Carnot: |grad_H P_t f| + t |grad_V P_t f| against P_t|grad_H f| + t P_t|grad_V f|
};

/// Frame gradient of f at x (left-invariant derivatives); numeric when not supplied.
using GradientFunction = std::function<Vec(const GroupPoint &)>;

/// Columns (total): t, lhs, lhs_se, rhs, rhs_se, bound, margin.
/// Columns (mixed): t, lhs, lhs_se, rhs, rhs_se, ratio, ceiling.
AuditReport gradient_bound_audit(const Geodesy & geo, const PointFunction & f, const GroupPoint & x,
                                 const std::vector<double> & times, const SimConfig & cfg,
                                 GradientMode mode = GradientMode::total, const GradientFunction & grad = nullptr,
                                 double rel_tol = 0.02);

/// Quantile of sorted data with its order-statistic standard error.
std::pair<double, double> quantile_with_se(const std::vector<double> & sorted, double q);

}  // namespace folcomp

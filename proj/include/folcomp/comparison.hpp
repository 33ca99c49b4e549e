#pragma once

#include "folcomp/audit.hpp"
#include "folcomp/geodesy.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace folcomp
{

/// Bound of the horizontal Laplacian of the distance function at distance r.
double model_bound(double K, int n, double r);
/// Bound of the skewed-coupled horizontal Laplacian of d(p, q) at d = r.
double coupled_bound(double K, int n, double r);

/// Profile functions of the comparison proofs.
struct ComparisonProfile
{
  double K = 0.0;
  int n = 1;

  double s(double t) const;
  /// Solution of n c'' = K c with c(0) = c(r) = 1.
  double c(double t, double r) const;
};

/// Finite-difference estimate at step h with its half-step refinement.
struct FdEstimate
{
  double value = 0.0;       // step h
  double refined = 0.0;     // step h / 2
  double richardson = 0.0;  // (4 refined - value) / 3
  double error = 0.0;       // |value - refined|
  double distance = 0.0;    // base distance
};

/// Horizontal Laplacian of r_p at x by central differences along the left-invariant
/// horizontal frame. Throws UncertifiedDistance off the certified region.
FdEstimate horizontal_laplacian_distance(const Geodesy & geo, const GroupPoint & p, const GroupPoint & x,
                                         double h = 1e-3);

/// Coupled horizontal Laplacian of d at (p, q), skewed-transported frames, paired geodesic flows.
FdEstimate coupled_laplacian_distance(const Geodesy & geo, const GroupPoint & p, const GroupPoint & q,
                                      double h = 1e-3);

enum class ComparisonKind
{
  laplacian,
  coupled,
};

struct ComparisonOptions
{
  ComparisonKind kind = ComparisonKind::laplacian;
  double h = 1e-3;
  /// Additive tolerance on measured <= bound; negative selects the default
  /// (5e-3, or 2e-3 on flat models for the Laplacian audit).
  double tol = -1.0;
  /// Lower bound K; NaN takes it from the tensor report.
  double K = std::numeric_limits<double>::quiet_NaN();
};

/// Sweeps points at the given radii from the identity along `directions` unit
/// directions (half horizontal, half generic). Columns: r, direction_id,
/// measured, bound, margin, fd_error.
AuditReport comparison_audit(const Geodesy & geo, const std::vector<double> & radii, int directions,
                             const ComparisonOptions & opt = {});

struct BonnetMyersOptions
{
  std::uint64_t seed = 42;
  double tol = 1e-2;
  /// Pairs re-solved with the full multistart certificate: the largest distances
  /// found, plus an evenly spaced subsample.
  int certify_top = 200;
  int certify_spread = 200;
};

/// Diameter audit over Haar-sampled pairs; throws NonPositiveK unless K > 0.
/// Columns: pair_id, distance, bound, margin.
AuditReport bonnet_myers_audit(const Geodesy & geo, int samples, const BonnetMyersOptions & opt = {});

/// Haar-distributed point (Lebesgue in exponential coordinates within `box` for
/// nilpotent groups, uniform quaternion for SU(2)).
template <class Rng>
GroupPoint haar_sample(const Group & g, Rng & rng, double box = 1.0);

}  // namespace folcomp

#include <random>

namespace folcomp
{

template <class Rng>
GroupPoint haar_sample(const Group & g, Rng & rng, double box)
{
  if (g.kind() == GroupKind::su2) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec q(4);
    do {
      for (int i = 0; i < 4; ++i) { q[i] = n(rng); }
    } while (q.norm() < 1e-12);
    return {q / q.norm()};
  }
  std::uniform_real_distribution<double> u(-box, box);
  Vec c(g.dim());
  for (int i = 0; i < g.dim(); ++i) { c[i] = u(rng); }
  return {c};
}

}  // namespace folcomp

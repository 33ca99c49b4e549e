#pragma once

#include "folcomp/connection.hpp"
#include "folcomp/group.hpp"
#include "folcomp/model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace folcomp
{

enum class MinimalCertificate
{
  certified,
  uncertified,
  failed,
};

enum class TransportKind
{
  skewed,  // nabla_g' X + 1/2 (J_g' X)_H = 0, horizontal inputs
  circ,    // nabla-circ parallel
};

enum class CutStatus
{
  in_C,
  uncertain,
};

const char * to_string(MinimalCertificate c);
const char * to_string(TransportKind k);
const char * to_string(CutStatus c);

struct GeodesicSample
{
  double t;
  Vec v;  // unit velocity, model coordinates
  GroupPoint point;
};

struct GeodesicRecord
{
  GroupPoint start;
  Vec initial_velocity;  // unit, model coordinates
  double length = 0.0;
  std::vector<GeodesicSample> samples;
  MinimalCertificate minimal_certificate = MinimalCertificate::uncertified;
  /// Frame coordinates of length * initial velocity (the shooting unknown).
  Vec shooting_vector;
  int steps = 0;

  const GroupPoint & endpoint() const { return samples.back().point; }
};

struct DistanceOptions
{
  /// Fixed number of integration steps per geodesic; keeps the endpoint map
  /// smooth in the shooting vector. Used when max_step is zero.
  int steps = 256;
  /// When positive, steps = ceil(length / max_step) from the first seed.
  double max_step = 0.0;
  int starts = 20;
  int min_agree = 3;
  double tol = 1e-12;
  int max_iter = 40;
  bool multistart = true;
  /// Extra initial shooting vectors (frame coordinates), tried first.
  std::vector<Vec> seeds;
  /// Samples stored on the returned record (0 keeps only the endpoints).
  int samples = 0;
};

struct DistanceSolution
{
  Vec w;  // frame coordinates; geodesic is t -> exp flow of w over [0, 1]
  double length = 0.0;
  double residual = 0.0;
  MinimalCertificate certificate = MinimalCertificate::failed;
  bool unique = false;
  double jacobian_ratio = 0.0;  // smallest / largest singular value
  int converged = 0;
  int agreeing = 0;
  int steps = 0;
};

/**
 * Geodesics, distance, and transports of a model with an exact group law.
 *
 * Velocities in the core routines are frame coordinates (orthonormal frame of
 * the model); the model-basis entry points convert.
 */
class Geodesy
{
public:
  explicit Geodesy(const FoliatedModel & m);

  const FoliatedModel & model() const { return geometry_.model(); }
  const Geometry & geometry() const { return geometry_; }
  const Group & group() const { return group_; }
  int dim() const { return dim_; }

  Vec to_model(const Vec & frame) const { return identity_frame_ ? frame : model().from_frame(frame); }
  Vec to_frame(const Vec & m) const { return identity_frame_ ? m : model().to_frame(m); }
  /// p * exp(v) for v in frame coordinates.
  GroupPoint mul_exp_frame(const GroupPoint & p, const Vec & v) const { return group_.mul_exp(p, to_model(v)); }
  /// log(p^-1 q) in frame coordinates.
  Vec between_frame(const GroupPoint & p, const GroupPoint & q) const { return to_frame(group_.between(p, q)); }

  /// Right-hand side of the left-trivialized geodesic equation.
  Vec euler_arnold(const Vec & v) const { return geometry_.algebra().ad_star(v, v); }

  /// End point of the geodesic from p with initial frame velocity w over unit time.
  GroupPoint shoot(const GroupPoint & p, const Vec & w, int steps) const;
  /// Same, also propagating the transport of the given kind; `transport`
  /// receives the map from initial to final frame vectors.
  GroupPoint shoot_transport(const GroupPoint & p, const Vec & w, int steps, TransportKind kind, Mat & transport) const;

  GeodesicRecord exp_map(const GroupPoint & p, const Vec & v_model, double T, int steps = 0) const;

  DistanceSolution solve(const GroupPoint & p, const GroupPoint & q, const DistanceOptions & opt = {}) const;
  GeodesicRecord distance(const GroupPoint & p, const GroupPoint & q, const DistanceOptions & opt = {}) const;
  /// Record of the geodesic with shooting vector w (frame) from p.
  GeodesicRecord record(const GroupPoint & p, const Vec & w, int steps, int samples) const;

  Vec transport(const GeodesicRecord & g, const Vec & v0_model, TransportKind kind) const;
  /// Transport matrix along the geodesic with shooting vector w (frame coordinates in and out).
  Mat transport_matrix(const Vec & w, int steps, TransportKind kind) const;

  CutStatus cut_certificate(const GroupPoint & p, const GroupPoint & q, const DistanceOptions & opt = {}) const;

  enum class IndexMode
  {
    riemannian,
    horizontal,
  };
  using Field = std::function<Vec(double)>;
  /// Index form of a field (model coordinates, left-trivialized) along a unit-speed
  /// record, composite Simpson on the record's sample grid. `derivative` defaults
  /// to a fourth-order central difference of `field`.
  double index_form(const GeodesicRecord & g, const Field & field, IndexMode mode,
                    const Field & derivative = nullptr) const;

private:
  void step(GroupPoint & x, Vec & v, Vec & f0, double h) const;
  Mat transport_generator(const Vec & v, TransportKind kind) const;
  Vec residual(const Vec & w, const GroupPoint & target, int steps) const;
  Mat jacobian(const Vec & w, const Vec & r0, const GroupPoint & target, int steps) const;
  bool newton(Vec & w, const GroupPoint & target, int steps, const DistanceOptions & opt, double & res) const;

  Geometry geometry_;
  Group group_;
  int dim_;
  bool identity_frame_;
  std::vector<Mat> skew_gen_;
  std::vector<Mat> circ_gen_;
};

/// Deterministic quasi-random unit directions in R^d (Halton points pushed through Box-Muller).
std::vector<Vec> quasi_random_directions(int d, int count);

// Model-basis entry points.
GeodesicRecord exp_map(const FoliatedModel & m, const GroupPoint & p, const Vec & v, double T);
GeodesicRecord distance(const FoliatedModel & m, const GroupPoint & p, const GroupPoint & q);
Vec transport(const FoliatedModel & m, const GeodesicRecord & g, const Vec & v0, TransportKind kind);
CutStatus cut_certificate(const FoliatedModel & m, const GroupPoint & p, const GroupPoint & q);

}  // namespace folcomp

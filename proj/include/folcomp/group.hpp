#pragma once

#include <vector>

#include "folcomp/model.hpp"
#include "folcomp/types.hpp"

#include <string>

namespace folcomp
{

/// Baker-Campbell-Hausdorff series log(exp(x) exp(y)) truncated after brackets
/// of total degree `order` (at most 5). Exact on algebras of nilpotency class <= order.
template <class V, class Bracket>
V bch(const V & x, const V & y, const Bracket & br, int order)
{
  V z = x + y;
  if (order < 2) { return z; }
  const V xy = br(x, y);
  z += 0.5 * xy;
  if (order < 3) { return z; }
  const V x_xy = br(x, xy);
  const V y_yx = br(y, V(-xy));
  z += (1.0 / 12.0) * (x_xy + y_yx);
  if (order < 4) { return z; }
  const V y_x_xy = br(y, x_xy);
  z -= (1.0 / 24.0) * y_x_xy;
  if (order < 5) { return z; }
  const V yx = -xy;
  const V y_y_y_yx = br(y, br(y, y_yx));
  const V x_x_x_xy = br(x, br(x, x_xy));
  const V x_y_y_yx = br(x, br(y, y_yx));
  const V y_x_x_xy = br(y, br(x, x_xy));
  const V y_x_y_xy = br(y, br(x, br(y, xy)));
  const V x_y_x_yx = br(x, br(y, br(x, yx)));
  z += (-1.0 / 720.0) * (y_y_y_yx + x_x_x_xy) + (1.0 / 360.0) * (x_y_y_yx + y_x_x_xy) +
       (1.0 / 120.0) * (y_x_y_xy + x_y_x_yx);
  return z;
}

enum class GroupKind
{
  nilpotent,  // exponential coordinates, BCH group law
  su2,        // unit quaternions
};

/// Point of the simply connected group. Nilpotent models: exponential
/// coordinates in the model basis. SU(2): unit quaternion (w, x, y, z).
struct GroupPoint
{
  Vec c;
};

/**
 * Exact coordinate group law for a validated model.
 *
 * Algebra vectors are model-basis coefficients. Supported: nilpotent algebras of
 * class at most 5, and su(2) given as [e1,e2] = l e3 with cyclic permutations.
 */
class Group
{
public:
  explicit Group(const FoliatedModel & m);

  GroupKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int nilpotency_class() const { return class_; }
  bool abelian() const { return kind_ == GroupKind::nilpotent && class_ <= 1; }

  GroupPoint identity() const;
  GroupPoint mul(const GroupPoint & a, const GroupPoint & b) const;
  GroupPoint inverse(const GroupPoint & a) const;
  GroupPoint exp(const Vec & v) const;
  /// Principal logarithm (for SU(2): rotation angle in [0, pi]).
  Vec log(const GroupPoint & p) const;
  /// All logarithms worth trying as geodesic guesses: the principal one, and for
  /// SU(2) also the complementary arc of the same one-parameter subgroup.
  std::vector<Vec> log_branches(const GroupPoint & p) const;
  /// p * exp(v).
  GroupPoint mul_exp(const GroupPoint & p, const Vec & v) const;
  /// log(p^-1 q).
  Vec between(const GroupPoint & p, const GroupPoint & q) const { return log(mul(inverse(p), q)); }

  /// Output coordinates: exponential coordinates or quaternion components.
  const Vec & coordinates(const GroupPoint & p) const { return p.c; }
  GroupPoint from_coordinates(const Vec & c) const;
  int coordinate_count() const { return kind_ == GroupKind::su2 ? 4 : dim_; }
  std::string coordinate_label(int i, const FoliatedModel & m) const;

  Vec bracket(const Vec & x, const Vec & y) const;

private:
  GroupKind kind_ = GroupKind::nilpotent;
  int dim_ = 0;
  int class_ = 0;
  double su2_scale_ = 1.0;  // e_i maps to su2_scale_ times the quaternion unit
  std::vector<double> table_;
  struct Entry
  {
    int i, j, k;
    double c;
  };
  std::vector<Entry> entries_;
};

}  // namespace folcomp

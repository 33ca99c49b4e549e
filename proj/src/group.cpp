#include "folcomp/group.hpp"

#include "folcomp/errors.hpp"

#include <cmath>

namespace folcomp
{

namespace
{

Vec quat_mul(const Vec & a, const Vec & b)
{
  Vec out(4);
  const Eigen::Vector3d va = a.tail<3>(), vb = b.tail<3>();
  out[0] = a[0] * b[0] - va.dot(vb);
  out.tail<3>() = a[0] * vb + b[0] * va + va.cross(vb);
  return out;
}

bool is_su2(const FoliatedModel & m, double & scale)
{
  if (m.dim() != 3) { return false; }
  const double l = m.c(0, 1, 2);
  if (!(l > 0.0)) { return false; }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) {
        double want = 0.0;
        if ((i + 1) % 3 == j && (j + 1) % 3 == k) { want = l; }
        if ((j + 1) % 3 == i && (i + 1) % 3 == k) { want = -l; }
        if (m.c(i, j, k) != want) { return false; }
      }
    }
  }
  scale = 0.5 * l;
  return true;
}

}  // namespace

Group::Group(const FoliatedModel & m) : dim_(m.dim()), class_(m.nilpotency_class()), table_(m.bracket_table())
{
  for (int i = 0; i < dim_; ++i) {
    for (int j = i + 1; j < dim_; ++j) {
      for (int k = 0; k < dim_; ++k) {
        const double c = m.c(i, j, k);
        if (c != 0.0) { entries_.push_back({i, j, k, c}); }
      }
    }
  }
  if (class_ >= 1 && class_ <= 5) {
    kind_ = GroupKind::nilpotent;
  } else if (is_su2(m, su2_scale_)) {
    kind_ = GroupKind::su2;
  } else {
    throw UnsupportedGroup("model '" + m.name() +
                           "' has no exact group law here (needs nilpotency class <= 5 or su(2))");
  }
}

Vec Group::bracket(const Vec & x, const Vec & y) const
{
  Vec out = Vec::Zero(dim_);
  for (const auto & e : entries_) { out[e.k] += e.c * (x[e.i] * y[e.j] - x[e.j] * y[e.i]); }
  return out;
}

GroupPoint Group::identity() const
{
  if (kind_ == GroupKind::su2) {
    Vec q = Vec::Zero(4);
    q[0] = 1.0;
    return {q};
  }
  return {Vec::Zero(dim_)};
}

GroupPoint Group::mul(const GroupPoint & a, const GroupPoint & b) const
{
  if (kind_ == GroupKind::su2) {
    Vec q = quat_mul(a.c, b.c);
    q /= q.norm();
    return {q};
  }
  if (class_ <= 1) { return {a.c + b.c}; }
  return {bch(a.c, b.c, [this](const Vec & x, const Vec & y) { return bracket(x, y); }, class_)};
}

GroupPoint Group::inverse(const GroupPoint & a) const
{
  if (kind_ == GroupKind::su2) {
    Vec q = a.c;
    q.tail<3>() = -q.tail<3>();
    return {q};
  }
  return {-a.c};
}

GroupPoint Group::exp(const Vec & v) const
{
  if (kind_ == GroupKind::su2) {
    const Eigen::Vector3d w = su2_scale_ * v.head<3>();
    const double th = w.norm();
    Vec q(4);
    q[0] = std::cos(th);
    const double sinc = th < 1e-8 ? 1.0 - th * th / 6.0 : std::sin(th) / th;
    q.tail<3>() = sinc * w;
    return {q};
  }
  return {v};
}

Vec Group::log(const GroupPoint & p) const
{
  if (kind_ == GroupKind::su2) {
    const Eigen::Vector3d im = p.c.tail<3>();
    const double n = im.norm();
    Vec v(3);
    if (n == 0.0) {
      v.setZero();
      // -1 has a whole sphere of logarithms; pick the first axis.
      if (p.c[0] < 0.0) { v[0] = kPi / su2_scale_; }
      return v;
    }
    const double th = std::atan2(n, p.c[0]);
    v = (th / n / su2_scale_) * im;
    return v;
  }
  return p.c;
}

std::vector<Vec> Group::log_branches(const GroupPoint & p) const
{
  std::vector<Vec> out{log(p)};
  if (kind_ == GroupKind::su2) {
    const double n = out[0].norm();
    if (n > 0.0) {
      const double period = 2.0 * kPi / su2_scale_;
      out.push_back(out[0] * ((n - period) / n));
    }
  }
  return out;
}

GroupPoint Group::mul_exp(const GroupPoint & p, const Vec & v) const { return mul(p, exp(v)); }

GroupPoint Group::from_coordinates(const Vec & c) const
{
  if (kind_ == GroupKind::su2) {
    if (c.size() != 4) { throw SpecError("SU(2) points need 4 quaternion coordinates"); }
    const double n = c.norm();
    if (n == 0.0) { throw SpecError("quaternion coordinates must be nonzero"); }
    return {c / n};
  }
  if (c.size() != dim_) { throw SpecError("point needs " + std::to_string(dim_) + " exponential coordinates"); }
  return {c};
}

std::string Group::coordinate_label(int i, const FoliatedModel & m) const
{
  if (kind_ == GroupKind::su2) {
    static const char * q[] = {"q_w", "q_x", "q_y", "q_z"};
    return q[i];
  }
  return "x_" + m.spec().basis_labels[i];
}

}  // namespace folcomp

#pragma once

#include "folcomp/model.hpp"
#include "folcomp/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace folcomp
{

enum class ConnectionKind
{
  levi_civita,  // D
  adapted,      // nabla
  circ,         // nabla + J
};

const char * to_string(ConnectionKind kind);

/// Matrices of the horizontal-frame sums entering the Ricci-like tensor.
struct TensorComponents
{
  Mat ric_h;            // sum_i <R(U, X_i) X_i, V>
  Mat div_torsion;      // <delta Tor(U), V>
  Mat torsion_pairing;  // sum_i <Tor(U, X_i), Tor(V, X_i)>
  Mat j_pairing;        // sum_i <J_U X_i, J_V X_i>_H
};

struct TensorReport
{
  Mat frak_R;  // assembled from the four-case decomposition, orthonormal frame
  Mat frak_R_definitional;
  TensorComponents components;
  double K = 0.0;
  double yang_mills_residual = 0.0;
  bool symmetric = false;
  double decomposition_residual = 0.0;
  /// Max deviation of the closed-form nilpotent formulas (four items) from the
  /// definitional tensor; only filled for Carnot models.
  std::optional<std::array<double, 4>> carnot_formula_residuals;
};

/**
 * Constant connection data of a left-invariant model, in the orthonormal frame.
 *
 * Every bilinear map B is stored as dim matrices B[a] whose column b is
 * B(f_a, f_b). All vector arguments are frame coordinates.
 */
class Geometry
{
public:
  explicit Geometry(const FoliatedModel & m);

  const FoliatedModel & model() const { return model_; }
  const FrameAlgebra & algebra() const { return model_.frame(); }
  int dim() const { return dim_; }

  Vec bracket(const Vec & x, const Vec & y) const { return algebra().bracket(x, y); }
  Vec levi_civita(const Vec & x, const Vec & y) const { return apply(d_, x, y); }
  Vec adapted(const Vec & x, const Vec & y) const { return apply(nabla_, x, y); }
  Vec circ(const Vec & x, const Vec & y) const { return apply(circ_, x, y); }
  Vec connection(ConnectionKind kind, const Vec & x, const Vec & y) const { return apply(table(kind), x, y); }
  Vec c_map(const Vec & x, const Vec & y) const { return apply(c_, x, y); }
  Vec torsion(const Vec & x, const Vec & y) const { return apply(tor_, x, y); }
  /// J_z x.
  Vec j_map(const Vec & z, const Vec & x) const { return apply(j_, z, x); }
  /// A_x y = D_x y - nabla_x y.
  Vec a_map(const Vec & x, const Vec & y) const { return apply(a_, x, y); }

  /// Matrix of y -> conn_x y.
  Mat connection_matrix(ConnectionKind kind, const Vec & x) const { return contract(table(kind), x); }
  Mat j_matrix(const Vec & z) const { return contract(j_, z); }

  Vec curvature(ConnectionKind kind, const Vec & x, const Vec & y, const Vec & z) const;
  Vec riem_D_decomposed(const Vec & x, const Vec & y, const Vec & z) const;
  /// (nabla_w Tor)(x, y) for constant-coefficient fields.
  Vec cov_torsion(const Vec & w, const Vec & x, const Vec & y) const;
  /// (nabla_w A)_x y.
  Vec cov_a(const Vec & w, const Vec & x, const Vec & y) const;

  /// Definitional horizontal-frame sum. Columns of `frame` must be an orthonormal
  /// basis of H; defaults to the model frame.
  Mat frak_R(const std::optional<Mat> & frame = std::nullopt) const;
  TensorComponents components(const std::optional<Mat> & frame = std::nullopt) const;
  TensorReport report() const;
  /// Minimum eigenvalue of the symmetric part of frak_R - J_pairing / 4.
  double gb_total_bound() const;

  /// sum_i nabla_{X_i} X_i (the first-order part of the horizontal Laplacian).
  const Vec & horizontal_drift() const { return drift_; }

private:
  using Table = std::vector<Mat>;

  const Table & table(ConnectionKind kind) const;
  Vec apply(const Table & t, const Vec & x, const Vec & y) const;
  Mat contract(const Table & t, const Vec & x) const;
  Mat horizontal_frame(const std::optional<Mat> & frame) const;

  FoliatedModel model_;
  int dim_;
  Table d_, nabla_, circ_, c_, tor_, j_, a_;
  Vec drift_;
};

double min_sym_eigenvalue(const Mat & a);

// Model-basis entry points. Vectors are model coordinates; matrices in reports
// are in the orthonormal frame.
Vec levi_civita(const FoliatedModel & m, const Vec & x, const Vec & y);
double c_tensor(const FoliatedModel & m, const Vec & x, const Vec & y, const Vec & z);
Vec adapted_connection(const FoliatedModel & m, const Vec & x, const Vec & y);
Vec torsion(const FoliatedModel & m, const Vec & x, const Vec & y);
Vec j_map(const FoliatedModel & m, const Vec & z, const Vec & x);
Vec curvature(const FoliatedModel & m, ConnectionKind kind, const Vec & x, const Vec & y, const Vec & z);
Vec riem_D_via_decomposition(const FoliatedModel & m, const Vec & x, const Vec & y, const Vec & z);
double frak_R(const FoliatedModel & m, const Vec & u, const Vec & v);
TensorReport frak_R_decomposed(const FoliatedModel & m);
double gb_total_bound(const FoliatedModel & m);

}  // namespace folcomp

#pragma once

#include "folcomp/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace folcomp
{

/// [e_i, e_j] = c e_k with 0-based indices.
struct StructureConstant
{
  int i;
  int j;
  int k;
  double c;
};

/// Raw model description, field-for-field with the JSON model file.
/// Indices are 0-based here; the file format is 1-based.
struct ModelSpec
{
  std::string name;
  int dim = 0;
  std::vector<std::string> basis_labels;
  std::vector<StructureConstant> structure_constants;
  std::vector<int> horizontal_indices;
  std::vector<int> vertical_indices;
  Mat metric;  // empty means identity
  std::optional<std::vector<std::vector<int>>> grading;
  double epsilon = 1.0;
};

struct Certificates
{
  bool antisymmetric = false;
  bool jacobi = false;
  bool vertical_subalgebra = false;
  bool bundle_like = false;
  bool bracket_generating = false;
  bool minimal_leaves = false;
  bool totally_geodesic = false;
  bool carnot = false;
};

struct ValidationOptions
{
  /// Control models (e.g. a flat space with a non-generating plane) waive this.
  bool require_bracket_generating = true;
  double tol = 1e-12;
};

/**
 * Lie algebra written in an orthonormal frame adapted to the splitting.
 *
 * Frame vector f_i is the block-wise Gram-Schmidt image of model basis vector
 * e_i, so index i is horizontal in the frame exactly when it is horizontal in
 * the model. With the identity metric the frame is the model basis.
 */
class FrameAlgebra
{
public:
  struct Entry
  {
    int a;
    int b;
    int k;
    double c;  // [f_a, f_b] has c along f_k, a < b
  };

  FrameAlgebra() = default;
  FrameAlgebra(int dim, std::vector<bool> horizontal, const std::vector<double> & dense);

  int dim() const { return dim_; }
  int n_horizontal() const { return n_h_; }
  bool is_horizontal(int i) const { return horizontal_[i]; }
  const std::vector<int> & horizontal_indices() const { return h_idx_; }
  const std::vector<int> & vertical_indices() const { return v_idx_; }

  double c(int a, int b, int k) const { return dense_[(a * dim_ + b) * dim_ + k]; }
  const std::vector<Entry> & entries() const { return entries_; }

  Vec bracket(const Vec & x, const Vec & y) const;
  /// Metric adjoint of ad_x applied to u: <ad_star(x, u), w> = <u, [x, w]>.
  Vec ad_star(const Vec & x, const Vec & u) const;
  Vec proj_h(const Vec & x) const { return x.cwiseProduct(h_mask_); }
  Vec proj_v(const Vec & x) const { return x - x.cwiseProduct(h_mask_); }
  const Vec & h_mask() const { return h_mask_; }

private:
  int dim_ = 0;
  int n_h_ = 0;
  std::vector<bool> horizontal_;
  std::vector<int> h_idx_;
  std::vector<int> v_idx_;
  Vec h_mask_;
  std::vector<double> dense_;
  std::vector<Entry> entries_;
};

/// Validated, immutable homogeneous foliation model.
class FoliatedModel
{
public:
  const ModelSpec & spec() const { return spec_; }
  const std::string & name() const { return spec_.name; }
  int dim() const { return spec_.dim; }
  int n_horizontal() const { return static_cast<int>(spec_.horizontal_indices.size()); }
  int n_vertical() const { return static_cast<int>(spec_.vertical_indices.size()); }
  bool is_horizontal(int i) const { return frame_.is_horizontal(i); }

  /// Metric actually in force (vertical block divided by epsilon).
  const Mat & metric() const { return metric_; }
  double epsilon() const { return spec_.epsilon; }
  const Certificates & certificates() const { return certs_; }

  /// Dense model-basis bracket table, entry (i, j, k) at (i * dim + j) * dim + k.
  const std::vector<double> & bracket_table() const { return table_; }
  double c(int i, int j, int k) const { return table_[(i * dim() + j) * dim() + k]; }

  /// Carnot step when the grading certifies, otherwise nullopt.
  std::optional<int> step() const { return step_; }
  /// Number of bracket layers needed for H to span the algebra (0 if it never does).
  int generation_depth() const { return depth_; }
  /// Nilpotency class, 0 when the algebra is not nilpotent.
  int nilpotency_class() const { return nil_class_; }
  bool is_abelian() const { return nil_class_ == 1; }

  const FrameAlgebra & frame() const { return frame_; }
  /// Columns are the frame vectors in model coordinates.
  const Mat & frame_basis() const { return basis_; }
  Vec to_frame(const Vec & model) const { return basis_inv_ * model; }
  Vec from_frame(const Vec & frame) const { return basis_ * frame; }

  double inner(const Vec & u, const Vec & v) const { return u.dot(metric_ * v); }
  double norm(const Vec & u) const;

private:
  friend FoliatedModel validate_model(const ModelSpec &, const ValidationOptions &);

  ModelSpec spec_;
  Mat metric_;
  std::vector<double> table_;
  Certificates certs_;
  std::optional<int> step_;
  int depth_ = 0;
  int nil_class_ = 0;
  FrameAlgebra frame_;
  Mat basis_;
  Mat basis_inv_;
};

FoliatedModel validate_model(const ModelSpec & spec, const ValidationOptions & options = {});

Vec bracket(const FoliatedModel & m, const Vec & u, const Vec & v);
Vec ad_star(const FoliatedModel & m, const Vec & x, const Vec & u);
FoliatedModel canonical_variation(const FoliatedModel & m, double eps);
std::pair<Vec, Vec> split(const FoliatedModel & m, const Vec & u);

ModelSpec parse_model_spec(const std::string & json_text);
ModelSpec load_model_spec(const std::string & path);
std::string model_spec_to_json(const ModelSpec & spec);

}  // namespace folcomp

#include "folcomp/model.hpp"

#include "folcomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace folcomp
{

ValidationFailure::ValidationFailure(std::string certificate, std::array<int, 3> witness, const std::string & detail)
  : Error("ValidationFailure(" + certificate + ", [" + std::to_string(witness[0]) + ", " + std::to_string(witness[1]) +
          ", " + std::to_string(witness[2]) + "]): " + detail),
    certificate_(std::move(certificate)), witness_(witness)
{}

FrameAlgebra::FrameAlgebra(int dim, std::vector<bool> horizontal, const std::vector<double> & dense)
  : dim_(dim), horizontal_(std::move(horizontal)), dense_(dense)
{
  h_mask_ = Vec::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    if (horizontal_[i]) {
      h_idx_.push_back(i);
      h_mask_[i] = 1.0;
    } else {
      v_idx_.push_back(i);
    }
  }
  n_h_ = static_cast<int>(h_idx_.size());
  for (int a = 0; a < dim_; ++a) {
    for (int b = a + 1; b < dim_; ++b) {
      for (int k = 0; k < dim_; ++k) {
        const double v = c(a, b, k);
        if (v != 0.0) { entries_.push_back({a, b, k, v}); }
      }
    }
  }
}

Vec FrameAlgebra::bracket(const Vec & x, const Vec & y) const
{
  Vec out = Vec::Zero(dim_);
  for (const auto & e : entries_) { out[e.k] += e.c * (x[e.a] * y[e.b] - x[e.b] * y[e.a]); }
  return out;
}

Vec FrameAlgebra::ad_star(const Vec & x, const Vec & u) const
{
  // (ad*_x u)_w = sum_k u_k c(x, w, k)
  Vec out = Vec::Zero(dim_);
  for (const auto & e : entries_) {
    out[e.b] += e.c * x[e.a] * u[e.k];
    out[e.a] -= e.c * x[e.b] * u[e.k];
  }
  return out;
}

double FoliatedModel::norm(const Vec & u) const { return std::sqrt(std::max(0.0, inner(u, u))); }

namespace
{

int rank_of(const Mat & cols, double tol = 1e-9)
{
  if (cols.cols() == 0) { return 0; }
  Eigen::JacobiSVD<Mat> svd(cols);
  const auto & s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] > tol * std::max(1.0, s[0])) { ++r; }
  }
  return r;
}

Mat append_col(const Mat & m, const Vec & v)
{
  Mat out(v.size(), m.cols() + 1);
  if (m.cols() > 0) { out.leftCols(m.cols()) = m; }
  out.col(m.cols()) = v;
  return out;
}

/// Orthonormal basis (as columns) of the span of the given columns.
Mat span_basis(const Mat & cols, int dim, double tol = 1e-9)
{
  if (cols.cols() == 0) { return Mat(dim, 0); }
  Eigen::JacobiSVD<Mat> svd(cols, Eigen::ComputeThinU);
  const auto & s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] > tol * std::max(1.0, s[0])) { ++r; }
  }
  return svd.matrixU().leftCols(r);
}

void check_index_sets(const ModelSpec & spec)
{
  if (spec.dim <= 0 || spec.dim > kMaxDim) {
    throw SpecError("dim must be in [1, " + std::to_string(kMaxDim) + "], got " + std::to_string(spec.dim));
  }
  std::vector<int> seen(spec.dim, 0);
  for (int i : spec.horizontal_indices) {
    if (i < 0 || i >= spec.dim) { throw SpecError("horizontal index out of range: " + std::to_string(i + 1)); }
    ++seen[i];
  }
  for (int i : spec.vertical_indices) {
    if (i < 0 || i >= spec.dim) { throw SpecError("vertical index out of range: " + std::to_string(i + 1)); }
    ++seen[i];
  }
  for (int i = 0; i < spec.dim; ++i) {
    if (seen[i] != 1) {
      throw SpecError("horizontal and vertical indices must partition the basis (index " + std::to_string(i + 1) + ")");
    }
  }
  if (spec.horizontal_indices.empty()) { throw SpecError("horizontal index set is empty"); }
  if (!spec.basis_labels.empty() && static_cast<int>(spec.basis_labels.size()) != spec.dim) {
    throw SpecError("basis_labels has " + std::to_string(spec.basis_labels.size()) + " entries, dim is " +
                    std::to_string(spec.dim));
  }
  for (const auto & sc : spec.structure_constants) {
    if (sc.i < 0 || sc.i >= spec.dim || sc.j < 0 || sc.j >= spec.dim || sc.k < 0 || sc.k >= spec.dim) {
      throw SpecError("structure constant index out of range");
    }
    if (!std::isfinite(sc.c)) { throw SpecError("structure constant is not finite"); }
  }
  if (!(spec.epsilon > 0.0) || !std::isfinite(spec.epsilon)) {
    throw NonPositiveEpsilon("epsilon must be positive, got " + std::to_string(spec.epsilon));
  }
}

Mat base_metric(const ModelSpec & spec, bool & identity)
{
  const int d = spec.dim;
  if (spec.metric.size() == 0) {
    identity = true;
    return Mat::Identity(d, d);
  }
  identity = false;
  if (spec.metric.rows() != d || spec.metric.cols() != d) { throw SpecError("metric must be dim x dim"); }
  if ((spec.metric - spec.metric.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw SpecError("metric is not symmetric");
  }
  Eigen::LLT<Mat> llt(spec.metric);
  if (llt.info() != Eigen::Success) { throw SpecError("metric is not positive definite"); }
  for (int h : spec.horizontal_indices) {
    for (int v : spec.vertical_indices) {
      if (std::abs(spec.metric(h, v)) > 1e-12) {
        throw SpecError("horizontal and vertical blocks are not metric-orthogonal");
      }
    }
  }
  return spec.metric;
}

// Block-wise Gram-Schmidt: columns are the frame vectors in model coordinates.
Mat gram_schmidt(const Mat & g, const std::vector<int> & h, const std::vector<int> & v)
{
  const int d = static_cast<int>(g.rows());
  Mat b = Mat::Zero(d, d);
  for (const auto * block : {&h, &v}) {
    std::vector<int> done;
    for (int i : *block) {
      Vec f = unit(d, i);
      for (int j : done) { f -= (b.col(j).dot(g * f)) * b.col(j); }
      f /= std::sqrt(f.dot(g * f));
      b.col(i) = f;
      done.push_back(i);
    }
  }
  return b;
}

}  // namespace

FoliatedModel validate_model(const ModelSpec & spec, const ValidationOptions & options)
{
  check_index_sets(spec);
  const int d = spec.dim;
  const double tol = options.tol;

  FoliatedModel m;
  m.spec_ = spec;
  if (m.spec_.basis_labels.empty()) {
    for (int i = 0; i < d; ++i) { m.spec_.basis_labels.push_back("e" + std::to_string(i + 1)); }
  }
  std::vector<bool> horizontal(d, false);
  for (int i : spec.horizontal_indices) { horizontal[i] = true; }

  bool identity = false;
  Mat g = base_metric(spec, identity);
  for (int a : spec.vertical_indices) {
    for (int b : spec.vertical_indices) { g(a, b) /= spec.epsilon; }
  }
  m.metric_ = g;

  // Raw table from the sparse list, then antisymmetric completion.
  auto at = [d](int i, int j, int k) { return (i * d + j) * d + k; };
  std::vector<double> raw(d * d * d, 0.0);
  for (const auto & sc : spec.structure_constants) { raw[at(sc.i, sc.j, sc.k)] += sc.c; }
  std::vector<double> table(d * d * d, 0.0);
  Certificates & cert = m.certs_;
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      if (std::abs(raw[at(i, i, k)]) > tol) {
        throw ValidationFailure("antisymmetric", {i + 1, i + 1, k + 1}, "[e_i, e_i] must vanish");
      }
    }
    for (int j = i + 1; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        const double cij = raw[at(i, j, k)];
        const double cji = raw[at(j, i, k)];
        if (cij != 0.0 && cji != 0.0 && std::abs(cij + cji) > tol) {
          throw ValidationFailure("antisymmetric", {i + 1, j + 1, k + 1}, "listed constants are not antisymmetric");
        }
        const double c = cij != 0.0 ? cij : -cji;
        table[at(i, j, k)] = c;
        table[at(j, i, k)] = -c;
      }
    }
  }
  cert.antisymmetric = true;
  m.table_ = table;

  double scale = 1.0;
  for (double c : table) { scale = std::max(scale, std::abs(c)); }
  const double jtol = tol * scale * scale;

  // Jacobi on basis triples: [[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j].
  auto br = [&](const Vec & x, const Vec & y) {
    Vec out = Vec::Zero(d);
    for (int i = 0; i < d; ++i) {
      if (x[i] == 0.0) { continue; }
      for (int j = 0; j < d; ++j) {
        if (y[j] == 0.0) { continue; }
        for (int k = 0; k < d; ++k) { out[k] += x[i] * y[j] * table[at(i, j, k)]; }
      }
    }
    return out;
  };
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      for (int k = j + 1; k < d; ++k) {
        const Vec ei = unit(d, i), ej = unit(d, j), ek = unit(d, k);
        const Vec r = br(br(ei, ej), ek) + br(br(ej, ek), ei) + br(br(ek, ei), ej);
        if (r.cwiseAbs().maxCoeff() > jtol) {
          throw ValidationFailure("jacobi", {i + 1, j + 1, k + 1}, "Jacobi identity fails");
        }
      }
    }
  }
  cert.jacobi = true;

  // Orthonormal frame and frame-coordinate constants.
  m.basis_ = gram_schmidt(g, spec.horizontal_indices, spec.vertical_indices);
  m.basis_inv_ = m.basis_.inverse();
  std::vector<double> frame_table(d * d * d, 0.0);
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      const Vec fab = m.basis_inv_ * br(m.basis_.col(a), m.basis_.col(b));
      for (int k = 0; k < d; ++k) {
        const double c = std::abs(fab[k]) < 1e-15 * scale ? 0.0 : fab[k];
        frame_table[at(a, b, k)] = c;
        frame_table[at(b, a, k)] = -c;
      }
    }
  }
  m.frame_ = FrameAlgebra(d, horizontal, frame_table);
  const FrameAlgebra & fr = m.frame_;
  const auto & hs = fr.horizontal_indices();
  const auto & vs = fr.vertical_indices();

  // [V, V] in V.
  for (std::size_t p = 0; p < vs.size(); ++p) {
    for (std::size_t q = p + 1; q < vs.size(); ++q) {
      for (int x : hs) {
        if (std::abs(fr.c(vs[p], vs[q], x)) > tol * scale) {
          throw ValidationFailure("vertical_subalgebra", {vs[p] + 1, vs[q] + 1, x + 1},
                                  "bracket of vertical fields has a horizontal component");
        }
      }
    }
  }
  cert.vertical_subalgebra = true;

  // (L_U g)(X, Y) = -<[U,X],Y> - <X,[U,Y]> on left-invariant fields.
  for (int u : vs) {
    for (std::size_t p = 0; p < hs.size(); ++p) {
      for (std::size_t q = p; q < hs.size(); ++q) {
        const double lie = -fr.c(u, hs[p], hs[q]) - fr.c(u, hs[q], hs[p]);
        if (std::abs(lie) > tol * scale) {
          throw ValidationFailure("bundle_like", {u + 1, hs[p] + 1, hs[q] + 1},
                                  "Lie derivative of the metric along a vertical field is nonzero on horizontal pairs");
        }
      }
    }
  }
  cert.bundle_like = true;

  // Span growth of iterated horizontal brackets.
  {
    Mat cols(d, 0);
    for (int x : hs) { cols = append_col(cols, unit(d, x)); }
    Mat span = span_basis(cols, d);
    int depth = 1;
    while (span.cols() < d) {
      Mat grown = span;
      for (int x : hs) {
        for (int c = 0; c < span.cols(); ++c) { grown = append_col(grown, fr.bracket(unit(d, x), span.col(c))); }
      }
      Mat next = span_basis(grown, d);
      if (next.cols() == span.cols()) { break; }
      span = next;
      ++depth;
    }
    if (span.cols() == d) {
      cert.bracket_generating = true;
      m.depth_ = depth;
    } else {
      int missing = 0;
      for (int i = 0; i < d; ++i) {
        const Vec e = unit(d, i);
        if ((e - span * (span.transpose() * e)).norm() > 1e-9) {
          missing = i + 1;
          break;
        }
      }
      if (options.require_bracket_generating) {
        throw ValidationFailure("bracket_generating", {missing, 0, 0},
                                "iterated brackets of the horizontal fields do not span the algebra");
      }
    }
  }

  // sum_i <D_{Z_i} Z_i, X> = -sum_i <[Z_i, X], Z_i>.
  for (int x : hs) {
    double s = 0.0;
    int worst = vs.empty() ? -1 : vs.front();
    for (int z : vs) {
      s -= fr.c(z, x, z);
      if (std::abs(fr.c(z, x, z)) > std::abs(fr.c(worst, x, worst))) { worst = z; }
    }
    if (std::abs(s) > tol * scale * std::max<std::size_t>(1, vs.size())) {
      throw ValidationFailure("minimal_leaves", {x + 1, worst + 1, worst + 1}, "leaves are not minimal");
    }
  }
  cert.minimal_leaves = true;

  // C = 0: <C_X U, W> = -1/2 (<[X,U],W> + <U,[X,W]>) for X horizontal, U, W vertical.
  cert.totally_geodesic = true;
  for (int x : hs) {
    for (int u : vs) {
      for (int w : vs) {
        if (std::abs(fr.c(x, u, w) + fr.c(x, w, u)) > tol * scale) { cert.totally_geodesic = false; }
      }
    }
  }

  // Lower central series.
  {
    Mat cur = Mat::Identity(d, d);
    int cls = 0;
    for (int it = 0; it <= d; ++it) {
      if (cur.cols() == 0) {
        m.nil_class_ = cls;
        break;
      }
      Mat grown(d, 0);
      for (int i = 0; i < d; ++i) {
        for (int c = 0; c < cur.cols(); ++c) { grown = append_col(grown, fr.bracket(unit(d, i), cur.col(c))); }
      }
      Mat next = span_basis(grown, d);
      ++cls;
      if (next.cols() == cur.cols()) { break; }
      cur = next;
    }
  }

  // Carnot grading in model coordinates.
  if (spec.grading) {
    const auto & layers = *spec.grading;
    std::vector<int> seen(d, 0);
    for (const auto & layer : layers) {
      if (layer.empty()) { throw SpecError("grading has an empty layer"); }
      for (int i : layer) {
        if (i < 0 || i >= d) { throw SpecError("grading index out of range"); }
        ++seen[i];
      }
    }
    for (int i = 0; i < d; ++i) {
      if (seen[i] != 1) { throw SpecError("grading layers must partition the basis"); }
    }
    std::vector<int> first = layers.front();
    std::vector<int> hsorted = spec.horizontal_indices;
    std::sort(first.begin(), first.end());
    std::sort(hsorted.begin(), hsorted.end());
    if (first != hsorted) { throw SpecError("first grading layer must be the horizontal index set"); }
    for (std::size_t a = 0; a < layers.size(); ++a) {
      for (std::size_t b = a + 1; b < layers.size(); ++b) {
        for (int i : layers[a]) {
          for (int j : layers[b]) {
            if (std::abs(g(i, j)) > 1e-12) { throw SpecError("grading layers are not metric-orthogonal"); }
          }
        }
      }
    }
    bool carnot = true;
    const std::size_t s = layers.size();
    for (std::size_t j = 0; j < s && carnot; ++j) {
      // [V_1, V_j] must equal V_{j+1} (or vanish for the last layer).
      std::vector<bool> target(d, false);
      if (j + 1 < s) {
        for (int i : layers[j + 1]) { target[i] = true; }
      }
      Mat cols(d, 0);
      for (int a : layers[0]) {
        for (int b : layers[j]) {
          const Vec v = br(unit(d, a), unit(d, b));
          for (int k = 0; k < d; ++k) {
            if (!target[k] && std::abs(v[k]) > tol * scale) { carnot = false; }
          }
          cols = append_col(cols, v);
        }
      }
      const int want = j + 1 < s ? static_cast<int>(layers[j + 1].size()) : 0;
      if (rank_of(cols) != want) { carnot = false; }
    }
    cert.carnot = carnot;
    if (carnot) { m.step_ = static_cast<int>(s); }
  }
  return m;
}

Vec bracket(const FoliatedModel & m, const Vec & u, const Vec & v)
{
  const int d = m.dim();
  Vec out = Vec::Zero(d);
  for (int i = 0; i < d; ++i) {
    if (u[i] == 0.0) { continue; }
    for (int j = 0; j < d; ++j) {
      if (v[j] == 0.0 || i == j) { continue; }
      for (int k = 0; k < d; ++k) { out[k] += u[i] * v[j] * m.c(i, j, k); }
    }
  }
  return out;
}

Vec ad_star(const FoliatedModel & m, const Vec & x, const Vec & u)
{
  return m.from_frame(m.frame().ad_star(m.to_frame(x), m.to_frame(u)));
}

FoliatedModel canonical_variation(const FoliatedModel & m, double eps)
{
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw NonPositiveEpsilon("canonical variation needs eps > 0, got " + std::to_string(eps));
  }
  ModelSpec spec = m.spec();
  spec.epsilon *= eps;
  ValidationOptions opt;
  opt.require_bracket_generating = m.certificates().bracket_generating;
  return validate_model(spec, opt);
}

std::pair<Vec, Vec> split(const FoliatedModel & m, const Vec & u)
{
  Vec h = Vec::Zero(m.dim());
  for (int i : m.spec().horizontal_indices) { h[i] = u[i]; }
  return {h, u - h};
}

}  // namespace folcomp

#pragma once

// Truncated Fock-space foundation: finite sections of ladder operators,
// multi-mode Kronecker lifts, trust-region bookkeeping and the Hermitian
// matrix functions (square root, exponential) used throughout the library.
//
// Multi-mode index convention: row-major Kronecker ordering with mode 0 the
// slowest index, i.e. linear = ((n_0 * D + n_1) * D + n_2) ...

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pbosons/error.hpp"

namespace pbosons {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

inline constexpr double machine_epsilon = std::numeric_limits<double>::epsilon();

/// Multiplier in the residual policy tau = kappa * dim * eps * (operand norms).
inline constexpr double tolerance_kappa = 100.0;

inline double scaled_tolerance(Index dim, double norm_product = 1.0) {
  return tolerance_kappa * static_cast<double>(dim) * machine_epsilon * std::max(norm_product, 1.0);
}

inline int default_trust(int dim) { return (dim + 1) / 2; }

inline int int_pow(int base, int exp) {
  int r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

/// Mode layout of a (possibly multi-mode) truncated space.
struct Shape {
  int modes = 1;
  int mode_dim = 2;

  int dim() const { return int_pow(mode_dim, modes); }
  bool operator==(const Shape&) const = default;
};

// ---------------------------------------------------------------------------
// Multi-index <-> linear index

inline Index linear_index(std::span<const int> n, int mode_dim) {
  Index idx = 0;
  for (int nj : n) {
    if (nj < 0 || nj >= mode_dim) throw Error(ErrorKind::shape, "multi-index component out of range");
    idx = idx * mode_dim + nj;
  }
  return idx;
}

inline std::vector<int> multi_index(Index linear, int modes, int mode_dim) {
  if (linear < 0 || linear >= int_pow(mode_dim, modes)) throw Error(ErrorKind::shape, "linear index out of range");
  std::vector<int> n(static_cast<std::size_t>(modes));
  for (int j = modes - 1; j >= 0; --j) {
    n[static_cast<std::size_t>(j)] = static_cast<int>(linear % mode_dim);
    linear /= mode_dim;
  }
  return n;
}

/// Linear indices whose every mode occupation is below `cut`, ascending.
inline IndexList box_indices(const Shape& shape, int cut) {
  cut = std::clamp(cut, 0, shape.mode_dim);
  IndexList out;
  const Index dim = shape.dim();
  for (Index i = 0; i < dim; ++i) {
    auto n = multi_index(i, shape.modes, shape.mode_dim);
    if (std::all_of(n.begin(), n.end(), [cut](int nj) { return nj < cut; })) out.push_back(i);
  }
  return out;
}

inline Matrix select(const Matrix& m, const IndexList& rows, const IndexList& cols) { return m(rows, cols); }
inline Matrix select(const Matrix& m, const IndexList& idx) { return m(idx, idx); }
inline Vector select(const Vector& v, const IndexList& idx) { return v(idx); }

/// Spectral norm (largest singular value).
inline double norm2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// TruncatedOperator

/// Finite section of an operator on the truncated Fock space, together with
/// the per-mode trust index below which truncation artifacts are negligible.
class TruncatedOperator {
 public:
  TruncatedOperator(Matrix entries, int trust) : TruncatedOperator(std::move(entries), Shape{1, 0}, trust) {}

  TruncatedOperator(Matrix entries, Shape shape, int trust) : entries_(std::move(entries)), shape_(shape), trust_(trust) {
    if (entries_.rows() != entries_.cols()) throw Error(ErrorKind::shape, "operator matrix must be square");
    if (shape_.mode_dim == 0) shape_.mode_dim = static_cast<int>(entries_.rows());
    if (shape_.mode_dim < 2 || shape_.modes < 1)
      throw Error(ErrorKind::invalid_dimension, "per-mode dimension must be at least 2");
    if (shape_.dim() != entries_.rows()) throw Error(ErrorKind::shape, "matrix size does not match mode layout");
    if (trust_ < 1 || trust_ > shape_.mode_dim)
      throw Error(ErrorKind::invalid_dimension, "trust must lie in [1, mode_dim], got " + std::to_string(trust_));
  }

  const Matrix& entries() const { return entries_; }
  const Shape& shape() const { return shape_; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  int mode_dim() const { return shape_.mode_dim; }
  int modes() const { return shape_.modes; }
  int trust() const { return trust_; }

  TruncatedOperator with_trust(int trust) const { return {entries_, shape_, trust}; }

  TruncatedOperator adjoint() const { return {entries_.adjoint(), shape_, trust_}; }

  /// Trust-region block (all modes below `trust`, or this operator's own trust).
  Matrix restricted(int trust) const { return select(entries_, box_indices(shape_, trust)); }
  Matrix restricted() const { return restricted(trust_); }

  static TruncatedOperator identity(Shape shape, int trust) {
    return {Matrix::Identity(shape.dim(), shape.dim()), shape, trust};
  }

  friend TruncatedOperator operator+(const TruncatedOperator& x, const TruncatedOperator& y) {
    check_same(x, y);
    return {x.entries_ + y.entries_, x.shape_, std::min(x.trust_, y.trust_)};
  }
  friend TruncatedOperator operator-(const TruncatedOperator& x, const TruncatedOperator& y) {
    check_same(x, y);
    return {x.entries_ - y.entries_, x.shape_, std::min(x.trust_, y.trust_)};
  }
  friend TruncatedOperator operator*(const TruncatedOperator& x, const TruncatedOperator& y) {
    check_same(x, y);
    return {x.entries_ * y.entries_, x.shape_, std::min(x.trust_, y.trust_)};
  }
  friend TruncatedOperator operator*(cplx s, const TruncatedOperator& x) { return {s * x.entries_, x.shape_, x.trust_}; }
  friend TruncatedOperator operator*(double s, const TruncatedOperator& x) { return cplx(s) * x; }
  friend Vector operator*(const TruncatedOperator& x, const Vector& v) {
    if (v.size() != x.dim()) throw Error(ErrorKind::shape, "vector length does not match operator dimension");
    return x.entries_ * v;
  }

 private:
  static void check_same(const TruncatedOperator& x, const TruncatedOperator& y) {
    if (!(x.shape_ == y.shape_)) throw Error(ErrorKind::shape, "operand mode layouts differ");
  }

  Matrix entries_;
  Shape shape_;
  int trust_;
};

inline TruncatedOperator commutator(const TruncatedOperator& x, const TruncatedOperator& y) { return x * y - y * x; }

// ---------------------------------------------------------------------------
// Ladder operators and multi-mode lifts

struct Ladder {
  TruncatedOperator c;
  TruncatedOperator c_dag;
};

/// Standard bosonic lowering/raising finite sections: c[n-1, n] = sqrt(n).
inline Ladder build_ladder(int dim) {
  if (dim < 2) throw Error(ErrorKind::invalid_dimension, "ladder dimension must be >= 2, got " + std::to_string(dim));
  Matrix c = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) c(n - 1, n) = std::sqrt(static_cast<double>(n));
  TruncatedOperator low(c, dim - 1);
  return {low, low.adjoint()};
}

/// I (x) ... (x) op (x) ... (x) I with `op` at `mode_index` (mode 0 slowest).
inline TruncatedOperator tensor_lift(const TruncatedOperator& op, int mode_index, int modes, int per_mode_dim) {
  if (op.modes() != 1 || op.dim() != per_mode_dim)
    throw Error(ErrorKind::shape, "lifted operator must be single-mode with dimension per_mode_dim");
  if (modes < 1 || mode_index < 0 || mode_index >= modes) throw Error(ErrorKind::shape, "mode index out of range");
  const Index left = int_pow(per_mode_dim, mode_index);
  const Index right = int_pow(per_mode_dim, modes - mode_index - 1);
  const Index dim = left * per_mode_dim * right;
  Matrix out = Matrix::Zero(dim, dim);
  const Matrix& m = op.entries();
  for (Index l = 0; l < left; ++l)
    for (Index i = 0; i < per_mode_dim; ++i)
      for (Index j = 0; j < per_mode_dim; ++j) {
        if (m(i, j) == cplx(0.0)) continue;
        for (Index r = 0; r < right; ++r) {
          out((l * per_mode_dim + i) * right + r, (l * per_mode_dim + j) * right + r) = m(i, j);
        }
      }
  return {std::move(out), Shape{modes, per_mode_dim}, op.trust()};
}

// ---------------------------------------------------------------------------
// Hermitian matrix functions

inline double hermiticity_defect(const Matrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

struct SqrtOptions {
  double tau_herm = -1.0;  ///< negative: kappa * dim * eps * |S|
  double eps_pd = -1.0;    ///< negative: dim * eps * |S|
};

struct SqrtPair {
  TruncatedOperator root;
  TruncatedOperator inverse_root;
  double min_eigenvalue;
  double max_eigenvalue;
};

/// Positive square root and its inverse through the spectral decomposition.
/// Throws not-hermitian / not-positive (payload: smallest eigenvalue).
inline SqrtPair herm_sqrt_pair(const TruncatedOperator& s, SqrtOptions opts = {}) {
  const Matrix& m = s.entries();
  const double scale = m.cwiseAbs().maxCoeff();
  const double tau_herm = opts.tau_herm >= 0 ? opts.tau_herm : scaled_tolerance(s.dim(), scale);
  const double herm = hermiticity_defect(m);
  if (herm > tau_herm) throw Error(ErrorKind::not_hermitian, "hermiticity defect " + format_number(herm), herm);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(0.5 * (m + m.adjoint())));
  const Eigen::VectorXd& w = eig.eigenvalues();
  const double eps_pd = opts.eps_pd >= 0 ? opts.eps_pd : s.dim() * machine_epsilon * std::abs(w(w.size() - 1));
  if (w(0) <= eps_pd)
    throw Error(ErrorKind::not_positive, "smallest eigenvalue " + format_number(w(0)) + " <= " + format_number(eps_pd),
                w(0));
  const Matrix& v = eig.eigenvectors();
  Eigen::VectorXd r = w.cwiseSqrt();
  Matrix root = v * r.asDiagonal() * v.adjoint();
  Matrix inv = v * r.cwiseInverse().asDiagonal() * v.adjoint();
  return {TruncatedOperator(std::move(root), s.shape(), s.trust()),
          TruncatedOperator(std::move(inv), s.shape(), s.trust()), w(0), w(w.size() - 1)};
}

inline TruncatedOperator herm_sqrt(const TruncatedOperator& s, SqrtOptions opts = {}) {
  return herm_sqrt_pair(s, opts).root;
}

/// exp(scale * H). Hermitian H with real scale and normal scale*H go through an
/// eigendecomposition; anything else falls back to scaling-and-squaring Pade.
inline TruncatedOperator herm_exp(const TruncatedOperator& h, cplx scale) {
  const Matrix& m = h.entries();
  const double norm = m.cwiseAbs().maxCoeff();
  const double tau = scaled_tolerance(h.dim(), norm);
  constexpr double log_max = 709.0;
  auto overflow = [&](double est) {
    throw Error(ErrorKind::overflow, "exponent norm estimate " + format_number(est) + " overflows double", est);
  };

  if (hermiticity_defect(m) <= tau && std::abs(scale.imag()) == 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(0.5 * (m + m.adjoint())));
    Eigen::VectorXd w = scale.real() * eig.eigenvalues();
    if (w.maxCoeff() > log_max) overflow(w.maxCoeff());
    const Matrix& v = eig.eigenvectors();
    return {v * w.array().exp().matrix().asDiagonal() * v.adjoint(), h.shape(), h.trust()};
  }

  Matrix x = scale * m;
  const double xnorm = x.cwiseAbs().rowwise().sum().maxCoeff();
  if ((x * x.adjoint() - x.adjoint() * x).cwiseAbs().maxCoeff() <= scaled_tolerance(h.dim(), xnorm * xnorm)) {
    Eigen::ComplexSchur<Matrix> schur(x);
    Vector d = schur.matrixT().diagonal();
    if (d.real().maxCoeff() > log_max) overflow(d.real().maxCoeff());
    const Matrix& u = schur.matrixU();
    return {u * d.array().exp().matrix().asDiagonal() * u.adjoint(), h.shape(), h.trust()};
  }

  if (xnorm > 4.0 * log_max) overflow(xnorm);
  Matrix e = x.exp();
  if (!e.allFinite()) overflow(xnorm);
  return {std::move(e), h.shape(), h.trust()};
}

}  // namespace pbosons

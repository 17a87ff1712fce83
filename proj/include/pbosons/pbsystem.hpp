#pragma once

// Pseudo-boson pairs [a_j, b_j] = 1 on a truncated space, their vacua, and the
// biorthogonal families phi_n = b^n phi_0 / sqrt(n!), Psi_n = (a^dag)^n Psi_0 / sqrt(n!).

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pbosons/fock.hpp"

namespace pbosons {

/// The pair (a, b), one lowering/raising operator per mode, all on one shared layout.
class PseudoBosonPair {
 public:
  PseudoBosonPair(std::vector<TruncatedOperator> a, std::vector<TruncatedOperator> b)
      : a_(std::move(a)), b_(std::move(b)) {
    if (a_.empty() || a_.size() != b_.size()) throw Error(ErrorKind::shape, "pair needs one (a, b) per mode");
    const Shape s = a_.front().shape();
    if (s.modes != static_cast<int>(a_.size())) throw Error(ErrorKind::shape, "number of modes does not match layout");
    for (std::size_t j = 0; j < a_.size(); ++j)
      if (!(a_[j].shape() == s) || !(b_[j].shape() == s)) throw Error(ErrorKind::shape, "pair operators differ in layout");
  }

  PseudoBosonPair(TruncatedOperator a, TruncatedOperator b)
      : PseudoBosonPair(std::vector<TruncatedOperator>{std::move(a)}, std::vector<TruncatedOperator>{std::move(b)}) {}

  int modes() const { return static_cast<int>(a_.size()); }
  const Shape& shape() const { return a_.front().shape(); }
  int dim() const { return a_.front().dim(); }
  int mode_dim() const { return shape().mode_dim; }

  const TruncatedOperator& a(int j = 0) const { return a_.at(static_cast<std::size_t>(j)); }
  const TruncatedOperator& b(int j = 0) const { return b_.at(static_cast<std::size_t>(j)); }
  const std::vector<TruncatedOperator>& lowering() const { return a_; }
  const std::vector<TruncatedOperator>& raising() const { return b_; }

  /// N_j = b_j a_j
  TruncatedOperator number(int j = 0) const { return b(j) * a(j); }
  /// N_j^dag = a_j^dag b_j^dag
  TruncatedOperator number_dual(int j = 0) const { return number(j).adjoint(); }

 private:
  std::vector<TruncatedOperator> a_;
  std::vector<TruncatedOperator> b_;
};

/// Lifts a single-mode pair to `modes` identical, mutually commuting modes.
inline PseudoBosonPair lift_pair(const PseudoBosonPair& single, int modes) {
  if (single.modes() != 1) throw Error(ErrorKind::shape, "lift_pair expects a single-mode pair");
  if (modes == 1) return single;
  std::vector<TruncatedOperator> a, b;
  for (int j = 0; j < modes; ++j) {
    a.push_back(tensor_lift(single.a(), j, modes, single.dim()));
    b.push_back(tensor_lift(single.b(), j, modes, single.dim()));
  }
  return {std::move(a), std::move(b)};
}

struct CommutationDefects {
  double canonical = 0.0;  ///< max_j |[a_j, b_j] - 1| on trust
  double cross = 0.0;      ///< max over j != k of |[a_j,b_k]|, |[a_j,a_k]|, |[b_j,b_k]| on trust
};

inline CommutationDefects commutation_defects(const PseudoBosonPair& pair, int trust) {
  const IndexList rows = box_indices(pair.shape(), trust);
  const Matrix id = Matrix::Identity(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
  CommutationDefects out;
  for (int j = 0; j < pair.modes(); ++j) {
    out.canonical = std::max(out.canonical, norm2(select(commutator(pair.a(j), pair.b(j)).entries(), rows) - id));
    for (int k = 0; k < pair.modes(); ++k) {
      if (k == j) continue;
      for (const auto* x : {&pair.a(k), &pair.b(k)}) {
        out.cross = std::max(out.cross, norm2(select(commutator(pair.a(j), *x).entries(), rows)));
        out.cross = std::max(out.cross, norm2(select(commutator(pair.b(j), *x).entries(), rows)));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vacuum

struct VacuumOptions {
  double kernel_rel_tol = 1e-8;    ///< singular values below this times the largest count as zero
  double interior_fraction = 0.75; ///< kernel vectors must live mostly below this fraction of the cutoff
};

struct VacuumResult {
  Vector vector;
  Eigen::VectorXd singular_values;  ///< of the stacked trust-restricted operator
  int kernel_dimension = 0;         ///< numerical null-space dimension before the edge filter
  double edge_weight = 0.0;         ///< squared weight of the vacuum outside the interior block
  double kernel_residual = 0.0;     ///< max_j |op_j v| on the trust rows
};

namespace detail {

inline std::string list_values(const Eigen::VectorXd& s, int count) {
  std::ostringstream os;
  os << "[";
  const Index start = std::max<Index>(0, s.size() - count);
  for (Index i = start; i < s.size(); ++i) os << (i > start ? ", " : "") << s(i);
  os << "]";
  return os.str();
}

inline void fix_phase(Vector& v) {
  const double cut = 1e-10 * v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > cut) {
      v *= std::abs(v(i)) / v(i);
      v(i) = std::abs(v(i));
      return;
    }
  }
}

}  // namespace detail

/// Common kernel of the operators on the trust region. Rows are the trust
/// block; columns extend one index further so that truncation rows never
/// force the kernel to vanish. Null vectors concentrated at the cutoff edge
/// are truncation artifacts and are discarded.
inline VacuumResult vacuum_solve(std::span<const TruncatedOperator> ops, VacuumOptions opts = {}) {
  if (ops.empty()) throw Error(ErrorKind::shape, "vacuum_solve needs at least one operator");
  const Shape shape = ops.front().shape();
  int trust = shape.mode_dim;
  for (const auto& op : ops) {
    if (!(op.shape() == shape)) throw Error(ErrorKind::shape, "operators differ in layout");
    trust = std::min(trust, op.trust());
  }
  const IndexList rows = box_indices(shape, trust);
  const IndexList cols = box_indices(shape, trust + 1);
  const Index nr = static_cast<Index>(rows.size());
  const Index nc = static_cast<Index>(cols.size());

  Matrix stacked(nr * static_cast<Index>(ops.size()), nc);
  for (std::size_t j = 0; j < ops.size(); ++j)
    stacked.middleRows(static_cast<Index>(j) * nr, nr) = select(ops[j].entries(), rows, cols);

  Eigen::BDCSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > opts.kernel_rel_tol * smax) ++rank;
  const Index nullity = nc - rank;

  VacuumResult out;
  out.singular_values = s;
  out.kernel_dimension = static_cast<int>(nullity);
  if (nullity == 0)
    throw Error(ErrorKind::no_vacuum, "trivial kernel; smallest singular values " + detail::list_values(s, 3));

  const Matrix null = svd.matrixV().rightCols(nullity);
  const int cut = static_cast<int>(std::ceil(opts.interior_fraction * (trust + 1)));
  IndexList interior_pos;
  for (Index p = 0; p < nc; ++p) {
    auto n = multi_index(cols[static_cast<std::size_t>(p)], shape.modes, shape.mode_dim);
    if (std::all_of(n.begin(), n.end(), [cut](int nj) { return nj < cut; })) interior_pos.push_back(p);
  }
  Matrix interior = null(interior_pos, Eigen::all);
  Eigen::JacobiSVD<Matrix> isvd(interior, Eigen::ComputeFullV);
  const Eigen::VectorXd& sig = isvd.singularValues();
  int genuine = 0;
  for (Index i = 0; i < sig.size(); ++i)
    if (sig(i) * sig(i) > 0.5) ++genuine;
  if (genuine == 0)
    throw Error(ErrorKind::no_vacuum, "kernel vectors live only at the truncation edge; smallest singular values " +
                                          detail::list_values(s, 3));
  if (genuine > 1)
    throw Error(ErrorKind::degenerate_vacuum,
                std::to_string(genuine) + "-dimensional kernel; smallest singular values " +
                    detail::list_values(s, genuine + 1),
                genuine);

  Vector local = null * isvd.matrixV().col(0);
  Vector v = Vector::Zero(shape.dim());
  v(cols) = local;
  v.normalize();
  detail::fix_phase(v);
  out.vector = v;
  out.edge_weight = std::max(0.0, 1.0 - sig(0) * sig(0));
  for (const auto& op : ops) out.kernel_residual = std::max(out.kernel_residual, select(Vector(op * v), rows).norm());
  return out;
}

inline VacuumResult vacuum_solve(const TruncatedOperator& op, VacuumOptions opts = {}) {
  return vacuum_solve(std::span<const TruncatedOperator>(&op, 1), opts);
}

// ---------------------------------------------------------------------------
// Ladder generation

/// Multi-indices with every component <= n_max, in linear (mode 0 slowest) order.
inline std::vector<std::vector<int>> index_box(int modes, int n_max) {
  std::vector<std::vector<int>> out;
  const int side = n_max + 1;
  const int count = int_pow(side, modes);
  for (int i = 0; i < count; ++i) out.push_back(multi_index(i, modes, side));
  return out;
}

/// v_n = prod_j raiser_j^{n_j} vacuum / sqrt(n_j!), raisers applied in mode order.
inline std::vector<Vector> ladder_generate(std::span<const TruncatedOperator> raisers, const Vector& vacuum, int n_max) {
  for (const auto& r : raisers)
    if (n_max >= r.trust())
      throw Error(ErrorKind::truncation_overrun,
                  "n_max " + std::to_string(n_max) + " >= raiser trust " + std::to_string(r.trust()));
  if (n_max < 0) throw Error(ErrorKind::truncation_overrun, "n_max must be non-negative");
  const int modes = static_cast<int>(raisers.size());
  std::vector<Vector> out;
  if (modes == 1) {
    out.push_back(vacuum);
    for (int n = 1; n <= n_max; ++n) out.push_back(raisers[0] * out.back() / std::sqrt(static_cast<double>(n)));
    return out;
  }
  for (const auto& n : index_box(modes, n_max)) {
    Vector v = vacuum;
    for (int j = 0; j < modes; ++j)
      for (int k = 1; k <= n[static_cast<std::size_t>(j)]; ++k)
        v = raisers[static_cast<std::size_t>(j)] * v / std::sqrt(static_cast<double>(k));
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<Vector> ladder_generate(const TruncatedOperator& raiser, const Vector& vacuum, int n_max) {
  return ladder_generate(std::span<const TruncatedOperator>(&raiser, 1), vacuum, n_max);
}

// ---------------------------------------------------------------------------
// Biorthogonal system

/// Columns of `phi` and `psi` are phi_n and Psi_n for the multi-indices in `labels`.
struct BiorthogonalSystem {
  Matrix phi;
  Matrix psi;
  std::vector<std::vector<int>> labels;
  int n_max = 0;
  Shape shape;
  std::vector<double> phi_norms;
  std::vector<double> psi_norms;
  std::vector<double> norm_profile;  ///< |phi_n| * |Psi_n|
  VacuumResult phi_vacuum;
  VacuumResult psi_vacuum;

  int count() const { return static_cast<int>(labels.size()); }
  int dim() const { return static_cast<int>(phi.rows()); }
  int modes() const { return shape.modes; }

  /// Column holding multi-index n, or -1 when it was not generated.
  int column(std::span<const int> n) const {
    for (int j : n)
      if (j < 0 || j > n_max) return -1;
    Index idx = 0;
    for (int j : n) idx = idx * (n_max + 1) + j;
    return static_cast<int>(idx);
  }

  /// Same system truncated to indices with every n_j <= n_keep.
  BiorthogonalSystem truncated(int n_keep) const {
    if (n_keep > n_max || n_keep < 0) throw Error(ErrorKind::truncation_overrun, "cannot extend a built system");
    BiorthogonalSystem out = *this;
    IndexList keep;
    out.labels.clear();
    out.phi_norms.clear();
    out.psi_norms.clear();
    out.norm_profile.clear();
    for (int k = 0; k < count(); ++k) {
      const auto& n = labels[static_cast<std::size_t>(k)];
      if (std::all_of(n.begin(), n.end(), [n_keep](int j) { return j <= n_keep; })) {
        keep.push_back(k);
        out.labels.push_back(n);
        out.phi_norms.push_back(phi_norms[static_cast<std::size_t>(k)]);
        out.psi_norms.push_back(psi_norms[static_cast<std::size_t>(k)]);
        out.norm_profile.push_back(norm_profile[static_cast<std::size_t>(k)]);
      }
    }
    out.phi = phi(Eigen::all, keep);
    out.psi = psi(Eigen::all, keep);
    out.n_max = n_keep;
    return out;
  }
};

struct SystemOptions {
  VacuumOptions vacuum;
  double normalization_tol = 1e-12;  ///< relative: |<Psi0, phi0>| below this is treated as zero
};

/// phi_0 from the common kernel of the a_j, Psi_0 from that of the b_j^dag;
/// Psi_0 is rescaled so <Psi_0, phi_0> = 1 with |phi_0| = 1.
inline BiorthogonalSystem build_system(const PseudoBosonPair& pair, int n_max, SystemOptions opts = {}) {
  std::vector<TruncatedOperator> b_dag;
  std::vector<TruncatedOperator> a_dag;
  for (int j = 0; j < pair.modes(); ++j) {
    b_dag.push_back(pair.b(j).adjoint());
    a_dag.push_back(pair.a(j).adjoint());
  }
  BiorthogonalSystem sys;
  sys.shape = pair.shape();
  sys.n_max = n_max;
  sys.phi_vacuum = vacuum_solve(pair.lowering(), opts.vacuum);
  sys.psi_vacuum = vacuum_solve(b_dag, opts.vacuum);

  const Vector& phi0 = sys.phi_vacuum.vector;
  Vector psi0 = sys.psi_vacuum.vector;
  const cplx overlap = psi0.dot(phi0);
  if (std::abs(overlap) < opts.normalization_tol)
    throw Error(ErrorKind::normalization_impossible, "<Psi0, phi0> vanishes", std::abs(overlap));
  psi0 /= std::conj(overlap);

  auto phis = ladder_generate(pair.raising(), phi0, n_max);
  auto psis = ladder_generate(a_dag, psi0, n_max);
  const Index count = static_cast<Index>(phis.size());
  sys.phi.resize(pair.dim(), count);
  sys.psi.resize(pair.dim(), count);
  for (Index k = 0; k < count; ++k) {
    sys.phi.col(k) = phis[static_cast<std::size_t>(k)];
    sys.psi.col(k) = psis[static_cast<std::size_t>(k)];
    sys.phi_norms.push_back(sys.phi.col(k).norm());
    sys.psi_norms.push_back(sys.psi.col(k).norm());
    sys.norm_profile.push_back(sys.phi_norms.back() * sys.psi_norms.back());
  }
  sys.labels = index_box(pair.modes(), n_max);
  return sys;
}

/// <Psi_n, phi_m> for all generated indices.
inline Matrix gram(const BiorthogonalSystem& sys) { return sys.psi.adjoint() * sys.phi; }

inline double gram_deviation(const BiorthogonalSystem& sys) {
  Matrix g = gram(sys);
  g -= Matrix::Identity(g.rows(), g.cols());
  return g.cwiseAbs().maxCoeff();
}

struct EigenResiduals {
  std::vector<double> phi;  ///< per column: max_j |(N_j - n_j) phi_n| / |phi_n|
  std::vector<double> psi;  ///< per column: max_j |(N_j^dag - n_j) Psi_n| / |Psi_n|
  double max_phi = 0.0;
  double max_psi = 0.0;
  double max() const { return std::max(max_phi, max_psi); }
};

/// Number-operator eigen-equations, residuals measured on the trust rows.
inline EigenResiduals eigen_check(const BiorthogonalSystem& sys, const PseudoBosonPair& pair, int trust) {
  const IndexList rows = box_indices(sys.shape, trust);
  EigenResiduals out;
  out.phi.assign(static_cast<std::size_t>(sys.count()), 0.0);
  out.psi.assign(static_cast<std::size_t>(sys.count()), 0.0);
  for (int j = 0; j < pair.modes(); ++j) {
    const Matrix n_op = pair.number(j).entries();
    const Matrix n_dual = n_op.adjoint();
    for (int k = 0; k < sys.count(); ++k) {
      const double nj = sys.labels[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
      Vector rp = n_op * sys.phi.col(k) - nj * sys.phi.col(k);
      Vector rs = n_dual * sys.psi.col(k) - nj * sys.psi.col(k);
      auto& p = out.phi[static_cast<std::size_t>(k)];
      auto& s = out.psi[static_cast<std::size_t>(k)];
      p = std::max(p, select(rp, rows).norm() / sys.phi_norms[static_cast<std::size_t>(k)]);
      s = std::max(s, select(rs, rows).norm() / sys.psi_norms[static_cast<std::size_t>(k)]);
    }
  }
  for (std::size_t k = 0; k < out.phi.size(); ++k) {
    out.max_phi = std::max(out.max_phi, out.phi[k]);
    out.max_psi = std::max(out.max_psi, out.psi[k]);
  }
  return out;
}

/// max relative residual of a_j phi_n = sqrt(n_j) phi_{n-e_j} and b_j phi_n = sqrt(n_j+1) phi_{n+e_j}.
inline double ladder_consistency(const BiorthogonalSystem& sys, const PseudoBosonPair& pair, int trust) {
  const IndexList rows = box_indices(sys.shape, trust);
  double worst = 0.0;
  for (int k = 0; k < sys.count(); ++k) {
    const auto& n = sys.labels[static_cast<std::size_t>(k)];
    const double norm = sys.phi_norms[static_cast<std::size_t>(k)];
    for (int j = 0; j < pair.modes(); ++j) {
      auto m = n;
      Vector down = pair.a(j) * Vector(sys.phi.col(k));
      if (n[static_cast<std::size_t>(j)] > 0) {
        --m[static_cast<std::size_t>(j)];
        down -= std::sqrt(static_cast<double>(n[static_cast<std::size_t>(j)])) * sys.phi.col(sys.column(m));
      }
      worst = std::max(worst, select(down, rows).norm() / norm);
      m = n;
      ++m[static_cast<std::size_t>(j)];
      const int up_col = sys.column(m);
      if (up_col >= 0) {
        Vector up = pair.b(j) * Vector(sys.phi.col(k)) -
                    std::sqrt(static_cast<double>(n[static_cast<std::size_t>(j)] + 1)) * sys.phi.col(up_col);
        worst = std::max(worst, select(up, rows).norm() / norm);
      }
    }
  }
  return worst;
}

/// |1 - sum_n |phi_n><Psi_n|| on the trust block: finite-section proxy for completeness.
inline double basis_completeness(const BiorthogonalSystem& sys, int trust) {
  if (sys.n_max + 1 < trust)
    throw Error(ErrorKind::under_spanned, "n_max + 1 = " + std::to_string(sys.n_max + 1) + " < trust " +
                                              std::to_string(trust));
  const IndexList rows = box_indices(sys.shape, trust);
  Matrix resolved = select(Matrix(sys.phi * sys.psi.adjoint()), rows);
  return norm2(Matrix::Identity(resolved.rows(), resolved.cols()) - resolved);
}

}  // namespace pbosons

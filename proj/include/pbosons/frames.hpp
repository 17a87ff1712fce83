#pragma once

// Frame (metric) operators of a biorthogonal system, Riesz bounds, the
// intertwining relations, and the similarity maps between pseudo-bosons and
// ordinary bosons: a = T c T^-1, b = T c^dag T^-1 with T = S_phi^{1/2}.
//
// At finite truncation boundedness cannot be observed directly. It is read off
// from how the trust-block condition number of S_phi behaves across a sweep
// of truncation sizes.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbosons/pbsystem.hpp"

namespace pbosons {

/// sum_n |v_n><v_n| over the columns of `family`.
inline TruncatedOperator frame_operator(const Matrix& family, Shape shape, int trust) {
  if (family.cols() == 0) throw Error(ErrorKind::shape, "frame operator of an empty family");
  if (family.rows() != shape.dim()) throw Error(ErrorKind::shape, "family vectors do not match the layout dimension");
  return {family * family.adjoint(), shape, trust};
}

inline TruncatedOperator frame_operator(std::span<const Vector> family, int trust) {
  if (family.empty()) throw Error(ErrorKind::shape, "frame operator of an empty family");
  const Index dim = family.front().size();
  Matrix m(dim, static_cast<Index>(family.size()));
  for (std::size_t k = 0; k < family.size(); ++k) {
    if (family[k].size() != dim) throw Error(ErrorKind::shape, "family vectors differ in length");
    m.col(static_cast<Index>(k)) = family[k];
  }
  return frame_operator(m, Shape{1, static_cast<int>(dim)}, trust);
}

struct FramePair {
  TruncatedOperator s_phi;
  TruncatedOperator s_psi;
};

inline FramePair frame_operators(const BiorthogonalSystem& sys, int trust) {
  return {frame_operator(sys.phi, sys.shape, trust), frame_operator(sys.psi, sys.shape, trust)};
}

/// Largest n_max whose ladder vectors are unaffected by the cutoff on the trust rows.
inline int clean_n_max(int mode_dim, int trust) { return std::max(0, mode_dim - 1 - trust); }

struct FrameConvergence {
  int n_half = 0;
  int n_full = 0;
  double change_phi = 0.0;  ///< relative trust-block change from n_half to n_full
  double change_psi = 0.0;
  double max() const { return std::max(change_phi, change_psi); }
};

/// Compares the partial sums at n_max/2 and n_max on the trust block.
inline FrameConvergence frame_convergence(const BiorthogonalSystem& sys, int trust) {
  FrameConvergence out;
  out.n_full = sys.n_max;
  out.n_half = sys.n_max / 2;
  auto full = frame_operators(sys, trust);
  auto half = frame_operators(sys.truncated(out.n_half), trust);
  auto rel = [trust](const TruncatedOperator& x, const TruncatedOperator& y) {
    Matrix bx = x.restricted(trust);
    return norm2(bx - y.restricted(trust)) / std::max(norm2(bx), 1e-300);
  };
  out.change_phi = rel(full.s_phi, half.s_phi);
  out.change_psi = rel(full.s_psi, half.s_psi);
  return out;
}

struct MutualMapping {
  double phi = 0.0;  ///< max_n |S_phi Psi_n - phi_n| / |phi_n| on the trust rows
  double psi = 0.0;  ///< max_n |S_psi phi_n - Psi_n| / |Psi_n| on the trust rows
  double max() const { return std::max(phi, psi); }
};

/// S_phi Psi_n = phi_n and S_psi phi_n = Psi_n for every index with all n_j <= n_check.
inline MutualMapping mutual_mapping_check(const TruncatedOperator& s_phi, const TruncatedOperator& s_psi,
                                          const BiorthogonalSystem& sys, int trust, int n_check) {
  const IndexList rows = box_indices(sys.shape, trust);
  MutualMapping out;
  for (int k = 0; k < sys.count(); ++k) {
    const auto& n = sys.labels[static_cast<std::size_t>(k)];
    if (std::any_of(n.begin(), n.end(), [n_check](int j) { return j > n_check; })) continue;
    Vector rp = s_phi.entries() * sys.psi.col(k) - sys.phi.col(k);
    Vector rs = s_psi.entries() * sys.phi.col(k) - sys.psi.col(k);
    out.phi = std::max(out.phi, select(rp, rows).norm() / sys.phi_norms[static_cast<std::size_t>(k)]);
    out.psi = std::max(out.psi, select(rs, rows).norm() / sys.psi_norms[static_cast<std::size_t>(k)]);
  }
  return out;
}

struct RieszBounds {
  double lower = 0.0;  ///< A: smallest eigenvalue on the trust block
  double upper = 0.0;  ///< B: largest eigenvalue on the trust block
  double condition = 0.0;
};

inline RieszBounds riesz_bounds(const TruncatedOperator& s, int trust) {
  Matrix block = s.restricted(trust);
  block = 0.5 * (block + block.adjoint());
  Eigen::VectorXd w = Eigen::SelfAdjointEigenSolver<Matrix>(block, Eigen::EigenvaluesOnly).eigenvalues();
  const double lo = w(0), hi = w(w.size() - 1);
  if (lo <= static_cast<double>(block.rows()) * machine_epsilon * std::abs(hi))
    throw Error(ErrorKind::not_positive, "frame operator not positive definite on trust block, smallest eigenvalue " +
                                             format_number(lo),
                lo);
  return {lo, hi, hi / lo};
}

enum class Regularity { rpb_consistent, pb_nonregular_consistent, inconclusive };

inline constexpr std::string_view to_string(Regularity r) {
  switch (r) {
    case Regularity::rpb_consistent: return "RPB-consistent";
    case Regularity::pb_nonregular_consistent: return "PB-nonregular-consistent";
    case Regularity::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct GrowthSample {
  int dim = 0;
  double condition = 0.0;
};

struct ClassifyOptions {
  double rho_flat = 1.5;
  double rho_grow = 4.0;
};

/// Plateau of the condition number across a geometric dim sweep reads as
/// bounded S_phi (regular); strict growth beyond rho_grow reads as unbounded.
inline Regularity classify_regularity(std::span<const GrowthSample> growth, ClassifyOptions opts = {}) {
  if (growth.size() < 3)
    throw Error(ErrorKind::insufficient_data, "need at least 3 truncation sizes, got " + std::to_string(growth.size()),
                static_cast<double>(growth.size()));
  const double ratio = static_cast<double>(growth[1].dim) / growth[0].dim;
  for (std::size_t i = 1; i < growth.size(); ++i) {
    const double r = static_cast<double>(growth[i].dim) / growth[i - 1].dim;
    if (growth[i].dim <= growth[i - 1].dim || std::abs(r - ratio) > 1e-12 * ratio)
      throw Error(ErrorKind::insufficient_data, "truncation sizes must form an increasing geometric progression");
  }
  const double spread = growth.back().condition / growth.front().condition;
  if (spread < opts.rho_flat) return Regularity::rpb_consistent;
  bool increasing = true;
  for (std::size_t i = 1; i < growth.size(); ++i) increasing = increasing && growth[i].condition > growth[i - 1].condition;
  if (increasing && spread > opts.rho_grow) return Regularity::pb_nonregular_consistent;
  return Regularity::inconclusive;
}

/// |S X - Y S| on the trust block. With (S_psi, N, N^dag) this is the
/// relation S_psi N = N^dag S_psi; with (S_phi, N^dag, N) it is N S_phi = S_phi N^dag.
inline double intertwine_residual(const TruncatedOperator& s, const TruncatedOperator& x, const TruncatedOperator& y,
                                  int trust) {
  return norm2(select(Matrix(s.entries() * x.entries() - y.entries() * s.entries()), box_indices(s.shape(), trust)));
}

struct FrameReport {
  TruncatedOperator s_phi;
  TruncatedOperator s_psi;
  RieszBounds bounds;
  double hermiticity = 0.0;       ///< max of the two trust-block hermiticity defects
  double inverse_defect = 0.0;    ///< |S_phi S_psi - 1| on the trust block
  FrameConvergence convergence;
  std::vector<GrowthSample> growth;
  Regularity classification = Regularity::inconclusive;
};

inline FrameReport frame_report(const BiorthogonalSystem& sys, int trust) {
  auto frames = frame_operators(sys, trust);
  FrameReport rep{frames.s_phi, frames.s_psi, riesz_bounds(frames.s_phi, trust), 0.0, 0.0, {}, {}, Regularity::inconclusive};
  rep.hermiticity = std::max(hermiticity_defect(frames.s_phi.restricted(trust)),
                             hermiticity_defect(frames.s_psi.restricted(trust)));
  Matrix prod = select(Matrix(frames.s_phi.entries() * frames.s_psi.entries()), box_indices(sys.shape, trust));
  rep.inverse_defect = norm2(prod - Matrix::Identity(prod.rows(), prod.cols()));
  rep.convergence = frame_convergence(sys, trust);
  return rep;
}

// ---------------------------------------------------------------------------
// Pseudo-bosons <-> bosons

struct SimilarityWitness {
  TruncatedOperator t;      ///< positive square root of S_phi on the block
  TruncatedOperator t_inv;
  TruncatedOperator c;      ///< standard ladder, restricted to the block
  TruncatedOperator c_dag;
  int block = 0;            ///< trust block on which T is computed
  int headline = 0;         ///< sub-block on which the headline residuals are measured
  double residual_a = 0.0;  ///< |a - T c T^-1| on the headline block
  double residual_b = 0.0;  ///< |b - T c^dag T^-1| on the headline block
  double residual_a_full = 0.0;
  double residual_b_full = 0.0;
  std::vector<double> edge_profile;  ///< max(residual_a, residual_b) on sub-blocks 1..block
  double orthonormality = 0.0;       ///< max |<phi^_n, phi^_m> - delta| for phi^_n = T^-1 phi_n
  double symmetrization = 0.0;       ///< |S - S^dag| removed before the square root
  double residual() const { return std::max(residual_a, residual_b); }
};

struct BosonizeOptions {
  int headline = -1;  ///< negative: half the block
};

/// T = S_phi^{1/2} on the trust block of S_phi, then the residuals of
/// a = T c T^-1, b = T c^dag T^-1 and the orthonormality of T^-1 phi_n.
inline SimilarityWitness bosonize(const PseudoBosonPair& pair, const BiorthogonalSystem& sys,
                                  const TruncatedOperator& s_phi, BosonizeOptions opts = {}) {
  const int block = s_phi.trust();
  const IndexList rows = box_indices(pair.shape(), block);
  const Shape block_shape{pair.modes(), block};
  Matrix s = select(s_phi.entries(), rows);
  const double sym = hermiticity_defect(s);
  s = 0.5 * (s + s.adjoint());
  auto roots = herm_sqrt_pair(TruncatedOperator(s, block_shape, block));
  const Matrix& t = roots.root.entries();
  const Matrix& ti = roots.inverse_root.entries();

  // the standard ladder cut to the first `block` levels of each mode
  const auto ladder = build_ladder(block);
  SimilarityWitness w{roots.root,
                      roots.inverse_root,
                      tensor_lift(ladder.c, 0, pair.modes(), block),
                      tensor_lift(ladder.c_dag, 0, pair.modes(), block),
                      block,
                      opts.headline > 0 ? std::min(opts.headline, block) : std::max(1, block / 2),
                      0.0, 0.0, 0.0, 0.0, {}, 0.0, 0.0};
  w.symmetrization = sym;

  std::vector<Matrix> res_a, res_b;
  for (int j = 0; j < pair.modes(); ++j) {
    const Matrix cj = tensor_lift(ladder.c, j, pair.modes(), block).entries();
    res_a.push_back(select(pair.a(j).entries(), rows) - t * cj * ti);
    res_b.push_back(select(pair.b(j).entries(), rows) - t * cj.adjoint() * ti);
  }
  auto worst_on = [&](const std::vector<Matrix>& res, int h) {
    IndexList sub = box_indices(block_shape, h);
    double r = 0.0;
    for (const auto& m : res) r = std::max(r, norm2(select(m, sub)));
    return r;
  };
  w.residual_a = worst_on(res_a, w.headline);
  w.residual_b = worst_on(res_b, w.headline);
  w.residual_a_full = worst_on(res_a, block);
  w.residual_b_full = worst_on(res_b, block);
  for (int h = 1; h <= block; ++h) w.edge_profile.push_back(std::max(worst_on(res_a, h), worst_on(res_b, h)));

  IndexList cols;
  for (int k = 0; k < sys.count(); ++k) {
    const auto& n = sys.labels[static_cast<std::size_t>(k)];
    if (std::all_of(n.begin(), n.end(), [block](int j) { return j < block; })) cols.push_back(k);
  }
  if (!cols.empty()) {
    Matrix hat = ti * sys.phi(rows, cols);
    Matrix g = hat.adjoint() * hat;
    w.orthonormality = (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  }
  return w;
}

struct DebosonizeOptions {
  double max_condition = 1.0 / (tolerance_kappa * machine_epsilon);  ///< ~4.5e13, where inversion loses all digits
  double commutator_tol = 1e-8;  ///< bound on |[a,b] - 1| over the trust block, scaled by cond(T)
};

/// a = T c T^-1, b = T c^dag T^-1 on the full truncated space, with the
/// inverse supplied by the caller (e.g. exp(-H) for T = exp(H), which is far
/// more accurate than inverting an ill-conditioned T). When T declares a trust
/// below its dimension the returned pair is the section on that trust block.
inline PseudoBosonPair debosonize(const TruncatedOperator& c, const TruncatedOperator& c_dag,
                                  const TruncatedOperator& t, const TruncatedOperator& t_inv,
                                  DebosonizeOptions opts = {}) {
  Eigen::JacobiSVD<Matrix> svd(t.entries());
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond < opts.max_condition))
    throw Error(ErrorKind::conditioning, "T condition estimate " + format_number(cond), cond);
  const int trust = std::min({c.trust(), c_dag.trust(), t.trust()});
  Matrix a = t.entries() * c.entries() * t_inv.entries();
  Matrix b = t.entries() * c_dag.entries() * t_inv.entries();
  // Past the declared trust of T the products carry amplified rounding and
  // truncation noise; hand back only the trusted section so downstream vacuum
  // and ladder solves never see it. The section edge behaves like a ladder edge.
  const Shape shape = t.shape();
  PseudoBosonPair pair = [&] {
    if (trust >= shape.mode_dim - 1) return PseudoBosonPair(TruncatedOperator(a, shape, trust), TruncatedOperator(b, shape, trust));
    const IndexList rows = box_indices(shape, trust);
    const Shape section{shape.modes, trust};
    return PseudoBosonPair(TruncatedOperator(select(a, rows), section, trust - 1),
                           TruncatedOperator(select(b, rows), section, trust - 1));
  }();
  const double defect = commutation_defects(pair, pair.a().trust()).canonical;
  if (defect > opts.commutator_tol * cond)
    throw Error(ErrorKind::conditioning,
                "T spreads the truncation defect into the trust block: |[a,b]-1| = " + format_number(defect), cond);
  return pair;
}

inline PseudoBosonPair debosonize(const TruncatedOperator& c, const TruncatedOperator& c_dag,
                                  const TruncatedOperator& t, DebosonizeOptions opts = {}) {
  Eigen::FullPivLU<Matrix> lu(t.entries());
  if (!lu.isInvertible()) throw Error(ErrorKind::conditioning, "T is singular", std::numeric_limits<double>::infinity());
  return debosonize(c, c_dag, t, TruncatedOperator(lu.inverse(), t.shape(), t.trust()), opts);
}

}  // namespace pbosons

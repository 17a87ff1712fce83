#pragma once

// Concrete pseudo-boson models: the extended harmonic oscillator, the Swanson
// Hamiltonian, pairs seeded by a Riesz basis, and the derivative/position
// pair on a grid that has no normalizable vacuum.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pbosons/frames.hpp"

namespace pbosons {

enum class ModelKind { bosons, extended_oscillator, swanson, riesz_seeded, counterexample };

inline constexpr std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::bosons: return "bosons";
    case ModelKind::extended_oscillator: return "extended_oscillator";
    case ModelKind::swanson: return "swanson";
    case ModelKind::riesz_seeded: return "riesz_seeded";
    case ModelKind::counterexample: return "counterexample";
  }
  return "bosons";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::bosons, ModelKind::extended_oscillator, ModelKind::swanson, ModelKind::riesz_seeded,
                 ModelKind::counterexample})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct ModelSpec {
  ModelKind kind = ModelKind::bosons;
  int dim = 64;    ///< per-mode truncation
  int modes = 1;
  double beta = 1.0;            // extended oscillator
  double theta = 0.3;           // swanson
  cplx alpha = 1.0;             // swanson metric prefactor
  double seed_condition = 10.0; // riesz_seeded: condition number of T
  int mix_block = 0;            // riesz_seeded: leading block conjugated by a random orthogonal matrix
  std::uint64_t seed = 1;
  int grid_points = 201;        // counterexample
  double box_half_width = 10.0;

  static ModelSpec bosons_spec(int dim) { return ModelSpec{ModelKind::bosons, dim}; }
  static ModelSpec oscillator(double beta, int dim = 64) {
    ModelSpec s{ModelKind::extended_oscillator, dim};
    s.beta = beta;
    return s;
  }
  static ModelSpec swanson_spec(double theta, int dim = 64) {
    ModelSpec s{ModelKind::swanson, dim};
    s.theta = theta;
    return s;
  }
  static ModelSpec riesz(double condition, int dim = 64, int mix_block = 0, std::uint64_t seed = 1) {
    ModelSpec s{ModelKind::riesz_seeded, dim};
    s.seed_condition = condition;
    s.mix_block = mix_block;
    s.seed = seed;
    return s;
  }
  static ModelSpec grid(int points, double half_width) {
    ModelSpec s{ModelKind::counterexample, points};
    s.grid_points = points;
    s.box_half_width = half_width;
    return s;
  }

  ModelSpec with_dim(int d) const {
    ModelSpec s = *this;
    s.dim = d;
    return s;
  }

  /// Short stable label, e.g. "swanson(theta=0.3)".
  std::string label() const {
    auto num = [](double v) {
      std::ostringstream os;
      os.precision(12);
      os << v;
      return os.str();
    };
    std::string p;
    switch (kind) {
      case ModelKind::bosons: break;
      case ModelKind::extended_oscillator: p = "beta=" + num(beta); break;
      case ModelKind::swanson: p = "theta=" + num(theta); break;
      case ModelKind::riesz_seeded: p = "condition=" + num(seed_condition); break;
      case ModelKind::counterexample: p = "grid=" + std::to_string(grid_points) + ",L=" + num(box_half_width); break;
    }
    return std::string(to_string(kind)) + "(" + p + (modes > 1 ? (p.empty() ? "" : ",") + std::string("d=") + std::to_string(modes) : "") + ")";
  }
};

inline void validate(const ModelSpec& s) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::spec, m); };
  if (s.modes < 1 || s.modes > 2) fail("modes must be 1 or 2");
  if (s.kind != ModelKind::counterexample && s.dim < 2) fail("dim must be at least 2");
  if (s.modes > 1 && int_pow(s.dim, s.modes) > 4096) fail("multi-mode dimension too large");
  switch (s.kind) {
    case ModelKind::bosons: break;
    case ModelKind::extended_oscillator:
      if (!(s.beta > 0.0) || !std::isfinite(s.beta)) fail("extended_oscillator needs beta > 0");
      break;
    case ModelKind::swanson:
      if (!(std::abs(s.theta) < std::numbers::pi / 4) || s.theta == 0.0)
        fail("swanson needs theta in (-pi/4, pi/4) without 0");
      if (s.alpha == cplx(0.0)) fail("swanson needs a nonzero alpha");
      break;
    case ModelKind::riesz_seeded:
      if (!(s.seed_condition >= 1.0) || !std::isfinite(s.seed_condition)) fail("riesz_seeded needs condition >= 1");
      if (s.mix_block < 0 || s.mix_block > s.dim) fail("mix_block must lie in [0, dim]");
      break;
    case ModelKind::counterexample:
      if (s.grid_points < 5) fail("counterexample needs at least 5 grid points");
      if (!(s.box_half_width > 0.0)) fail("counterexample needs a positive box half width");
      if (s.modes != 1) fail("counterexample is single-mode");
      break;
  }
}

/// T = diag(1, k, 1, k, ...) with k = condition, optionally conjugated on the
/// leading mix_block levels by a fixed-seed random orthogonal matrix.
inline TruncatedOperator riesz_seed_operator(const ModelSpec& s) {
  Matrix t = Matrix::Identity(s.dim, s.dim);
  for (int n = 1; n < s.dim; n += 2) t(n, n) = s.seed_condition;
  if (s.mix_block > 1) {
    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(s.mix_block, s.mix_block);
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Matrix q = Matrix::Identity(s.dim, s.dim);
    q.topLeftCorner(s.mix_block, s.mix_block) = Eigen::MatrixXd(qr.householderQ()).cast<cplx>();
    t = q * t * q.adjoint();
  }
  return {t, s.dim};
}

struct GridOperators {
  TruncatedOperator derivative;  ///< central differences, zero boundary rows
  TruncatedOperator position;
  std::vector<double> x;
  double spacing = 0.0;
};

inline GridOperators grid_operators(int points, double half_width) {
  const double h = 2.0 * half_width / (points - 1);
  Matrix d = Matrix::Zero(points, points);
  Matrix x = Matrix::Zero(points, points);
  std::vector<double> xs(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    xs[static_cast<std::size_t>(i)] = -half_width + i * h;
    x(i, i) = xs[static_cast<std::size_t>(i)];
  }
  for (int i = 1; i + 1 < points; ++i) {
    d(i, i + 1) = 0.5 / h;
    d(i, i - 1) = -0.5 / h;
  }
  return {TruncatedOperator(d, points - 1), TruncatedOperator(x, points - 1), xs, h};
}

inline PseudoBosonPair instantiate(const ModelSpec& s) {
  validate(s);
  const cplx i(0.0, 1.0);
  auto single = [&]() -> PseudoBosonPair {
    if (s.kind == ModelKind::counterexample) {
      auto g = grid_operators(s.grid_points, s.box_half_width);
      return {g.derivative, g.position};
    }
    auto [c, c_dag] = build_ladder(s.dim);
    switch (s.kind) {
      case ModelKind::extended_oscillator: {
        auto id = TruncatedOperator::identity(c.shape(), c.trust());
        return {c - (1.0 / s.beta) * id, c_dag + (1.0 / s.beta) * id};
      }
      case ModelKind::swanson:
        return {std::cos(s.theta) * c + i * std::sin(s.theta) * c_dag,
                std::cos(s.theta) * c_dag + i * std::sin(s.theta) * c};
      case ModelKind::riesz_seeded: {
        const TruncatedOperator t = riesz_seed_operator(s);
        const TruncatedOperator ti(t.entries().inverse(), t.trust());
        return {t * c * ti, t * c_dag * ti};
      }
      default: return {c, c_dag};
    }
  }();
  return s.modes == 1 ? single : lift_pair(single, s.modes);
}

// ---------------------------------------------------------------------------
// Hamiltonians

/// gamma_beta = (2 + beta^2) / (2 beta^2) for the oscillator, omega_theta = 1/cos(2 theta) for Swanson.
inline double hamiltonian_constant(const ModelSpec& s) {
  if (s.kind == ModelKind::extended_oscillator) return (2.0 + s.beta * s.beta) / (2.0 * s.beta * s.beta);
  if (s.kind == ModelKind::swanson) return 1.0 / std::cos(2.0 * s.theta);
  throw Error(ErrorKind::spec, "no Hamiltonian for " + s.label());
}

/// H from its quadratic definition in x = (a + a^dag)/sqrt2, p = (a - a^dag)/(i sqrt2).
inline TruncatedOperator hamiltonian_direct(const ModelSpec& s) {
  auto [c, c_dag] = build_ladder(s.dim);
  const cplx i(0.0, 1.0);
  const TruncatedOperator x = (1.0 / std::sqrt(2.0)) * (c + c_dag);
  const TruncatedOperator p = (1.0 / (i * std::sqrt(2.0))) * (c - c_dag);
  if (s.kind == ModelKind::extended_oscillator)
    return (s.beta / 2.0) * (p * p + x * x) + (i * std::sqrt(2.0)) * p;
  if (s.kind == ModelKind::swanson)
    return 0.5 * (p * p + x * x) - (0.5 * i * std::tan(2.0 * s.theta)) * (p * p - x * x);
  throw Error(ErrorKind::spec, "no Hamiltonian for " + s.label());
}

/// beta (B A + gamma) or omega (B A + 1/2) from the pair.
inline TruncatedOperator hamiltonian_factorized(const ModelSpec& s, const PseudoBosonPair& pair) {
  const auto id = TruncatedOperator::identity(pair.shape(), pair.a().trust());
  const double k = hamiltonian_constant(s);
  if (s.kind == ModelKind::extended_oscillator) return s.beta * (pair.number() + k * id);
  return k * (pair.number() + 0.5 * id);
}

struct FactorCheck {
  double constant = 0.0;  ///< gamma_beta or omega_theta
  double residual = 0.0;  ///< |H_direct - H_factorized| / |H_direct| on the trust block
};

inline FactorCheck hamiltonian_factor_check(const ModelSpec& s, const PseudoBosonPair& pair, int trust) {
  const TruncatedOperator direct = hamiltonian_direct(s);
  const TruncatedOperator fact = hamiltonian_factorized(s, pair);
  const Matrix d = direct.restricted(trust);
  return {hamiltonian_constant(s), norm2(d - fact.restricted(trust)) / norm2(d)};
}

struct SpectralCheck {
  int levels = 0;
  double max_imag = 0.0;           ///< largest |Im E_n| of <Psi_n, H phi_n>
  double max_error = 0.0;          ///< largest |E_n - closed form|
  double eigen_residual = 0.0;     ///< largest |H phi_n - E_n phi_n| / |phi_n| on trust rows
  double section_eigen_error = 0.0;  ///< diagnostic: lowest eigenvalues of the full section vs closed form
};

/// Energies beta (n + gamma) and omega (n + 1/2) for n < trust/2, read off as
/// biorthogonal Rayleigh quotients.
inline SpectralCheck spectral_check(const ModelSpec& s, const BiorthogonalSystem& sys, int trust) {
  const Matrix h = hamiltonian_direct(s).entries();
  const double k = hamiltonian_constant(s);
  auto exact = [&](int n) { return s.kind == ModelKind::extended_oscillator ? s.beta * (n + k) : k * (n + 0.5); };
  SpectralCheck out;
  out.levels = std::min(trust / 2, sys.n_max + 1);
  const IndexList rows = box_indices(sys.shape, trust);
  for (int n = 0; n < out.levels; ++n) {
    const Vector hp = h * sys.phi.col(n);
    const cplx e = sys.psi.col(n).dot(hp);
    out.max_imag = std::max(out.max_imag, std::abs(e.imag()));
    out.max_error = std::max(out.max_error, std::abs(e - exact(n)));
    out.eigen_residual = std::max(out.eigen_residual, select(Vector(hp - e * sys.phi.col(n)), rows).norm() /
                                                          sys.phi_norms[static_cast<std::size_t>(n)]);
  }
  Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Matrix>(h, false).eigenvalues();
  std::vector<cplx> sorted(ev.data(), ev.data() + ev.size());
  std::sort(sorted.begin(), sorted.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  for (int n = 0; n < out.levels && n < static_cast<int>(sorted.size()); ++n)
    out.section_eigen_error = std::max(out.section_eigen_error, std::abs(sorted[static_cast<std::size_t>(n)] - exact(n)));
  return out;
}

// ---------------------------------------------------------------------------
// Explicit metrics

/// |alpha|^2 exp(i theta (a^2 - a^dag^2)) for Swanson, exp(2 (a + a^dag) / beta) for the oscillator.
inline TruncatedOperator explicit_metric(const ModelSpec& s) {
  auto [c, c_dag] = build_ladder(s.dim);
  const cplx i(0.0, 1.0);
  if (s.kind == ModelKind::extended_oscillator) return herm_exp(c + c_dag, 2.0 / s.beta);
  if (s.kind == ModelKind::swanson) {
    const TruncatedOperator h = i * (c * c - c_dag * c_dag);
    return std::norm(s.alpha) * herm_exp(h, s.theta);
  }
  throw Error(ErrorKind::spec, "no closed-form metric for " + s.label());
}

struct MetricAgreement {
  double gauge = 0.0;        ///< real scale g with S_phi ~ g * metric, fitted on the vacuum entry
  double relative = 0.0;     ///< |S_phi - g M| / |S_phi| on the trust block
  double hermiticity = 0.0;  ///< of the metric on the trust block
  double mapping = 0.0;      ///< max_n |g M Psi_n - phi_n| / |phi_n| on the trust rows, n < trust
};

/// The metric fixes S_phi only up to a positive scale (alpha for Swanson);
/// <Psi_0, phi_0> = 1 with |phi_0| = 1 pins it, so the scale is fitted once.
inline MetricAgreement metric_agreement(const TruncatedOperator& metric, const TruncatedOperator& s_phi,
                                        const BiorthogonalSystem& sys, int trust) {
  const Matrix m = metric.restricted(trust);
  const Matrix s = s_phi.restricted(trust);
  MetricAgreement out;
  out.gauge = (s(0, 0) / m(0, 0)).real();
  out.relative = norm2(s - out.gauge * m) / norm2(s);
  out.hermiticity = hermiticity_defect(m);
  const IndexList rows = box_indices(sys.shape, trust);
  for (int k = 0; k < sys.count(); ++k) {
    const auto& n = sys.labels[static_cast<std::size_t>(k)];
    if (std::any_of(n.begin(), n.end(), [trust](int j) { return j >= trust; })) continue;
    Vector r = out.gauge * (metric.entries() * sys.psi.col(k)) - sys.phi.col(k);
    out.mapping = std::max(out.mapping, select(r, rows).norm() / sys.phi_norms[static_cast<std::size_t>(k)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Counterexample

struct CounterexampleReport {
  int grid_points = 0;
  double half_width = 0.0;
  double spacing = 0.0;
  double commutator_defect = 0.0;       ///< |([D, X] - 1) f| / |f| on interior rows for a smooth probe f
  double commutator_defect_half = 0.0;  ///< same at half the spacing
  int kernel_dimension = 0;             ///< numerical kernel of the interior rows of D
  double kernel_residual = 0.0;
  double norm_integral = 0.0;           ///< h |v|^2 of the mean-one kernel vector
  double norm_integral_doubled = 0.0;   ///< same on [-2L, 2L] at fixed spacing
  double ratio = 0.0;                   ///< doubled / original, 2 for a non-normalizable constant
  std::string vacuum_error;             ///< what vacuum_solve reports for D
  std::string cause = "no-vacuum";
};

namespace detail {

struct SmoothKernel {
  Vector v;
  int dimension = 0;
  double residual = 0.0;
};

/// Null space of the interior rows of D, then the vector in it with the
/// smallest forward differences (the constant, not the grid-scale checkerboard).
inline SmoothKernel smooth_kernel(const GridOperators& g) {
  const Matrix d = g.derivative.entries();
  const Index n = d.rows();
  Matrix interior = d.middleRows(1, n - 2);
  Eigen::BDCSVD<Matrix> svd(interior, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = 1e-10 * sv(0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  Matrix null = svd.matrixV().rightCols(n - rank);
  Matrix diff = Matrix::Zero(n - 1, n);
  for (Index i = 0; i + 1 < n; ++i) {
    diff(i, i) = -1.0;
    diff(i, i + 1) = 1.0;
  }
  Matrix reduced = diff * null;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced.adjoint() * reduced);
  Vector v = null * eig.eigenvectors().col(0);
  v /= v.mean();
  return {v, static_cast<int>(n - rank), (interior * v).norm() / v.norm()};
}

inline double commutator_probe(const GridOperators& g, double half_width) {
  const Matrix comm = commutator(g.derivative, g.position).entries();
  const Index n = comm.rows();
  const double w = half_width / 4.0;
  Vector f(n);
  for (Index i = 0; i < n; ++i) f(i) = std::exp(-std::pow(g.x[static_cast<std::size_t>(i)] / w, 2));
  Vector r = comm * f - f;
  return r.segment(1, n - 2).norm() / f.segment(1, n - 2).norm();
}

}  // namespace detail

/// [D, X] ~ 1 on interior rows, but the only kernel of D is the constant,
/// whose squared norm grows linearly with the box: there is no vacuum.
inline CounterexampleReport counterexample_demo(const ModelSpec& s) {
  validate(s);
  if (s.kind != ModelKind::counterexample) throw Error(ErrorKind::spec, "counterexample_demo needs a counterexample spec");
  CounterexampleReport out;
  out.grid_points = s.grid_points;
  out.half_width = s.box_half_width;
  const auto g = grid_operators(s.grid_points, s.box_half_width);
  out.spacing = g.spacing;
  out.commutator_defect = detail::commutator_probe(g, s.box_half_width);
  const auto fine = grid_operators(2 * s.grid_points - 1, s.box_half_width);
  out.commutator_defect_half = detail::commutator_probe(fine, s.box_half_width);

  const auto k = detail::smooth_kernel(g);
  out.kernel_dimension = k.dimension;
  out.kernel_residual = k.residual;
  out.norm_integral = g.spacing * k.v.squaredNorm();
  const auto wide = grid_operators(2 * s.grid_points - 1, 2.0 * s.box_half_width);
  out.norm_integral_doubled = wide.spacing * detail::smooth_kernel(wide).v.squaredNorm();
  out.ratio = out.norm_integral_doubled / out.norm_integral;

  try {
    vacuum_solve(g.derivative);
    out.vacuum_error = "none";
  } catch (const Error& e) {
    out.vacuum_error = std::string(to_string(e.kind()));
  }
  return out;
}

/// The models shipped with the toolkit, at the default truncation.
inline std::vector<ModelSpec> shipped_catalog(int dim = 64) {
  std::vector<ModelSpec> out;
  for (double b : {0.5, 1.0, 2.0}) out.push_back(ModelSpec::oscillator(b, dim));
  for (double t : {0.1, 0.2, 0.25, 0.3, std::numbers::pi / 6}) out.push_back(ModelSpec::swanson_spec(t, dim));
  out.push_back(ModelSpec::riesz(10.0, dim));
  out.push_back(ModelSpec::riesz(4.0, dim, 6, 7));
  return out;
}

}  // namespace pbosons

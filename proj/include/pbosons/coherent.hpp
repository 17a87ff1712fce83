#pragma once

// Coherent states phi(z) = e^{-|z|^2/2} sum_n z^n / sqrt(n!) phi_n (and the
// same series over Psi_n), their eigenvalue relations, and a polar quadrature
// of the operator integrals (1/pi^d) int |phi(z)><Psi(z)| d^2z.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pbosons/frames.hpp"

namespace pbosons {

struct CoherentOptions {
  double tail_tol = 1e-8;  ///< largest accepted estimate of the dropped series tail
  double domain_radius = std::numeric_limits<double>::infinity();
};

struct CoherentState {
  std::vector<cplx> z;
  Vector vec_phi;
  Vector vec_psi;
  int series_cutoff = 0;
  double tail_bound = 0.0;
};

namespace detail {

/// e^{-|z|^2/2} z^n / sqrt(n!) for n = 0..n_max, by recursion to avoid overflow.
inline std::vector<cplx> coherent_coefficients(cplx z, int n_max) {
  std::vector<cplx> c(static_cast<std::size_t>(n_max) + 1);
  c[0] = std::exp(-0.5 * std::norm(z));
  for (int n = 1; n <= n_max; ++n) c[static_cast<std::size_t>(n)] = c[static_cast<std::size_t>(n) - 1] * z / std::sqrt(double(n));
  return c;
}

/// Coefficient of every generated label: the product of the per-mode coefficients.
inline Vector label_coefficients(const BiorthogonalSystem& sys, std::span<const cplx> z) {
  std::vector<std::vector<cplx>> per_mode;
  for (cplx zj : z) per_mode.push_back(coherent_coefficients(zj, sys.n_max));
  Vector out(sys.count());
  for (int k = 0; k < sys.count(); ++k) {
    cplx v = 1.0;
    const auto& n = sys.labels[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < n.size(); ++j) v *= per_mode[j][static_cast<std::size_t>(n[j])];
    out(k) = v;
  }
  return out;
}

/// Tail of sum_{n > N} e^{-r^2/2} r^n / sqrt(n!) g rho^{n-N}, summed in logs until negligible.
inline double extrapolated_tail(double r, int n_cut, double g_cut, double rho) {
  if (r == 0.0 || g_cut == 0.0) return 0.0;
  double total = 0.0;
  double log_term = -0.5 * r * r + n_cut * std::log(r) - 0.5 * std::lgamma(n_cut + 1.0) + std::log(g_cut);
  for (int n = n_cut + 1; n < n_cut + 4000; ++n) {
    log_term += std::log(r * rho) - 0.5 * std::log(double(n));
    const double term = std::exp(log_term);
    total += term;
    if (n > n_cut + 4 && term < 1e-18 * std::max(total, 1e-300)) break;
  }
  return total;
}

/// Largest norm among labels with n_j == level, and the edge growth rate along mode j.
inline void axis_profile(const BiorthogonalSystem& sys, const std::vector<double>& norms, int j, double& g_cut,
                         double& rho) {
  std::vector<double> level(static_cast<std::size_t>(sys.n_max) + 1, 0.0);
  for (int k = 0; k < sys.count(); ++k) {
    const int n = sys.labels[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    level[static_cast<std::size_t>(n)] = std::max(level[static_cast<std::size_t>(n)], norms[static_cast<std::size_t>(k)]);
  }
  g_cut = level.back();
  rho = 1.0;
  for (int n = std::max(1, sys.n_max - 3); n <= sys.n_max; ++n)
    rho = std::max(rho, level[static_cast<std::size_t>(n)] / level[static_cast<std::size_t>(n) - 1]);
}

}  // namespace detail

/// Builds phi(z) and Psi(z) from the series truncated at the system's n_max.
/// The dropped tail is estimated by extrapolating the edge growth of |phi_n|
/// and |Psi_n| geometrically.
inline CoherentState coherent_build(const BiorthogonalSystem& sys, std::span<const cplx> z, CoherentOptions opts = {}) {
  if (static_cast<int>(z.size()) != sys.modes())
    throw Error(ErrorKind::shape, "need one amplitude per mode, got " + std::to_string(z.size()));
  for (cplx zj : z)
    if (std::abs(zj) > opts.domain_radius)
      throw Error(ErrorKind::domain_exceeded, "|z| = " + format_number(std::abs(zj)) + " outside the configured domain",
                  std::abs(zj));
  CoherentState st;
  st.z.assign(z.begin(), z.end());
  st.series_cutoff = sys.n_max;
  const Vector coeff = detail::label_coefficients(sys, z);
  st.vec_phi = sys.phi * coeff;
  st.vec_psi = sys.psi * coeff;

  for (const auto* norms : {&sys.phi_norms, &sys.psi_norms}) {
    double tail = 0.0;
    for (int j = 0; j < sys.modes(); ++j) {
      double g_cut = 0.0, rho = 1.0;
      detail::axis_profile(sys, *norms, j, g_cut, rho);
      double t = detail::extrapolated_tail(std::abs(z[static_cast<std::size_t>(j)]), sys.n_max, g_cut, rho);
      // the other modes contribute at most their own partial sums
      for (int i = 0; i < sys.modes(); ++i)
        if (i != j) {
          double s = 0.0;
          for (cplx c : detail::coherent_coefficients(z[static_cast<std::size_t>(i)], sys.n_max)) s += std::abs(c);
          t *= s;
        }
      tail += t;
    }
    st.tail_bound = std::max(st.tail_bound, tail);
  }
  if (!(st.tail_bound < opts.tail_tol))
    throw Error(ErrorKind::domain_exceeded,
                "series tail estimate " + format_number(st.tail_bound) + " at n_max " + std::to_string(sys.n_max),
                st.tail_bound);
  return st;
}

inline CoherentState coherent_build(const BiorthogonalSystem& sys, cplx z, CoherentOptions opts = {}) {
  return coherent_build(sys, std::span<const cplx>(&z, 1), opts);
}

struct EigenRelation {
  double phi = 0.0;  ///< max_j |a_j phi(z) - z_j phi(z)| / |phi(z)| on the trust rows
  double psi = 0.0;  ///< max_j |b_j^dag Psi(z) - z_j Psi(z)| / |Psi(z)| on the trust rows
  double max() const { return std::max(phi, psi); }
};

inline EigenRelation eigen_relation_check(const CoherentState& st, const PseudoBosonPair& pair, int trust) {
  const IndexList rows = box_indices(pair.shape(), trust);
  EigenRelation out;
  for (int j = 0; j < pair.modes(); ++j) {
    const cplx zj = st.z[static_cast<std::size_t>(j)];
    Vector rp = pair.a(j).entries() * st.vec_phi - zj * st.vec_phi;
    Vector rs = pair.b(j).entries().adjoint() * st.vec_psi - zj * st.vec_psi;
    out.phi = std::max(out.phi, select(rp, rows).norm() / st.vec_phi.norm());
    out.psi = std::max(out.psi, select(rs, rows).norm() / st.vec_psi.norm());
  }
  return out;
}

/// Relative trust-row distance between the series state and U(z) phi_0 with
/// U(z) = exp(sum_j z_j b_j - conj(z_j) a_j). Only meaningful for small |z|.
inline double displacement_route_defect(const BiorthogonalSystem& sys, const PseudoBosonPair& pair,
                                        std::span<const cplx> z, int trust) {
  const CoherentState st = coherent_build(sys, z, CoherentOptions{std::numeric_limits<double>::infinity()});
  TruncatedOperator gen(Matrix::Zero(pair.dim(), pair.dim()), pair.shape(), pair.a().trust());
  for (int j = 0; j < pair.modes(); ++j) {
    const cplx zj = z[static_cast<std::size_t>(j)];
    gen = gen + zj * pair.b(j) - std::conj(zj) * pair.a(j);
  }
  const Vector routed = herm_exp(gen, 1.0).entries() * sys.phi.col(0);
  const IndexList rows = box_indices(pair.shape(), trust);
  return select(Vector(routed - st.vec_phi), rows).norm() / select(st.vec_phi, rows).norm();
}

// ---------------------------------------------------------------------------
// Quadrature

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre on [lo, hi] from the eigenproblem of the Jacobi matrix (Golub-Welsch).
inline GaussRule gauss_legendre(int count, double lo, double hi) {
  if (count < 1) throw Error(ErrorKind::quadrature, "need at least one node");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(count, count);
  for (int k = 1; k < count; ++k) {
    const double off = k / std::sqrt(4.0 * k * k - 1.0);
    jac(k, k - 1) = jac(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  GaussRule rule;
  const double half = 0.5 * (hi - lo);
  for (int k = 0; k < count; ++k) {
    rule.nodes.push_back(lo + half * (eig.eigenvalues()(k) + 1.0));
    const double v0 = eig.eigenvectors()(0, k);
    rule.weights.push_back(half * 2.0 * v0 * v0);
  }
  return rule;
}

struct QuadratureSpec {
  double r_max = 6.0;
  int radial = 64;
  int angular = 64;
  int doublings = 1;         ///< node doublings used for the convergence trace
  double tol = 1e-8;         ///< largest accepted change of the trust-block result under doubling
  double growth_limit = 1e6; ///< largest accepted growth of the integrand norm over 0 < r <= r_max
  int growth_samples = 12;
};

struct QuadratureStep {
  int radial = 0;
  int angular = 0;
  double defect = 0.0;  ///< identity defect on the trust block
  double change = 0.0;  ///< change of the mixed integral from the previous step
};

struct QuadratureResult {
  TruncatedOperator s_phi;     ///< (1/pi^d) int |phi(z)><phi(z)|
  TruncatedOperator s_psi;     ///< (1/pi^d) int |Psi(z)><Psi(z)|
  TruncatedOperator identity;  ///< (1/pi^d) int |phi(z)><Psi(z)|
  double defect_phi = 0.0;     ///< relative trust-block distance to frame_operator(F_phi)
  double defect_psi = 0.0;
  double defect_identity = 0.0;
  double radial_tail = 0.0;    ///< largest Gaussian mass beyond r_max among the trust levels
  double growth = 0.0;         ///< sup_{|z|=r} |phi(z)||Psi(z)| at r_max over its value near 0
  std::vector<QuadratureStep> trace;
};

struct GrowthPoint {
  double radius = 0.0;
  double value = 0.0;  ///< sup over the sampled circle of |phi(z)| |Psi(z)| (product over modes)
};

/// Integrand size along circles |z| = r for a single mode; divergence of this
/// profile is the finite-section trace of a non-Riesz pair.
inline std::vector<GrowthPoint> integrand_growth(const BiorthogonalSystem& sys, std::span<const double> radii,
                                                 int angular = 64) {
  std::vector<GrowthPoint> out;
  const Matrix gphi = sys.phi.adjoint() * sys.phi;
  const Matrix gpsi = sys.psi.adjoint() * sys.psi;
  for (double r : radii) {
    double best = 0.0;
    for (int k = 0; k < angular; ++k) {
      const double ang = 2.0 * std::numbers::pi * k / angular;
      std::vector<cplx> z(static_cast<std::size_t>(sys.modes()), std::polar(r, ang));
      const Vector c = detail::label_coefficients(sys, z);
      const double np = std::sqrt(std::max(0.0, c.dot(gphi * c).real()));
      const double ns = std::sqrt(std::max(0.0, c.dot(gpsi * c).real()));
      best = std::max(best, np * ns);
    }
    out.push_back({r, best});
  }
  return out;
}

namespace detail {

/// (1/pi) int c(z) c(z)^dag d^2z over the disk of radius r_max, where c_n(z)
/// are the coherent coefficients up to n_max.
inline Matrix coefficient_moments(int n_max, const QuadratureSpec& q, int radial, int angular) {
  const GaussRule rule = gauss_legendre(radial, 0.0, q.r_max);
  Matrix w = Matrix::Zero(n_max + 1, n_max + 1);
  for (int i = 0; i < radial; ++i) {
    const double r = rule.nodes[static_cast<std::size_t>(i)];
    const double wr = rule.weights[static_cast<std::size_t>(i)] * r * (2.0 / angular);  // (1/pi) * r dr * 2pi/M
    for (int k = 0; k < angular; ++k) {
      const auto c = coherent_coefficients(std::polar(r, 2.0 * std::numbers::pi * k / angular), n_max);
      Eigen::Map<const Vector> cv(c.data(), n_max + 1);
      w.noalias() += wr * cv * cv.adjoint();
    }
  }
  return w;
}

}  // namespace detail

/// Polar quadrature of the three operator integrals, per mode, in a fixed
/// accumulation order. Every integral equals F_phi W F_Psi^dag for a moment
/// matrix W of the coherent coefficients, so it is computed that way.
inline QuadratureResult identity_resolution_quadrature(const BiorthogonalSystem& sys, int trust, QuadratureSpec q = {}) {
  if (sys.modes() > 2) throw Error(ErrorKind::quadrature, "quadrature supports at most two modes");
  if (q.r_max <= 0.0 || q.radial < 1 || q.angular < 1)
    throw Error(ErrorKind::quadrature, "radial cutoff and node counts must be positive");
  const IndexList rows = box_indices(sys.shape, trust);
  const auto frames = frame_operators(sys, trust);

  auto moments = [&](int radial, int angular) {
    const Matrix w1 = detail::coefficient_moments(sys.n_max, q, radial, angular);
    Matrix w(sys.count(), sys.count());
    for (int k = 0; k < sys.count(); ++k)
      for (int l = 0; l < sys.count(); ++l) {
        cplx v = 1.0;
        for (int j = 0; j < sys.modes(); ++j)
          v *= w1(sys.labels[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)],
                  sys.labels[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)]);
        w(k, l) = v;
      }
    return w;
  };
  auto identity_defect = [&](const Matrix& mixed) {
    Matrix block = select(mixed, rows);
    return norm2(block - Matrix::Identity(block.rows(), block.cols()));
  };

  Matrix w = moments(q.radial, q.angular);
  Matrix mixed = sys.phi * w * sys.psi.adjoint();
  QuadratureResult out{TruncatedOperator(sys.phi * w * sys.phi.adjoint(), sys.shape, trust),
                       TruncatedOperator(sys.psi * w * sys.psi.adjoint(), sys.shape, trust),
                       TruncatedOperator(mixed, sys.shape, trust),
                       0.0, 0.0, identity_defect(mixed), 0.0, 0.0, {}};
  out.trace.push_back({q.radial, q.angular, out.defect_identity, 0.0});

  Matrix previous = select(mixed, rows);
  for (int d = 1; d <= q.doublings; ++d) {
    const int nr = q.radial << d, na = q.angular << d;
    const Matrix m = sys.phi * moments(nr, na) * sys.psi.adjoint();
    const Matrix block = select(m, rows);
    out.trace.push_back({nr, na, identity_defect(m), norm2(block - previous)});
    previous = block;
  }

  auto rel = [&](const TruncatedOperator& x, const TruncatedOperator& y) {
    const Matrix by = y.restricted(trust);
    return norm2(x.restricted(trust) - by) / std::max(norm2(by), 1e-300);
  };
  out.defect_phi = rel(out.s_phi, frames.s_phi);
  out.defect_psi = rel(out.s_psi, frames.s_psi);

  // Q(n+1, r_max^2) = e^{-x} sum_{k<=n} x^k / k!: the Gaussian mass beyond r_max
  // for level n, largest at the highest level that reaches the trust rows
  const int top = std::min(trust, sys.n_max + 1);
  const double x = q.r_max * q.r_max;
  double term = std::exp(-x), tail = 0.0;
  for (int k = 0; k < top; ++k) {
    tail += term;
    term *= x / (k + 1);
  }
  out.radial_tail = tail;

  std::vector<double> radii;
  for (int k = 1; k <= q.growth_samples; ++k) radii.push_back(q.r_max * k / q.growth_samples);
  const auto profile = integrand_growth(sys, radii, q.angular);
  out.growth = profile.back().value / std::max(profile.front().value, 1e-300);

  double worst_change = 0.0;
  for (const auto& s : out.trace) worst_change = std::max(worst_change, s.change);
  auto trace_text = [&] {
    std::string t;
    for (const auto& s : out.trace)
      t += " [" + std::to_string(s.radial) + "x" + std::to_string(s.angular) + ": defect " + format_number(s.defect) +
           ", change " + format_number(s.change) + "]";
    return t;
  };
  if (worst_change > q.tol * std::max(1.0, norm2(previous)))
    throw Error(ErrorKind::quadrature, "node doubling changes the integral:" + trace_text(), worst_change);
  if (out.growth > q.growth_limit)
    throw Error(ErrorKind::quadrature,
                "integrand grows by " + format_number(out.growth) + " up to r_max " + format_number(q.r_max) +
                    "; the integral is only formal here:" + trace_text(),
                out.growth);
  return out;
}

}  // namespace pbosons

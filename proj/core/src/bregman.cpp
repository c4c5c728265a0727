#include "coherence/bregman.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "coherence/solver.hpp"

namespace coherence {

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

double divergence(const GeneratorSpec& gen, const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw DomainError("divergence: size mismatch");
  switch (gen.kind) {
    case GeneratorKind::SquaredEuclidean:
      return 0.5 * (p - q).squaredNorm();
    case GeneratorKind::Mahalanobis:
    case GeneratorKind::DiagonalQuadratic:
    case GeneratorKind::QuadraticCoupled: {
      const Vector d = p - q;
      return 0.5 * d.dot((*gen.matrix) * d);
    }
    case GeneratorKind::NegativeEntropy: {
      // Unnormalized relative entropy, componentwise with the boundary
      // conventions 0 log 0 = 0 and B(p_i || 0) = +inf for p_i > 0.
      KahanSum s;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0)
          throw DomainError("negative_entropy: arguments must be >= 0");
        if (q[i] == 0.0) {
          if (p[i] > 0.0) return kInf;
          continue;
        }
        const double plogratio = p[i] > 0.0 ? p[i] * std::log(p[i] / q[i]) : 0.0;
        s.add(plogratio - p[i] + q[i]);
      }
      return s.value();
    }
    case GeneratorKind::NegativeLog: {
      KahanSum s;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0) || !(q[i] > 0.0))
          throw DomainError("negative_log: arguments must be > 0");
        const double ratio = p[i] / q[i];
        s.add(ratio - std::log(ratio) - 1.0);
      }
      return s.value();
    }
  }
  throw DomainError("unknown generator kind");
}

double weighted_divergence(const GeneratorSpec& gen, const Vector& weights,
                           const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() ||
      weights.size() != a.rows())
    throw DomainError("weighted_divergence: shape mismatch");
  KahanSum s;
  for (Eigen::Index x = 0; x < a.rows(); ++x) {
    if (weights[x] == 0.0) continue;
    double d;
    try {
      d = divergence(gen, a.row(x).transpose(), b.row(x).transpose());
    } catch (const DomainError& e) {
      throw DomainError("prompt " + std::to_string(x) + ": " + e.what());
    }
    if (d == kInf) return kInf;
    s.add(weights[x] * d);
  }
  return s.value();
}

double expected_divergence(const GeneratorSpec& gen,
                           const PromptDistribution& dist, const Matrix& a,
                           const Matrix& b) {
  return weighted_divergence(gen, dist.weights, a, b);
}

double three_point_residual(const GeneratorSpec& gen, const Vector& p,
                            const Vector& r, const Vector& q) {
  const double lhs = divergence(gen, p, r) + divergence(gen, r, q);
  const double rhs = divergence(gen, p, q) +
                     (gradient(gen, q) - gradient(gen, r)).dot(p - r);
  return lhs - rhs;
}

Vector centroid(const GeneratorSpec& gen, const Vector& lambdas,
                const Matrix& points) {
  if (lambdas.size() != points.rows())
    throw DomainError("centroid: weight count mismatch");
  if (std::abs(kahan_total(lambdas) - 1.0) > 1e-12 ||
      (lambdas.array() < 0.0).any())
    throw DomainError("centroid: lambdas must lie in the simplex");
  Matrix duals(points.rows(), points.cols());
  for (Eigen::Index k = 0; k < points.rows(); ++k)
    duals.row(k) =
        detail::extended_gradient(gen, points.row(k).transpose()).transpose();
  const Vector u = detail::dual_combination(duals, lambdas);
  return dual_map_inverse(gen, u);
}

CentroidDecomposition centroid_decomposition(const GeneratorSpec& gen,
                                             const Vector& lambdas,
                                             const Matrix& points,
                                             const ConvexModelSet& set) {
  if (set.prompts != 1 || set.outcomes != points.cols())
    throw DomainError("centroid_decomposition: set must describe one row");
  CentroidDecomposition out;
  out.centroid = centroid(gen, lambdas, points);

  SolveResult solve = bregman_project_weighted(
      gen, Vector::Ones(1), set, out.centroid.transpose(), SolverOptions{});
  out.projected = solve.table.row(0).transpose();

  // Conjugate decomposition of the minimum (centroid lemma corollary).
  Matrix duals(points.rows(), points.cols());
  for (Eigen::Index k = 0; k < points.rows(); ++k)
    duals.row(k) =
        detail::extended_gradient(gen, points.row(k).transpose()).transpose();
  KahanSum conj_terms;
  for (Eigen::Index k = 0; k < points.rows(); ++k)
    conj_terms.add(lambdas[k] *
                   conjugate_value(gen, duals.row(k).transpose()));
  const Vector u = detail::dual_combination(duals, lambdas);
  out.min_value = conj_terms.value() - conjugate_value(gen, u) +
                  divergence(gen, out.projected, out.centroid);

  // Internal cross-check against the direct weighted sum.
  KahanSum direct;
  for (Eigen::Index k = 0; k < points.rows(); ++k)
    direct.add(lambdas[k] *
               divergence(gen, out.projected, points.row(k).transpose()));
  if (std::abs(direct.value() - out.min_value) > 1e-9)
    throw SolverError("centroid_decomposition: identity check failed");
  return out;
}

double fenchel_bregman_gap(const GeneratorSpec& gen, const Vector& u,
                           const Vector& v, const Vector& alpha) {
  const Vector beta = gradient(gen, v);
  return divergence(gen, u, v) + conjugate_divergence(gen, alpha, beta) -
         (u - v).dot(alpha - beta);
}

double duality_residual(const GeneratorSpec& gen, const Vector& p,
                        const Vector& q) {
  const double primal = divergence(gen, p, q);
  const double dual =
      conjugate_divergence(gen, gradient(gen, q), gradient(gen, p));
  return std::abs(primal - dual);
}

}  // namespace coherence

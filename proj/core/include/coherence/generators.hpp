#ifndef COHERENCE_GENERATORS_HPP_
#define COHERENCE_GENERATORS_HPP_

#include <optional>
#include <string>

#include "coherence/types.hpp"

namespace coherence {

enum class GeneratorKind {
  SquaredEuclidean,
  Mahalanobis,
  NegativeEntropy,
  NegativeLog,
  QuadraticCoupled,
  DiagonalQuadratic,
};

enum class NormTag { L1, L2 };

std::string to_string(GeneratorKind kind);

/// A Legendre (or PSD-quadratic) generator F together with the analytic
/// constants the improvement bounds need. mu and L are stored metadata,
/// never inferred; evaluators that need a missing constant throw
/// MissingConstant.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::SquaredEuclidean;
  std::optional<Matrix> matrix;   // Mahalanobis / QuadraticCoupled A, or diag
  std::optional<Vector> linear;   // QuadraticCoupled b
  std::optional<double> mu;       // strong convexity w.r.t. norm_tag
  std::optional<double> smoothness;  // gradient Lipschitz constant L
  NormTag norm_tag = NormTag::L2;

  /// PSD-but-singular quadratics are accepted but flagged non-Legendre.
  bool legendre = true;

  double require_mu() const {
    if (!mu) throw MissingConstant("generator has no declared mu");
    return *mu;
  }
  double require_smoothness() const {
    if (!smoothness) throw MissingConstant("generator has no declared L");
    return *smoothness;
  }

  bool separable() const {
    return kind == GeneratorKind::SquaredEuclidean ||
           kind == GeneratorKind::NegativeEntropy ||
           kind == GeneratorKind::NegativeLog ||
           kind == GeneratorKind::DiagonalQuadratic;
  }
  bool quadratic() const {
    return kind == GeneratorKind::SquaredEuclidean ||
           kind == GeneratorKind::Mahalanobis ||
           kind == GeneratorKind::QuadraticCoupled ||
           kind == GeneratorKind::DiagonalQuadratic;
  }
  /// Steep at the boundary of the nonnegative orthant.
  bool steep() const {
    return kind == GeneratorKind::NegativeEntropy ||
           kind == GeneratorKind::NegativeLog;
  }
};

GeneratorSpec squared_euclidean();
GeneratorSpec negative_entropy();
GeneratorSpec negative_log();
/// A must be symmetric positive definite.
GeneratorSpec mahalanobis(const Matrix& a);
/// A must be symmetric PSD; singular A is accepted but non-Legendre.
GeneratorSpec quadratic_coupled(const Matrix& a, const Vector& b);
GeneratorSpec diagonal_quadratic(const Vector& diag);

/// F(p). Boundary points of the closed domain are accepted for steep
/// generators where F extends continuously (0 log 0 = 0); NegativeLog
/// requires strictly positive input.
double value(const GeneratorSpec& gen, const Vector& p);

/// grad F(p); p must lie in the interior of dom(F).
Vector gradient(const GeneratorSpec& gen, const Vector& p);

/// (grad F)^{-1}(u). Throws SingularMatrix for non-invertible quadratics
/// and DomainError when u is outside the gradient range.
Vector dual_map_inverse(const GeneratorSpec& gen, const Vector& u);

/// Fenchel conjugate F*(u).
double conjugate_value(const GeneratorSpec& gen, const Vector& u);

/// B_{F*}(alpha || beta), used by the duality and Fenchel-Bregman checks.
double conjugate_divergence(const GeneratorSpec& gen, const Vector& alpha,
                            const Vector& beta);

namespace detail {
/// Like gradient(), but steep separable kinds return -infinity in
/// components where p_i = 0 instead of throwing. Centroids of boundary
/// points are pinned to 0 through the dual map this way.
Vector extended_gradient(const GeneratorSpec& gen, const Vector& p);

/// Componentwise convex combination of dual points that propagates the
/// -infinity components produced by extended_gradient.
Vector dual_combination(const Matrix& dual_points, const Vector& lambdas);
}  // namespace detail

}  // namespace coherence

#endif  // COHERENCE_GENERATORS_HPP_

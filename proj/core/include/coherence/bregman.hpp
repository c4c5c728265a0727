#ifndef COHERENCE_BREGMAN_HPP_
#define COHERENCE_BREGMAN_HPP_

#include "coherence/convex_sets.hpp"
#include "coherence/generators.hpp"
#include "coherence/types.hpp"

namespace coherence {

/// B_F(p || q) = F(p) - F(q) - <grad F(q), p - q>. p may sit on the boundary
/// of the closed domain; q must be interior. Steep generators return
/// +infinity when q has a zero component where p does not.
double divergence(const GeneratorSpec& gen, const Vector& p, const Vector& q);

/// E_x[ B_F(a(x) || b(x)) ] under the prompt distribution, exact weighted
/// sum over the finite prompt set.
double expected_divergence(const GeneratorSpec& gen,
                           const PromptDistribution& dist, const Matrix& a,
                           const Matrix& b);

/// Same weighted sum with raw nonnegative weights (empirical use).
double weighted_divergence(const GeneratorSpec& gen, const Vector& weights,
                           const Matrix& a, const Matrix& b);

/// B(p||r) + B(r||q) - B(p||q) - <grad F(q) - grad F(r), p - r>;
/// identically zero in exact arithmetic.
double three_point_residual(const GeneratorSpec& gen, const Vector& p,
                            const Vector& r, const Vector& q);

/// Right Bregman centroid: (grad F)^{-1}( sum_k lambda_k grad F(q_k) ).
/// Rows of `points` are the q_k. Zero components under steep generators pin
/// the corresponding centroid component to 0.
Vector centroid(const GeneratorSpec& gen, const Vector& lambdas,
                const Matrix& points);

struct CentroidDecomposition {
  Vector centroid;
  Vector projected;
  double min_value = 0.0;  // min over the set of sum_k lambda_k B(. || q_k)
};

/// Minimum of the weighted divergence sum over a (single-prompt) convex set,
/// decomposed as conjugate terms plus the projection divergence. The internal
/// identity is verified to 1e-9.
CentroidDecomposition centroid_decomposition(const GeneratorSpec& gen,
                                             const Vector& lambdas,
                                             const Matrix& points,
                                             const ConvexModelSet& set);

/// B_F(u||v) + B_{F*}(alpha || grad F(v)) - <u - v, alpha - grad F(v)>;
/// nonnegative by the Fenchel-Bregman inequality.
double fenchel_bregman_gap(const GeneratorSpec& gen, const Vector& u,
                           const Vector& v, const Vector& alpha);

/// | B_F(p||q) - B_{F*}(grad F(q) || grad F(p)) |.
double duality_residual(const GeneratorSpec& gen, const Vector& p,
                        const Vector& q);

}  // namespace coherence

#endif  // COHERENCE_BREGMAN_HPP_

#ifndef COHERENCE_CONVEX_SETS_HPP_
#define COHERENCE_CONVEX_SETS_HPP_

#include <limits>
#include <optional>
#include <vector>

#include "coherence/types.hpp"

namespace coherence {

enum class BaseSet { FullSimplexProduct, UnitCubeProduct };

/// One affine equality over table entries: <coeffs, pi> = rhs.
struct AffineConstraint {
  Matrix coeffs;  // same shape as the model table
  double rhs = 0.0;
};

struct CoordinateCap {
  Eigen::Index prompt = 0;
  Eigen::Index outcome = 0;
  double upper = 1.0;
};

/// Declarative description of the model class Pi: a base product set with
/// optional caps, affine equalities and block (coherence) constraints.
/// The sphere flag marks the non-convex per-prompt ||p||^2 = 1 set, which
/// only the dedicated kernel-example solver accepts.
struct ConvexModelSet {
  BaseSet base = BaseSet::FullSimplexProduct;
  Eigen::Index prompts = 0;
  Eigen::Index outcomes = 0;
  std::vector<CoordinateCap> coordinate_caps;
  std::vector<AffineConstraint> affine_rows;
  std::optional<BlockPartition> block_partition;
  bool sphere = false;

  static ConvexModelSet simplex_product(Eigen::Index n, Eigen::Index d);
  static ConvexModelSet cube_product(Eigen::Index n, Eigen::Index d);

  ConvexModelSet& with_cap(Eigen::Index x, Eigen::Index y, double upper);
  ConvexModelSet& with_affine(Matrix coeffs, double rhs);
  ConvexModelSet& with_blocks(BlockPartition blocks);

  bool convex() const { return !sphere; }
  bool has_affine() const { return !affine_rows.empty(); }
  void validate() const;
};

/// Block-folded view of a set: one representative row per block, caps
/// tightened to the blockwise minimum and affine coefficients summed over
/// block members. Block constraints become exact instead of iterative.
struct ReducedSet {
  BaseSet base = BaseSet::FullSimplexProduct;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<std::vector<Eigen::Index>> members;  // prompts per reduced row
  std::vector<Eigen::Index> row_of_prompt;
  Matrix cap;                                      // upper bounds, default 1
  std::vector<AffineConstraint> affine;            // on the reduced table

  Matrix expand(const Matrix& reduced) const;
  Matrix reduce_mean(const Matrix& full) const;  // blockwise arithmetic mean
};

ReducedSet reduce(const ConvexModelSet& set);

bool contains(const ConvexModelSet& set, const Matrix& table, double tol);

/// Nearest point in L2, computed in the reduced space (blocks are folded
/// exactly). Base-with-caps projections are exact per row; affine rows are
/// handled by ascent on the smooth concave dual over their multipliers with
/// a Newton polish. Throws Infeasible when the affine system has no
/// feasible point within the base polytope.
Matrix euclidean_project(const ConvexModelSet& set, const Matrix& table);

/// A feasible point, interior where the geometry allows one.
Matrix feasible_point(const ConvexModelSet& set);

/// Exact Euclidean projection of a vector onto {sum z = 1, 0 <= z <= upper}.
Vector project_capped_simplex(const Vector& z, const Vector& upper);

/// Linear minimization oracle over one reduced row's polytope
/// (simplex-with-caps or capped cube): argmin <g, q>.
Vector row_linear_minimizer(BaseSet base, const Vector& g, const Vector& upper);

/// Merge two partitions of {0..n-1} into the finest common coarsening.
BlockPartition merge_partitions(Eigen::Index n, const BlockPartition& a,
                                const BlockPartition& b);

}  // namespace coherence

#endif  // COHERENCE_CONVEX_SETS_HPP_

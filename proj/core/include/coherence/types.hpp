#ifndef COHERENCE_TYPES_HPP_
#define COHERENCE_TYPES_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "coherence/errors.hpp"

namespace coherence {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Compensated (Kahan) sum; divergence identities are asserted at 1e-10,
/// so row sums and expectations avoid plain accumulation.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double kahan_total(const Vector& v) {
  KahanSum s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s.add(v[i]);
  return s.value();
}

/// Distribution over the finite prompt set X. Full support is required.
struct PromptDistribution {
  Vector weights;

  explicit PromptDistribution(Vector w) : weights(std::move(w)) { validate(); }

  static PromptDistribution uniform(Eigen::Index n) {
    return PromptDistribution(Vector::Constant(n, 1.0 / static_cast<double>(n)));
  }

  Eigen::Index size() const { return weights.size(); }
  double operator[](Eigen::Index x) const { return weights[x]; }

  void validate() const {
    if (weights.size() == 0) throw DomainError("PromptDistribution: empty");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
      if (!(weights[i] > 0.0))
        throw DomainError("PromptDistribution: weight must be strictly positive");
    if (std::abs(kahan_total(weights) - 1.0) > 1e-12)
      throw DomainError("PromptDistribution: weights must sum to 1");
  }
};

/// Row-stochastic n-by-d table; row x is the outcome distribution pi(x).
struct ConditionalModel {
  Matrix table;

  explicit ConditionalModel(Matrix t) : table(std::move(t)) { validate(); }

  Eigen::Index prompts() const { return table.rows(); }
  Eigen::Index outcomes() const { return table.cols(); }
  Vector row(Eigen::Index x) const { return table.row(x).transpose(); }

  void validate() const {
    for (Eigen::Index x = 0; x < table.rows(); ++x) {
      KahanSum s;
      for (Eigen::Index y = 0; y < table.cols(); ++y) {
        if (table(x, y) < 0.0)
          throw DomainError("ConditionalModel: negative entry");
        s.add(table(x, y));
      }
      if (std::abs(s.value() - 1.0) > 1e-12)
        throw DomainError("ConditionalModel: row does not sum to 1");
    }
  }
};

/// Nonnegative n-by-d table; holds first-step projections and other
/// unnormalized models.
struct UnnormalizedModel {
  Matrix table;

  explicit UnnormalizedModel(Matrix t) : table(std::move(t)) { validate(); }

  Eigen::Index prompts() const { return table.rows(); }
  Eigen::Index outcomes() const { return table.cols(); }
  Vector row(Eigen::Index x) const { return table.row(x).transpose(); }

  void validate() const {
    if ((table.array() < 0.0).any())
      throw DomainError("UnnormalizedModel: negative entry");
  }
};

/// Finite-orbit permutation of prompts. Involutions get closed-form
/// two-point orbit weights; general permutations fall back to orbit-wide
/// weighted centroids.
struct InvarianceMap {
  std::vector<Eigen::Index> perm;
  bool involution_flag = false;

  explicit InvarianceMap(std::vector<Eigen::Index> p) : perm(std::move(p)) {
    validate();
    involution_flag = true;
    for (Eigen::Index x = 0; x < size(); ++x)
      if (perm[static_cast<std::size_t>(perm[static_cast<std::size_t>(x)])] != x)
        involution_flag = false;
  }

  static InvarianceMap identity(Eigen::Index n) {
    std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    return InvarianceMap(std::move(p));
  }

  /// Involution swapping a<->b, identity elsewhere.
  static InvarianceMap swap(Eigen::Index n, Eigen::Index a, Eigen::Index b) {
    auto m = identity(n);
    m.perm[static_cast<std::size_t>(a)] = b;
    m.perm[static_cast<std::size_t>(b)] = a;
    m.involution_flag = true;
    return m;
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(perm.size()); }
  Eigen::Index operator()(Eigen::Index x) const {
    return perm[static_cast<std::size_t>(x)];
  }

  void validate() const {
    std::vector<bool> seen(perm.size(), false);
    for (auto v : perm) {
      if (v < 0 || v >= size() || seen[static_cast<std::size_t>(v)])
        throw DomainError("InvarianceMap: not a permutation");
      seen[static_cast<std::size_t>(v)] = true;
    }
  }
};

/// Cycle decomposition of an invariance map.
struct OrbitPartition {
  std::vector<std::vector<Eigen::Index>> orbits;
  std::vector<Eigen::Index> orbit_of;

  Eigen::Index count() const { return static_cast<Eigen::Index>(orbits.size()); }
};

/// A general partition of prompts (level-set coherence blocks).
struct BlockPartition {
  std::vector<std::vector<Eigen::Index>> blocks;

  BlockPartition() = default;
  explicit BlockPartition(std::vector<std::vector<Eigen::Index>> b)
      : blocks(std::move(b)) {}

  Eigen::Index count() const { return static_cast<Eigen::Index>(blocks.size()); }

  /// block id per prompt; throws if blocks do not partition {0..n-1}.
  std::vector<Eigen::Index> block_of(Eigen::Index n) const {
    std::vector<Eigen::Index> id(static_cast<std::size_t>(n), -1);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (auto x : blocks[b]) {
        if (x < 0 || x >= n || id[static_cast<std::size_t>(x)] != -1)
          throw DomainError("BlockPartition: not a partition");
        id[static_cast<std::size_t>(x)] = static_cast<Eigen::Index>(b);
      }
    for (auto v : id)
      if (v == -1) throw DomainError("BlockPartition: uncovered prompt");
    return id;
  }
};

}  // namespace coherence

#endif  // COHERENCE_TYPES_HPP_

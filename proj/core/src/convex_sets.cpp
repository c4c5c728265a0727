#include "coherence/convex_sets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace coherence {


ConvexModelSet ConvexModelSet::simplex_product(Eigen::Index n, Eigen::Index d) {
  ConvexModelSet s;
  s.base = BaseSet::FullSimplexProduct;
  s.prompts = n;
  s.outcomes = d;
  return s;
}

ConvexModelSet ConvexModelSet::cube_product(Eigen::Index n, Eigen::Index d) {
  ConvexModelSet s;
  s.base = BaseSet::UnitCubeProduct;
  s.prompts = n;
  s.outcomes = d;
  return s;
}

ConvexModelSet& ConvexModelSet::with_cap(Eigen::Index x, Eigen::Index y,
                                         double upper) {
  coordinate_caps.push_back({x, y, upper});
  validate();
  return *this;
}

ConvexModelSet& ConvexModelSet::with_affine(Matrix coeffs, double rhs) {
  affine_rows.push_back({std::move(coeffs), rhs});
  validate();
  return *this;
}

ConvexModelSet& ConvexModelSet::with_blocks(BlockPartition blocks) {
  block_partition = std::move(blocks);
  validate();
  return *this;
}

void ConvexModelSet::validate() const {
  for (const auto& c : coordinate_caps) {
    if (c.prompt < 0 || c.prompt >= prompts || c.outcome < 0 ||
        c.outcome >= outcomes)
      throw DomainError("ConvexModelSet: cap index out of range");
    if (c.upper < 0.0 || c.upper > 1.0)
      throw DomainError("ConvexModelSet: cap must lie in [0, 1]");
  }
  for (const auto& a : affine_rows)
    if (a.coeffs.rows() != prompts || a.coeffs.cols() != outcomes)
      throw DomainError("ConvexModelSet: affine coefficient shape mismatch");
  if (block_partition) block_partition->block_of(prompts);
}

Matrix ReducedSet::expand(const Matrix& reduced) const {
  Matrix full(row_of_prompt.size(), cols);
  for (std::size_t x = 0; x < row_of_prompt.size(); ++x)
    full.row(static_cast<Eigen::Index>(x)) = reduced.row(row_of_prompt[x]);
  return full;
}

Matrix ReducedSet::reduce_mean(const Matrix& full) const {
  Matrix r = Matrix::Zero(rows, cols);
  for (Eigen::Index b = 0; b < rows; ++b) {
    for (auto x : members[static_cast<std::size_t>(b)]) r.row(b) += full.row(x);
    r.row(b) /= static_cast<double>(members[static_cast<std::size_t>(b)].size());
  }
  return r;
}

ReducedSet reduce(const ConvexModelSet& set) {
  ReducedSet r;
  r.base = set.base;
  r.cols = set.outcomes;
  if (set.block_partition) {
    auto id = set.block_partition->block_of(set.prompts);
    r.rows = set.block_partition->count();
    r.members.assign(static_cast<std::size_t>(r.rows), {});
    r.row_of_prompt.resize(static_cast<std::size_t>(set.prompts));
    for (Eigen::Index x = 0; x < set.prompts; ++x) {
      r.members[static_cast<std::size_t>(id[static_cast<std::size_t>(x)])]
          .push_back(x);
      r.row_of_prompt[static_cast<std::size_t>(x)] =
          id[static_cast<std::size_t>(x)];
    }
  } else {
    r.rows = set.prompts;
    r.members.assign(static_cast<std::size_t>(set.prompts), {});
    r.row_of_prompt.resize(static_cast<std::size_t>(set.prompts));
    for (Eigen::Index x = 0; x < set.prompts; ++x) {
      r.members[static_cast<std::size_t>(x)] = {x};
      r.row_of_prompt[static_cast<std::size_t>(x)] = x;
    }
  }
  r.cap = Matrix::Constant(r.rows, r.cols, 1.0);
  for (const auto& c : set.coordinate_caps) {
    Eigen::Index b = r.row_of_prompt[static_cast<std::size_t>(c.prompt)];
    r.cap(b, c.outcome) = std::min(r.cap(b, c.outcome), c.upper);
  }
  for (const auto& a : set.affine_rows) {
    AffineConstraint folded;
    folded.coeffs = Matrix::Zero(r.rows, r.cols);
    folded.rhs = a.rhs;
    for (Eigen::Index x = 0; x < set.prompts; ++x)
      folded.coeffs.row(r.row_of_prompt[static_cast<std::size_t>(x)]) +=
          a.coeffs.row(x);
    r.affine.push_back(std::move(folded));
  }
  return r;
}

bool contains(const ConvexModelSet& set, const Matrix& table, double tol) {
  if (table.rows() != set.prompts || table.cols() != set.outcomes)
    throw DomainError("contains: shape mismatch");
  if ((table.array() < -tol).any()) return false;
  for (Eigen::Index x = 0; x < table.rows(); ++x) {
    if (set.base == BaseSet::FullSimplexProduct) {
      if (std::abs(kahan_total(table.row(x).transpose()) - 1.0) > tol)
        return false;
    } else {
      if ((table.row(x).array() > 1.0 + tol).any()) return false;
    }
    if (set.sphere &&
        std::abs(table.row(x).squaredNorm() - 1.0) > tol)
      return false;
  }
  for (const auto& c : set.coordinate_caps)
    if (table(c.prompt, c.outcome) > c.upper + tol) return false;
  for (const auto& a : set.affine_rows)
    if (std::abs((a.coeffs.array() * table.array()).sum() - a.rhs) > tol)
      return false;
  if (set.block_partition) {
    for (const auto& block : set.block_partition->blocks)
      for (std::size_t i = 1; i < block.size(); ++i)
        if ((table.row(block[i]) - table.row(block[0]))
                .cwiseAbs()
                .maxCoeff() > tol)
          return false;
  }
  return true;
}

Vector project_capped_simplex(const Vector& z, const Vector& upper) {
  // clip(z - tau, 0, upper) summed is piecewise linear and nonincreasing in
  // tau, with breakpoints at z_j and z_j - upper_j: walk the sorted
  // breakpoints and solve the crossing segment exactly.
  const Eigen::Index d = z.size();
  if (upper.sum() < 1.0 - 1e-12)
    throw Infeasible("capped simplex: caps sum below 1");
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(2 * d));
  for (Eigen::Index j = 0; j < d; ++j) {
    knots.push_back(z[j]);
    knots.push_back(z[j] - upper[j]);
  }
  std::sort(knots.begin(), knots.end());
  auto clipped_sum = [&](double tau) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j)
      s += std::clamp(z[j] - tau, 0.0, upper[j]);
    return s;
  };
  // Find the segment [knots[k], knots[k+1]] where the sum crosses 1.
  double tau = knots.front() - 1.0;  // sum = cap total >= 1 here
  double lo = tau, hi = knots.back();
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (clipped_sum(knots[k]) >= 1.0)
      lo = knots[k];
    else {
      hi = knots[k];
      break;
    }
  }
  // On the crossing segment the sum is linear in tau with slope equal to
  // minus the number of free coordinates.
  const double mid = 0.5 * (lo + hi);
  double free_count = 0.0;
  double sum_mid = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double v = z[j] - mid;
    if (v > 0.0 && v < upper[j]) free_count += 1.0;
    sum_mid += std::clamp(v, 0.0, upper[j]);
  }
  tau = free_count > 0.0 ? mid + (sum_mid - 1.0) / free_count : lo;
  Vector q(d);
  for (Eigen::Index j = 0; j < d; ++j)
    q[j] = std::clamp(z[j] - tau, 0.0, upper[j]);
  const double err = q.sum() - 1.0;
  if (err != 0.0 && free_count > 0.0) {
    const double shift = err / free_count;
    for (Eigen::Index j = 0; j < d; ++j)
      if (q[j] > 0.0 && q[j] < upper[j]) q[j] -= shift;
  }
  return q;
}

Vector row_linear_minimizer(BaseSet base, const Vector& g, const Vector& upper) {
  const Eigen::Index d = g.size();
  Vector q = Vector::Zero(d);
  if (base == BaseSet::UnitCubeProduct) {
    for (Eigen::Index j = 0; j < d; ++j) q[j] = g[j] < 0.0 ? upper[j] : 0.0;
    return q;
  }
  // Simplex with caps: fill mass greedily in increasing gradient order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return g[a] < g[b]; });
  double remaining = 1.0;
  for (auto j : order) {
    const double take = std::min(remaining, upper[j]);
    q[j] = take;
    remaining -= take;
    if (remaining <= 0.0) break;
  }
  if (remaining > 1e-12) throw Infeasible("row LMO: caps sum below 1");
  return q;
}

namespace {

// Projection onto the base-with-caps atom, rowwise exact.
Matrix project_base_atom(const ReducedSet& r, const Matrix& z) {
  Matrix out(r.rows, r.cols);
  for (Eigen::Index b = 0; b < r.rows; ++b) {
    if (r.base == BaseSet::FullSimplexProduct) {
      out.row(b) =
          project_capped_simplex(z.row(b).transpose(), r.cap.row(b).transpose())
              .transpose();
    } else {
      for (Eigen::Index j = 0; j < r.cols; ++j)
        out(b, j) = std::clamp(z(b, j), 0.0, r.cap(b, j));
    }
  }
  return out;
}

}  // namespace

Matrix euclidean_project(const ConvexModelSet& set, const Matrix& table) {
  if (set.sphere)
    throw DomainError("euclidean_project: sphere sets are not convex");
  if (table.rows() != set.prompts || table.cols() != set.outcomes)
    throw DomainError("euclidean_project: shape mismatch");
  ReducedSet r = reduce(set);
  Matrix z0 = r.reduce_mean(table);

  if (r.affine.empty()) return r.expand(project_base_atom(r, z0));

  // Strong convexity of the primal makes the dual over the affine
  // multipliers smooth and concave: z*(nu) = P_base(z0 - sum nu_k C_k) and
  // grad g(nu)_k = <C_k, z*(nu)> - rhs_k. Ascent with backtracking converges
  // where plain alternating projections can stall, and the output respects
  // the bounds exactly.
  const Eigen::Index m = static_cast<Eigen::Index>(r.affine.size());
  Vector nu = Vector::Zero(m);
  auto primal_at = [&](const Vector& mult) {
    Matrix shifted = z0;
    for (Eigen::Index k = 0; k < m; ++k)
      shifted -= mult[k] * r.affine[static_cast<std::size_t>(k)].coeffs;
    return project_base_atom(r, shifted);
  };
  auto dual_grad = [&](const Matrix& z) {
    Vector g(m);
    for (Eigen::Index k = 0; k < m; ++k)
      g[k] = (r.affine[static_cast<std::size_t>(k)].coeffs.array() * z.array())
                 .sum() -
             r.affine[static_cast<std::size_t>(k)].rhs;
    return g;
  };
  auto dual_value = [&](const Vector& mult, const Matrix& z) {
    double v = 0.5 * (z - z0).squaredNorm();
    for (Eigen::Index k = 0; k < m; ++k)
      v += mult[k] *
           ((r.affine[static_cast<std::size_t>(k)].coeffs.array() * z.array())
                .sum() -
            r.affine[static_cast<std::size_t>(k)].rhs);
    return v;
  };

  Matrix z = primal_at(nu);
  Vector grad = dual_grad(z);
  double gval = dual_value(nu, z);
  double step = 1.0;
  // Short ascent phase to land near the right active face; the Newton
  // polish below supplies the precision.
  for (int it = 0; it < 400 && grad.cwiseAbs().maxCoeff() > 1e-10; ++it) {
    bool accepted = false;
    for (int h = 0; h < 60; ++h) {
      const Vector cand = nu + step * grad;
      const Matrix zc = primal_at(cand);
      const double gc = dual_value(cand, zc);
      if (gc >= gval + 1e-18) {
        nu = cand;
        z = zc;
        gval = gc;
        grad = dual_grad(z);
        step *= 1.6;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  // On the identified active face the dual gradient is affine in nu, so a
  // finite-difference Newton step lands on the exact multipliers.
  for (int round = 0;
       round < 24 && grad.cwiseAbs().maxCoeff() > 1e-13; ++round) {
    Matrix jac(m, m);
    const double h = std::max(1e-7, 1e-4 * grad.cwiseAbs().maxCoeff());
    for (Eigen::Index l = 0; l < m; ++l) {
      Vector bumped = nu;
      bumped[l] += h;
      jac.col(l) = (dual_grad(primal_at(bumped)) - grad) / h;
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(jac);
    const Vector delta = cod.solve(-grad);
    const Vector cand = nu + delta;
    const Matrix zc = primal_at(cand);
    const Vector gc = dual_grad(zc);
    if (gc.cwiseAbs().maxCoeff() < grad.cwiseAbs().maxCoeff()) {
      nu = cand;
      z = zc;
      grad = gc;
    } else {
      break;
    }
  }
  if (grad.cwiseAbs().maxCoeff() > 1e-8)
    throw Infeasible("euclidean_project: affine system appears inconsistent");
  return r.expand(z);
}

Matrix feasible_point(const ConvexModelSet& set) {
  if (set.sphere) {
    Matrix t = Matrix::Zero(set.prompts, set.outcomes);
    t.col(0).setOnes();
    return t;
  }
  const double fill = set.base == BaseSet::FullSimplexProduct
                          ? 1.0 / static_cast<double>(set.outcomes)
                          : 0.5;
  Matrix start = Matrix::Constant(set.prompts, set.outcomes, fill);
  Matrix z;
  try {
    z = euclidean_project(set, start);
  } catch (const Infeasible&) {
    throw Infeasible("feasible_point: set appears empty");
  }
  if (!contains(set, z, 1e-9))
    throw Infeasible("feasible_point: set appears empty");
  return z;
}

BlockPartition merge_partitions(Eigen::Index n, const BlockPartition& a,
                                const BlockPartition& b) {
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<Eigen::Index(Eigen::Index)> find =
      [&](Eigen::Index x) -> Eigen::Index {
    while (parent[static_cast<std::size_t>(x)] != x)
      x = parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  auto unite = [&](Eigen::Index x, Eigen::Index y) {
    parent[static_cast<std::size_t>(find(x))] = find(y);
  };
  for (const auto* part : {&a, &b})
    for (const auto& block : part->blocks)
      for (std::size_t i = 1; i < block.size(); ++i) unite(block[0], block[i]);
  std::vector<std::vector<Eigen::Index>> groups;
  std::vector<Eigen::Index> group_of(static_cast<std::size_t>(n), -1);
  for (Eigen::Index x = 0; x < n; ++x) {
    Eigen::Index root = find(x);
    if (group_of[static_cast<std::size_t>(root)] == -1) {
      group_of[static_cast<std::size_t>(root)] =
          static_cast<Eigen::Index>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(group_of[static_cast<std::size_t>(root)])]
        .push_back(x);
  }
  return BlockPartition(std::move(groups));
}

}  // namespace coherence

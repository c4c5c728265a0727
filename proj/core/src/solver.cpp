#include "coherence/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "coherence/rng.hpp"

namespace coherence {

namespace {

const double kInf = std::numeric_limits<double>::infinity();
const double kNegInf = -std::numeric_limits<double>::infinity();

// Componentwise scalar calculus for separable generators.
struct SeparableOps {
  const GeneratorSpec* gen;
  Vector diag;  // DiagonalQuadratic weights, empty otherwise

  explicit SeparableOps(const GeneratorSpec& g) : gen(&g) {
    if (g.kind == GeneratorKind::DiagonalQuadratic) diag = g.matrix->diagonal();
  }

  double d1(Eigen::Index j, double q) const {
    switch (gen->kind) {
      case GeneratorKind::SquaredEuclidean: return q;
      case GeneratorKind::DiagonalQuadratic: return diag[j] * q;
      case GeneratorKind::NegativeEntropy:
        return q > 0.0 ? 1.0 + std::log(q) : kNegInf;
      case GeneratorKind::NegativeLog:
        return q > 0.0 ? -1.0 / q : kNegInf;
      default: throw DomainError("SeparableOps: non-separable kind");
    }
  }

  double d2(Eigen::Index j, double q) const {
    switch (gen->kind) {
      case GeneratorKind::SquaredEuclidean: return 1.0;
      case GeneratorKind::DiagonalQuadratic: return diag[j];
      case GeneratorKind::NegativeEntropy: return 1.0 / q;
      case GeneratorKind::NegativeLog: return 1.0 / (q * q);
      default: throw DomainError("SeparableOps: non-separable kind");
    }
  }

  // (f_j')^{-1}(u); maps -inf to 0 and out-of-range u to +inf so callers
  // can clamp against caps.
  double inv(Eigen::Index j, double u) const {
    switch (gen->kind) {
      case GeneratorKind::SquaredEuclidean: return u;
      case GeneratorKind::DiagonalQuadratic: return u / diag[j];
      case GeneratorKind::NegativeEntropy:
        return u == kNegInf ? 0.0 : std::exp(std::min(u, 60.0) - 1.0);
      case GeneratorKind::NegativeLog:
        if (u == kNegInf) return 0.0;
        return u < 0.0 ? -1.0 / u : kInf;
      default: throw DomainError("SeparableOps: non-separable kind");
    }
  }
};

struct ReducedProblem {
  ReducedSet rset;
  Vector block_weight;          // W_b
  Matrix dual_target;           // s_b = sum_x w_x gradF(p0_x), may hold -inf
  std::vector<std::vector<std::pair<Eigen::Index, double>>> sources;
  // sources[b] = (prompt, weight) members with positive weight
  Matrix source;                // original table
  Vector weights;               // original per-prompt weights
  std::vector<std::vector<bool>> pinned;  // steep zero-pinning per (b, j)
  std::vector<bool> untouched;  // zero-mass blocks, solved with uniform weights
};

ReducedProblem build_reduced(const GeneratorSpec& gen, const Vector& weights,
                             const ConvexModelSet& set, const Matrix& source) {
  ReducedProblem p;
  p.rset = reduce(set);
  p.source = source;
  p.weights = weights;
  const Eigen::Index R = p.rset.rows;
  const Eigen::Index d = p.rset.cols;
  p.block_weight = Vector::Zero(R);
  p.dual_target = Matrix::Zero(R, d);
  p.sources.resize(static_cast<std::size_t>(R));
  p.pinned.assign(static_cast<std::size_t>(R),
                  std::vector<bool>(static_cast<std::size_t>(d), false));
  for (Eigen::Index b = 0; b < R; ++b) {
    bool any_weight = false;
    Vector s = Vector::Zero(d);
    for (auto x : p.rset.members[static_cast<std::size_t>(b)]) {
      const double w = weights[x];
      if (w <= 0.0) continue;
      any_weight = true;
      p.block_weight[b] += w;
      p.sources[static_cast<std::size_t>(b)].push_back({x, w});
      const Vector g = detail::extended_gradient(gen, source.row(x).transpose());
      for (Eigen::Index j = 0; j < d; ++j) {
        if (g[j] == kNegInf)
          p.pinned[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)] =
              true;
        else
          s[j] += w * g[j];
      }
    }
    for (Eigen::Index j = 0; j < d; ++j)
      p.dual_target(b, j) =
          p.pinned[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)]
              ? kNegInf
              : s[j];
    p.untouched.push_back(!any_weight);
    if (!any_weight) {
      // Zero-mass block: the objective does not see it, so it is solved as
      // the uniform-weight projection of the source restricted to the block.
      const double m = static_cast<double>(
          p.rset.members[static_cast<std::size_t>(b)].size());
      Vector su = Vector::Zero(d);
      for (auto x : p.rset.members[static_cast<std::size_t>(b)]) {
        p.sources[static_cast<std::size_t>(b)].push_back({x, 1.0 / m});
        const Vector g =
            detail::extended_gradient(gen, source.row(x).transpose());
        for (Eigen::Index j = 0; j < d; ++j) {
          if (g[j] == kNegInf)
            p.pinned[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)] =
                true;
          else
            su[j] += g[j] / m;
        }
      }
      for (Eigen::Index j = 0; j < d; ++j)
        p.dual_target(b, j) =
            p.pinned[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)]
                ? kNegInf
                : su[j];
      p.block_weight[b] = 1.0;
    }
  }
  return p;
}

double reduced_objective(const GeneratorSpec& gen, const ReducedProblem& p,
                         const Matrix& z) {
  KahanSum s;
  for (Eigen::Index b = 0; b < p.rset.rows; ++b)
    for (const auto& [x, w] : p.sources[static_cast<std::size_t>(b)]) {
      double dv;
      try {
        dv = divergence(gen, z.row(b).transpose(), p.source.row(x).transpose());
      } catch (const DomainError&) {
        return kInf;  // boundary iterate outside the steep domain
      }
      if (dv == kInf) return kInf;
      s.add(w * dv);
    }
  return s.value();
}

// Gradient of the reduced objective; pinned components are reported as 0
// (the solution is 0 there and feasible moves off the pin cost +inf).
Matrix reduced_gradient(const GeneratorSpec& gen, const ReducedProblem& p,
                        const Matrix& z) {
  Matrix g = Matrix::Zero(p.rset.rows, p.rset.cols);
  if (!gen.separable()) {
    for (Eigen::Index b = 0; b < p.rset.rows; ++b) {
      const Vector gz = gradient(gen, z.row(b).transpose());
      for (Eigen::Index j = 0; j < p.rset.cols; ++j)
        g(b, j) = p.block_weight[b] * gz[j] - p.dual_target(b, j);
    }
    return g;
  }
  SeparableOps ops(gen);
  for (Eigen::Index b = 0; b < p.rset.rows; ++b)
    for (Eigen::Index j = 0; j < p.rset.cols; ++j) {
      if (p.pinned[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)])
        continue;
      const double q = gen.steep() ? std::max(z(b, j), 1e-300) : z(b, j);
      g(b, j) = p.block_weight[b] * ops.d1(j, q) - p.dual_target(b, j);
    }
  return g;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ReducedNewton: return "reduced_newton";
    case Algorithm::MirrorDescent: return "mirror_descent";
    case Algorithm::FrankWolfe: return "frank_wolfe";
  }
  return "unknown";
}

namespace detail {

Vector project_row_dual(const GeneratorSpec& gen, const Vector& dual_target,
                        BaseSet base, const Vector& cap) {
  SeparableOps ops(gen);
  const Eigen::Index d = dual_target.size();
  Vector q(d);
  if (base == BaseSet::UnitCubeProduct) {
    for (Eigen::Index j = 0; j < d; ++j)
      q[j] = std::clamp(ops.inv(j, dual_target[j]), 0.0, cap[j]);
    return q;
  }

  double capsum = 0.0;
  for (Eigen::Index j = 0; j < d; ++j)
    capsum += dual_target[j] == kNegInf ? 0.0 : cap[j];
  if (capsum < 1.0 - 1e-12)
    throw Infeasible("project_row_dual: caps below simplex mass");

  auto value_at = [&](double nu, Eigen::Index j) {
    if (dual_target[j] == kNegInf) return 0.0;
    return std::clamp(ops.inv(j, dual_target[j] - nu), 0.0, cap[j]);
  };
  auto sum_at = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) s += value_at(nu, j);
    return s;
  };

  double lo = -1.0, hi = 1.0;
  for (int k = 0; k < 200 && sum_at(lo) < 1.0; ++k) lo *= 2.0;
  for (int k = 0; k < 200 && sum_at(hi) > 1.0; ++k) hi *= 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (sum_at(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  double nu = 0.5 * (lo + hi);

  // Newton/closed-form polish on the free set.
  for (int round = 0; round < 6; ++round) {
    std::vector<Eigen::Index> free;
    double fixed_mass = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (dual_target[j] == kNegInf) continue;
      const double raw = ops.inv(j, dual_target[j] - nu);
      if (raw >= cap[j])
        fixed_mass += cap[j];
      else if (raw > 0.0)
        free.push_back(j);
    }
    const double target = 1.0 - fixed_mass;
    if (free.empty()) break;
    double nu_new = nu;
    switch (gen.kind) {
      case GeneratorKind::NegativeEntropy: {
        KahanSum s;
        for (auto j : free) s.add(std::exp(dual_target[j] - 1.0));
        if (target <= 0.0 || s.value() <= 0.0) { round = 6; break; }
        nu_new = std::log(s.value() / target);
        break;
      }
      case GeneratorKind::SquaredEuclidean:
      case GeneratorKind::DiagonalQuadratic: {
        double num = -target, den = 0.0;
        for (auto j : free) {
          const double a =
              gen.kind == GeneratorKind::SquaredEuclidean ? 1.0 : ops.diag[j];
          num += dual_target[j] / a;
          den += 1.0 / a;
        }
        nu_new = num / den;
        break;
      }
      case GeneratorKind::NegativeLog: {
        double x = nu;
        for (int it = 0; it < 12; ++it) {
          double h = -target, hp = 0.0;
          for (auto j : free) {
            const double t = dual_target[j] - x;
            if (!(t < 0.0)) { h = kInf; break; }
            h += -1.0 / t;
            hp += -1.0 / (t * t);
          }
          if (h == kInf || hp == 0.0) break;
          const double step = h / hp;
          x -= step;
          if (std::abs(step) < 1e-16 * (1.0 + std::abs(x))) break;
        }
        nu_new = x;
        break;
      }
      default:
        throw DomainError("project_row_dual: non-separable kind");
    }
    if (!std::isfinite(nu_new)) break;
    // Accept the polish only if the free-set classification is unchanged.
    bool consistent = true;
    for (Eigen::Index j = 0; j < d && consistent; ++j) {
      if (dual_target[j] == kNegInf) continue;
      const double raw_old = ops.inv(j, dual_target[j] - nu);
      const double raw_new = ops.inv(j, dual_target[j] - nu_new);
      if ((raw_old >= cap[j]) != (raw_new >= cap[j]) ||
          (raw_old <= 0.0) != (raw_new <= 0.0))
        consistent = false;
    }
    nu = nu_new;
    if (consistent) break;
  }

  for (Eigen::Index j = 0; j < d; ++j) q[j] = value_at(nu, j);
  const double err = q.sum() - 1.0;
  if (std::abs(err) > 1e-13) {
    // Distribute the remainder over strictly free coordinates.
    double free_count = 0.0;
    for (Eigen::Index j = 0; j < d; ++j)
      if (q[j] > 0.0 && q[j] < cap[j]) free_count += 1.0;
    if (free_count > 0.0)
      for (Eigen::Index j = 0; j < d; ++j)
        if (q[j] > 0.0 && q[j] < cap[j]) q[j] -= err / free_count;
  }
  return q;
}

}  // namespace detail

namespace {

// ---------------------------------------------------------------------------
// Joint active-set engine over the flattened reduced table.
//
// Variables: v in R^{R*d} (row-major). Equalities: simplex sums per row
// (simplex base) plus folded affine rows. Bounds: 0 <= v <= cap, with pinned
// or zero-cap coordinates eliminated up front. Subproblems restricted to the
// working set are solved exactly: a linear KKT system for quadratic kinds,
// damped Newton on the equality multipliers for separable kinds.
// ---------------------------------------------------------------------------

struct JointProblem {
  const GeneratorSpec* gen;
  const ReducedProblem* red;
  Eigen::Index R, d, n;          // n = R*d
  std::vector<Vector> eq_rows;   // equality normals
  std::vector<double> eq_rhs;
  Vector lower, upper;           // bounds (fixed coords have lower==upper)
  std::vector<bool> fixed;
  Vector fixed_value;
  Vector w_of_var;               // W_b per variable
  Vector s_of_var;               // dual target per variable (finite part)
  Matrix hess_row;               // quadratic kinds: A (d x d)
  bool use_kkt = false;          // quadratic non-separable path

  Eigen::Index var(Eigen::Index b, Eigen::Index j) const { return b * d + j; }
};

JointProblem make_joint(const GeneratorSpec& gen, const ReducedProblem& red) {
  JointProblem jp;
  jp.gen = &gen;
  jp.red = &red;
  jp.R = red.rset.rows;
  jp.d = red.rset.cols;
  jp.n = jp.R * jp.d;
  jp.lower = Vector::Zero(jp.n);
  jp.upper = Vector::Ones(jp.n);
  jp.fixed.assign(static_cast<std::size_t>(jp.n), false);
  jp.fixed_value = Vector::Zero(jp.n);
  jp.w_of_var = Vector::Zero(jp.n);
  jp.s_of_var = Vector::Zero(jp.n);
  jp.use_kkt = !gen.separable();
  if (jp.use_kkt) jp.hess_row = *gen.matrix;

  for (Eigen::Index b = 0; b < jp.R; ++b)
    for (Eigen::Index j = 0; j < jp.d; ++j) {
      const Eigen::Index v = jp.var(b, j);
      jp.upper[v] = red.rset.cap(b, j);
      jp.w_of_var[v] = red.block_weight[b];
      const double t = red.dual_target(b, j);
      jp.s_of_var[v] = t == kNegInf ? 0.0 : t;
      if (red.pinned[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)] ||
          jp.upper[v] <= 1e-15) {
        jp.fixed[static_cast<std::size_t>(v)] = true;
        jp.fixed_value[v] = 0.0;
      }
    }

  if (red.rset.base == BaseSet::FullSimplexProduct) {
    for (Eigen::Index b = 0; b < jp.R; ++b) {
      Vector row = Vector::Zero(jp.n);
      for (Eigen::Index j = 0; j < jp.d; ++j) row[jp.var(b, j)] = 1.0;
      jp.eq_rows.push_back(std::move(row));
      jp.eq_rhs.push_back(1.0);
    }
  }
  for (const auto& a : red.rset.affine) {
    Vector row = Vector::Zero(jp.n);
    for (Eigen::Index b = 0; b < jp.R; ++b)
      for (Eigen::Index j = 0; j < jp.d; ++j) row[jp.var(b, j)] = a.coeffs(b, j);
    jp.eq_rows.push_back(std::move(row));
    jp.eq_rhs.push_back(a.rhs);
  }
  return jp;
}

// Subproblem: minimize over free-coordinate set with mask (active bounds
// treated as fixed). Returns the stationary point and equality multipliers.
struct EqSolve {
  Vector v;
  Vector lambda;
  bool ok = false;
};

EqSolve solve_equality_quadratic(const JointProblem& jp,
                                 const std::vector<int>& mask,
                                 const Vector& vcur) {
  // Unknowns: free coordinates. Stationarity:
  //   W_b (A z_b)_j - s_bj + (E^T lambda)_j = 0 on free coords.
  std::vector<Eigen::Index> free;
  for (Eigen::Index v = 0; v < jp.n; ++v)
    if (!jp.fixed[static_cast<std::size_t>(v)] && mask[static_cast<std::size_t>(v)] == 0)
      free.push_back(v);
  const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
  const Eigen::Index ne = static_cast<Eigen::Index>(jp.eq_rows.size());
  std::vector<Eigen::Index> pos(static_cast<std::size_t>(jp.n), -1);
  for (Eigen::Index i = 0; i < nf; ++i) pos[static_cast<std::size_t>(free[i])] = i;

  auto bound_value = [&](Eigen::Index v) {
    if (jp.fixed[static_cast<std::size_t>(v)]) return jp.fixed_value[v];
    return mask[static_cast<std::size_t>(v)] < 0 ? jp.lower[v] : jp.upper[v];
  };

  Matrix H = Matrix::Zero(nf, nf);
  Vector g = Vector::Zero(nf);
  for (Eigen::Index b = 0; b < jp.R; ++b) {
    const double W = jp.red->block_weight[b];
    for (Eigen::Index j = 0; j < jp.d; ++j) {
      const Eigen::Index vj = jp.var(b, j);
      if (pos[static_cast<std::size_t>(vj)] < 0) continue;
      const Eigen::Index ij = pos[static_cast<std::size_t>(vj)];
      g[ij] -= jp.s_of_var[vj];
      for (Eigen::Index k = 0; k < jp.d; ++k) {
        const Eigen::Index vk = jp.var(b, k);
        const double h = W * jp.hess_row(j, k);
        if (pos[static_cast<std::size_t>(vk)] >= 0)
          H(ij, pos[static_cast<std::size_t>(vk)]) += h;
        else
          g[ij] += h * bound_value(vk);
      }
      // Linear term of the generator folds into s_of_var already.
    }
  }

  Matrix E = Matrix::Zero(ne, nf);
  Vector rhs = Vector::Zero(ne);
  for (Eigen::Index r = 0; r < ne; ++r) {
    rhs[r] = jp.eq_rhs[static_cast<std::size_t>(r)];
    for (Eigen::Index v = 0; v < jp.n; ++v) {
      const double c = jp.eq_rows[static_cast<std::size_t>(r)][v];
      if (c == 0.0) continue;
      if (pos[static_cast<std::size_t>(v)] >= 0)
        E(r, pos[static_cast<std::size_t>(v)]) = c;
      else
        rhs[r] -= c * bound_value(v);
    }
  }

  Matrix kkt = Matrix::Zero(nf + ne, nf + ne);
  kkt.topLeftCorner(nf, nf) = H;
  kkt.topRightCorner(nf, ne) = E.transpose();
  kkt.bottomLeftCorner(ne, nf) = E;
  Vector b(nf + ne);
  b.head(nf) = -g;
  b.tail(ne) = rhs;

  EqSolve out;
  Eigen::FullPivLU<Matrix> lu(kkt);
  Vector sol;
  if (lu.isInvertible()) {
    sol = lu.solve(b);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
    sol = cod.solve(b);  // min-norm solution on flat optimal faces
    if ((kkt * sol - b).norm() > 1e-8 * (1.0 + b.norm())) return out;
  }
  out.v = Vector(jp.n);
  for (Eigen::Index v = 0; v < jp.n; ++v)
    out.v[v] = pos[static_cast<std::size_t>(v)] >= 0
                   ? sol[pos[static_cast<std::size_t>(v)]]
                   : bound_value(v);
  out.lambda = sol.tail(ne);
  out.ok = true;
  (void)vcur;
  return out;
}

EqSolve solve_equality_separable(const JointProblem& jp,
                                 const std::vector<int>& mask,
                                 const Vector& vcur) {
  SeparableOps ops(*jp.gen);
  std::vector<Eigen::Index> free;
  for (Eigen::Index v = 0; v < jp.n; ++v)
    if (!jp.fixed[static_cast<std::size_t>(v)] &&
        mask[static_cast<std::size_t>(v)] == 0 && jp.w_of_var[v] > 0.0)
      free.push_back(v);
  const Eigen::Index ne = static_cast<Eigen::Index>(jp.eq_rows.size());

  auto bound_value = [&](Eigen::Index v) {
    if (jp.fixed[static_cast<std::size_t>(v)]) return jp.fixed_value[v];
    return mask[static_cast<std::size_t>(v)] < 0 ? jp.lower[v] : jp.upper[v];
  };

  std::vector<bool> is_free(static_cast<std::size_t>(jp.n), false);
  for (auto f : free) is_free[static_cast<std::size_t>(f)] = true;
  Vector rhs = Vector::Zero(ne);
  for (Eigen::Index r = 0; r < ne; ++r) {
    rhs[r] = jp.eq_rhs[static_cast<std::size_t>(r)];
    for (Eigen::Index v = 0; v < jp.n; ++v) {
      const double c = jp.eq_rows[static_cast<std::size_t>(r)][v];
      if (c == 0.0) continue;
      if (!is_free[static_cast<std::size_t>(v)]) rhs[r] -= c * bound_value(v);
    }
  }

  auto coord_of = [&](const Vector& lambda, Eigen::Index v) {
    double u = jp.s_of_var[v];
    for (Eigen::Index r = 0; r < ne; ++r)
      u -= lambda[r] * jp.eq_rows[static_cast<std::size_t>(r)][v];
    const Eigen::Index j = v % jp.d;
    return ops.inv(j, u / jp.w_of_var[v]);
  };
  auto residual = [&](const Vector& lambda, Vector* vals) -> Vector {
    Vector r = -rhs;
    for (auto v : free) {
      const double q = coord_of(lambda, v);
      if (!std::isfinite(q)) return Vector::Constant(ne, kInf);
      if (vals) (*vals)[v] = q;
      for (Eigen::Index e = 0; e < ne; ++e)
        r[e] += jp.eq_rows[static_cast<std::size_t>(e)][v] * q;
    }
    return r;
  };

  Vector lambda = Vector::Zero(ne);
  Vector r = residual(lambda, nullptr);
  double rn = r.cwiseAbs().maxCoeff();
  EqSolve out;
  for (int it = 0; it < 200 && rn > 1e-13; ++it) {
    // J = -E D E^T with D = 1 / (W f'')
    Matrix J = Matrix::Zero(ne, ne);
    for (auto v : free) {
      const double q = coord_of(lambda, v);
      if (!(q > 0.0) && jp.gen->steep()) return out;  // degenerate
      const Eigen::Index j = v % jp.d;
      const double dcoef = 1.0 / (jp.w_of_var[v] * ops.d2(j, std::max(q, 1e-300)));
      for (Eigen::Index e1 = 0; e1 < ne; ++e1) {
        const double c1 = jp.eq_rows[static_cast<std::size_t>(e1)][v];
        if (c1 == 0.0) continue;
        for (Eigen::Index e2 = 0; e2 < ne; ++e2)
          J(e1, e2) += c1 * dcoef * jp.eq_rows[static_cast<std::size_t>(e2)][v];
      }
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(J);
    Vector delta = cod.solve(r);
    double step = 1.0;
    for (int h = 0; h < 60; ++h) {
      Vector cand = lambda + step * delta;
      Vector rc = residual(cand, nullptr);
      const double rcn = rc.cwiseAbs().maxCoeff();
      if (rcn < rn) {
        lambda = cand;
        r = rc;
        rn = rcn;
        break;
      }
      step *= 0.5;
      if (h == 59) return out;  // no progress
    }
  }
  if (rn > 1e-10) return out;

  out.v = Vector(jp.n);
  for (Eigen::Index v = 0; v < jp.n; ++v) out.v[v] = bound_value(v);
  for (auto v : free) out.v[v] = coord_of(lambda, v);
  out.lambda = lambda;
  out.ok = true;
  (void)vcur;
  return out;
}

// Stationarity residual per coordinate, used for bound multipliers.
Vector stationarity(const JointProblem& jp, const Vector& v,
                    const Vector& lambda) {
  Vector rho = Vector::Zero(jp.n);
  const Eigen::Index ne = static_cast<Eigen::Index>(jp.eq_rows.size());
  if (jp.use_kkt) {
    for (Eigen::Index b = 0; b < jp.R; ++b) {
      const double W = jp.red->block_weight[b];
      Vector zb(jp.d);
      for (Eigen::Index j = 0; j < jp.d; ++j) zb[j] = v[jp.var(b, j)];
      const Vector az = jp.hess_row * zb;
      for (Eigen::Index j = 0; j < jp.d; ++j)
        rho[jp.var(b, j)] = W * az[j] - jp.s_of_var[jp.var(b, j)];
    }
  } else {
    SeparableOps ops(*jp.gen);
    for (Eigen::Index vv = 0; vv < jp.n; ++vv) {
      if (jp.fixed[static_cast<std::size_t>(vv)] || jp.w_of_var[vv] == 0.0)
        continue;
      const Eigen::Index j = vv % jp.d;
      const double d1 = ops.d1(j, std::max(v[vv], 1e-300));
      rho[vv] = jp.w_of_var[vv] * d1 - jp.s_of_var[vv];
    }
  }
  for (Eigen::Index r = 0; r < ne; ++r)
    rho += lambda[r] * jp.eq_rows[static_cast<std::size_t>(r)];
  return rho;
}

Vector solve_joint_active_set(const JointProblem& jp, const Vector& v0,
                              int* iterations) {
  const Eigen::Index n = jp.n;
  Vector v = v0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (jp.fixed[static_cast<std::size_t>(i)])
      v[i] = jp.fixed_value[i];
    else
      v[i] = std::clamp(v[i], jp.lower[i], jp.upper[i]);
  }
  std::vector<int> mask(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (jp.fixed[static_cast<std::size_t>(i)]) continue;
    if (v[i] <= jp.lower[i] + 1e-12 && !jp.gen->steep()) mask[static_cast<std::size_t>(i)] = -1;
    if (v[i] >= jp.upper[i] - 1e-12) mask[static_cast<std::size_t>(i)] = 1;
  }

  const int cap = 100 + 10 * static_cast<int>(n);
  for (int it = 0; it < cap; ++it) {
    if (iterations) *iterations = it + 1;
    EqSolve sol = jp.use_kkt ? solve_equality_quadratic(jp, mask, v)
                             : solve_equality_separable(jp, mask, v);
    if (!sol.ok) throw SolverError("active set: subproblem failed");

    const Vector p = sol.v - v;
    if (p.cwiseAbs().maxCoeff() <= 1e-13) {
      // KKT multiplier check: release the most negative bound multiplier.
      // At an active lower bound the multiplier equals the stationarity
      // residual rho; at an active upper bound it equals -rho.
      const Vector rho = stationarity(jp, v, sol.lambda);
      Eigen::Index worst = -1;
      double worst_val = -1e-10;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (jp.fixed[static_cast<std::size_t>(i)] ||
            mask[static_cast<std::size_t>(i)] == 0)
          continue;
        const double mult =
            mask[static_cast<std::size_t>(i)] == -1 ? rho[i] : -rho[i];
        if (mult < worst_val) {
          worst_val = mult;
          worst = i;
        }
      }
      if (worst < 0) return v;
      mask[static_cast<std::size_t>(worst)] = 0;
      continue;
    }

    // Ratio test toward the subproblem solution.
    double alpha = 1.0;
    Eigen::Index blocker = -1;
    int blocker_side = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (jp.fixed[static_cast<std::size_t>(i)] ||
          mask[static_cast<std::size_t>(i)] != 0)
        continue;
      if (p[i] < -1e-15) {
        const double a = (jp.lower[i] - v[i]) / p[i];
        if (a < alpha) { alpha = a; blocker = i; blocker_side = -1; }
      } else if (p[i] > 1e-15) {
        const double a = (jp.upper[i] - v[i]) / p[i];
        if (a < alpha) { alpha = a; blocker = i; blocker_side = 1; }
      }
    }
    alpha = std::clamp(alpha, 0.0, 1.0);
    v += alpha * p;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!jp.fixed[static_cast<std::size_t>(i)])
        v[i] = std::clamp(v[i], jp.lower[i], jp.upper[i]);
    if (blocker >= 0 && alpha < 1.0)
      mask[static_cast<std::size_t>(blocker)] = blocker_side;
  }
  throw SolverError("active set: iteration cap reached");
}

// ---------------------------------------------------------------------------
// Variational-inequality certificate.
// ---------------------------------------------------------------------------

double kkt_certificate(const GeneratorSpec& gen, const ReducedProblem& red,
                       const ConvexModelSet& set, const Matrix& z,
                       std::uint64_t seed) {
  const Matrix grad = reduced_gradient(gen, red, z);
  double min_gap = 0.0;
  if (red.rset.affine.empty()) {
    // Exact rowwise linear minimization.
    for (Eigen::Index b = 0; b < red.rset.rows; ++b) {
      Vector cap = red.rset.cap.row(b).transpose();
      for (Eigen::Index j = 0; j < red.rset.cols; ++j)
        if (red.pinned[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)])
          cap[j] = 0.0;
      const Vector g = grad.row(b).transpose();
      const Vector best = row_linear_minimizer(red.rset.base, g, cap);
      min_gap += g.dot(best - z.row(b).transpose());
    }
    return std::max(0.0, -min_gap);
  }
  // Random feasible panel plus structured candidates.
  SplitMix64 rng(seed);
  double worst = 0.0;
  auto eval = [&](const Matrix& cand_full) {
    const Matrix cand = red.rset.reduce_mean(cand_full);
    double t = 0.0;
    for (Eigen::Index b = 0; b < red.rset.rows; ++b)
      t += grad.row(b).dot(cand.row(b) - z.row(b));
    worst = std::min(worst, t);
  };
  try {
    eval(feasible_point(set));
  } catch (const Infeasible&) {
  }
  const Eigen::Index n = set.prompts, d = set.outcomes;
  for (int k = 0; k < 256; ++k) {
    Matrix raw(n, d);
    for (Eigen::Index x = 0; x < n; ++x) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        raw(x, j) = -std::log(std::max(rng.uniform(), 1e-12));
        s += raw(x, j);
      }
      if (set.base == BaseSet::FullSimplexProduct)
        raw.row(x) /= s;
    }
    try {
      eval(euclidean_project(set, raw));
    } catch (const Infeasible&) {
      break;
    }
  }
  return std::max(0.0, -worst);
}

// ---------------------------------------------------------------------------
// Alternative algorithms (cross-checks).
// ---------------------------------------------------------------------------

Matrix run_frank_wolfe(const GeneratorSpec& gen, const ReducedProblem& red,
                       Matrix z, const SolverOptions& opts, int* iters) {
  if (!red.rset.affine.empty())
    throw DomainError("frank_wolfe: affine-coupled sets unsupported");
  const Eigen::Index R = red.rset.rows, d = red.rset.cols;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (iters) *iters = it + 1;
    const Matrix grad = reduced_gradient(gen, red, z);
    Matrix target(R, d);
    double gap = 0.0;
    for (Eigen::Index b = 0; b < R; ++b) {
      Vector cap = red.rset.cap.row(b).transpose();
      for (Eigen::Index j = 0; j < d; ++j)
        if (red.pinned[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)])
          cap[j] = 0.0;
      target.row(b) =
          row_linear_minimizer(red.rset.base, grad.row(b).transpose(), cap)
              .transpose();
      gap += grad.row(b).dot(z.row(b) - target.row(b));
    }
    if (gap <= std::max(opts.tol_obj, 1e-12)) break;
    const Matrix dir = target - z;
    double step;
    if (gen.quadratic()) {
      double curv = 0.0;
      for (Eigen::Index b = 0; b < R; ++b) {
        const Vector db = dir.row(b).transpose();
        curv += red.block_weight[b] * db.dot((*gen.matrix) * db);
      }
      if (gen.kind == GeneratorKind::SquaredEuclidean) {
        curv = 0.0;
        for (Eigen::Index b = 0; b < R; ++b)
          curv += red.block_weight[b] * dir.row(b).squaredNorm();
      }
      step = curv > 0.0 ? std::clamp(gap / curv, 0.0, 1.0) : 1.0;
    } else {
      step = 2.0 / (it + 3.0);
      const double f0 = reduced_objective(gen, red, z);
      while (step > 1e-18 &&
             reduced_objective(gen, red, z + step * dir) > f0 - 1e-4 * step * gap)
        step *= 0.5;
    }
    z += step * dir;
  }
  return z;
}

Matrix run_mirror_descent(const GeneratorSpec& gen, const ReducedProblem& red,
                          const ConvexModelSet& set, Matrix z,
                          const SolverOptions& opts, int* iters) {
  if (red.rset.affine.empty() && gen.separable()) {
    // One exact Bregman-prox step solves the decoupled problem.
    for (Eigen::Index b = 0; b < red.rset.rows; ++b) {
      Vector t(red.rset.cols);
      for (Eigen::Index j = 0; j < red.rset.cols; ++j)
        t[j] = red.block_weight[b] > 0.0
                   ? red.dual_target(b, j) / red.block_weight[b]
                   : red.dual_target(b, j);
      z.row(b) = detail::project_row_dual(gen, t, red.rset.base,
                                          red.rset.cap.row(b).transpose())
                     .transpose();
    }
    if (iters) *iters = 1;
    return z;
  }
  // Euclidean projected gradient with Armijo backtracking.
  double f = reduced_objective(gen, red, z);
  double eta = 1.0;
  int flat = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (iters) *iters = it + 1;
    const Matrix grad = reduced_gradient(gen, red, z);
    Matrix cand;
    double fc = kInf;
    double step = eta;
    for (int h = 0; h < 80; ++h) {
      const Matrix moved = z - step * grad;
      cand = red.rset.reduce_mean(
          euclidean_project(set, red.rset.expand(moved)));
      fc = reduced_objective(gen, red, cand);
      const double decrease =
          (grad.array() * (z - cand).array()).sum();
      if (std::isfinite(fc) && fc <= f - 1e-4 * decrease + 1e-18) break;
      step *= 0.5;
    }
    if (!std::isfinite(fc) || fc > f) break;
    const double delta = f - fc;
    z = cand;
    f = fc;
    eta = std::min(step * 2.0, 1e6);
    if (delta < opts.tol_obj * (1.0 + std::abs(f))) {
      if (++flat >= 20) break;
    } else {
      flat = 0;
    }
  }
  return z;
}

}  // namespace

SolveResult bregman_project_weighted(const GeneratorSpec& gen,
                                     const Vector& weights,
                                     const ConvexModelSet& set,
                                     const Matrix& source,
                                     const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!set.convex())
    throw DomainError("bregman_project: sphere sets need the kernel solver");
  if (source.rows() != set.prompts || source.cols() != set.outcomes ||
      weights.size() != set.prompts)
    throw DomainError("bregman_project: shape mismatch");
  if ((weights.array() < 0.0).any())
    throw DomainError("bregman_project: negative weight");

  SolveResult out;
  out.report.algorithm = to_string(opts.algorithm);

  if (contains(set, source, 1e-12)) {
    out.table = source;
    out.report.status = "already_in_set";
    out.report.iterations = 0;
    out.report.objective = 0.0;
    out.report.kkt_residual = 0.0;
    out.report.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    return out;
  }

  ReducedProblem red = build_reduced(gen, weights, set, source);
  int iters = 0;
  Matrix z;

  if (opts.algorithm == Algorithm::FrankWolfe) {
    Matrix z0 = red.rset.reduce_mean(euclidean_project(set, source));
    if (gen.steep()) {
      // Start strictly inside for steep generators.
      Matrix interior = red.rset.reduce_mean(feasible_point(set));
      z0 = 0.9 * z0 + 0.1 * interior;
      for (Eigen::Index b = 0; b < red.rset.rows; ++b)
        for (Eigen::Index j = 0; j < red.rset.cols; ++j)
          if (red.pinned[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)])
            z0(b, j) = 0.0;
      if (red.rset.base == BaseSet::FullSimplexProduct)
        for (Eigen::Index b = 0; b < red.rset.rows; ++b)
          z0.row(b) /= z0.row(b).sum();
    }
    z = run_frank_wolfe(gen, red, z0, opts, &iters);
  } else if (opts.algorithm == Algorithm::MirrorDescent) {
    Matrix z0 = red.rset.reduce_mean(euclidean_project(set, source));
    z = run_mirror_descent(gen, red, set, z0, opts, &iters);
  } else {
    // Reduced Newton path.
    if (red.rset.affine.empty() && gen.separable()) {
      z = Matrix(red.rset.rows, red.rset.cols);
      for (Eigen::Index b = 0; b < red.rset.rows; ++b) {
        Vector t(red.rset.cols);
        for (Eigen::Index j = 0; j < red.rset.cols; ++j) {
          const double tau = red.dual_target(b, j);
          t[j] = (tau == kNegInf || red.block_weight[b] == 0.0)
                     ? tau
                     : tau / red.block_weight[b];
        }
        z.row(b) = detail::project_row_dual(gen, t, red.rset.base,
                                            red.rset.cap.row(b).transpose())
                       .transpose();
        ++iters;
      }
    } else {
      JointProblem jp = make_joint(gen, red);
      // Zero-weight rows under affine coupling have no defined objective.
      if (!red.rset.affine.empty())
        for (Eigen::Index b = 0; b < red.rset.rows; ++b)
          if (red.untouched[static_cast<std::size_t>(b)])
            throw SolverError(
                "bregman_project: zero-weight block under affine coupling");
      const Matrix z0full = euclidean_project(set, source);
      const Matrix z0 = red.rset.reduce_mean(z0full);
      Vector v0(jp.n);
      for (Eigen::Index b = 0; b < red.rset.rows; ++b)
        for (Eigen::Index j = 0; j < red.rset.cols; ++j)
          v0[jp.var(b, j)] = z0(b, j);
      try {
        const Vector v = solve_joint_active_set(jp, v0, &iters);
        z = Matrix(red.rset.rows, red.rset.cols);
        for (Eigen::Index b = 0; b < red.rset.rows; ++b)
          for (Eigen::Index j = 0; j < red.rset.cols; ++j)
            z(b, j) = v[jp.var(b, j)];
      } catch (const SolverError&) {
        // Degenerate subproblem geometry: fall back to the first-order
        // engine. The certificate below still gates the result.
        z = run_mirror_descent(gen, red, set, z0, opts, &iters);
        const double fallback_kkt =
            kkt_certificate(gen, red, set, z, opts.panel_seed);
        if (fallback_kkt > opts.tol_kkt) throw;
      }
    }
  }

  out.table = red.rset.expand(z);
  out.report.iterations = iters;
  out.report.objective = weighted_divergence(gen, weights, out.table, source);
  out.report.kkt_residual = kkt_certificate(gen, red, set, z, opts.panel_seed);
  out.report.status = (opts.algorithm == Algorithm::ReducedNewton ||
                       out.report.kkt_residual <= opts.tol_kkt)
                          ? "converged"
                          : "iteration_cap";
  out.report.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  return out;
}

}  // namespace coherence

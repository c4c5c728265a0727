#include "coherence/relaxed.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace coherence {

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

SoftDivergenceSpec SoftDivergenceSpec::kl_symmetrized() {
  return {SoftDivergenceKind::KLSymmetrized, 2.0, NormTag::L1};
}
SoftDivergenceSpec SoftDivergenceSpec::jensen_shannon() {
  return {SoftDivergenceKind::JensenShannon, 0.25, NormTag::L1};
}
SoftDivergenceSpec SoftDivergenceSpec::squared_hellinger() {
  return {SoftDivergenceKind::SquaredHellinger, 0.25, NormTag::L1};
}
SoftDivergenceSpec SoftDivergenceSpec::squared_euclidean() {
  return {SoftDivergenceKind::SquaredEuclidean, 1.0, NormTag::L2};
}
SoftDivergenceSpec SoftDivergenceSpec::tv_squared_surrogate() {
  return {SoftDivergenceKind::TotalVariationSquaredSurrogate, 0.5, NormTag::L1};
}

double soft_divergence(const SoftDivergenceSpec& spec, const Vector& p,
                       const Vector& q) {
  if (p.size() != q.size()) throw DomainError("soft_divergence: size mismatch");
  switch (spec.kind) {
    case SoftDivergenceKind::SquaredEuclidean:
      return 0.5 * (p - q).squaredNorm();
    case SoftDivergenceKind::TotalVariationSquaredSurrogate: {
      const double l1 = (p - q).lpNorm<1>();
      return 0.25 * l1 * l1;
    }
    case SoftDivergenceKind::SquaredHellinger: {
      KahanSum s;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0)
          throw DomainError("squared_hellinger: negative component");
        s.add(std::sqrt(p[i] * q[i]));
      }
      return 1.0 - s.value();
    }
    case SoftDivergenceKind::JensenShannon: {
      KahanSum s;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0)
          throw DomainError("jensen_shannon: negative component");
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) s.add(0.5 * p[i] * std::log(p[i] / m));
        if (q[i] > 0.0) s.add(0.5 * q[i] * std::log(q[i] / m));
      }
      return s.value();
    }
    case SoftDivergenceKind::KLSymmetrized: {
      KahanSum s;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0) || !(q[i] > 0.0))
          throw DomainError("kl_symmetrized: interior arguments required");
        s.add((p[i] - q[i]) * (std::log(p[i]) - std::log(q[i])));
      }
      return s.value();
    }
  }
  throw DomainError("unknown soft divergence kind");
}

Vector soft_divergence_grad(const SoftDivergenceSpec& spec, const Vector& p,
                            const Vector& q) {
  Vector g(p.size());
  switch (spec.kind) {
    case SoftDivergenceKind::SquaredEuclidean:
      return p - q;
    case SoftDivergenceKind::TotalVariationSquaredSurrogate: {
      const double l1 = (p - q).lpNorm<1>();
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double sgn = p[i] > q[i] ? 1.0 : (p[i] < q[i] ? -1.0 : 0.0);
        g[i] = 0.5 * l1 * sgn;
      }
      return g;
    }
    case SoftDivergenceKind::SquaredHellinger:
      for (Eigen::Index i = 0; i < p.size(); ++i)
        g[i] = p[i] > 0.0 ? -0.5 * std::sqrt(q[i] / p[i]) : 0.0;
      return g;
    case SoftDivergenceKind::JensenShannon:
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        g[i] = (p[i] > 0.0 && m > 0.0) ? 0.5 * std::log(p[i] / m) : 0.0;
      }
      return g;
    case SoftDivergenceKind::KLSymmetrized:
      for (Eigen::Index i = 0; i < p.size(); ++i)
        g[i] = std::log(p[i] / q[i]) + 1.0 - q[i] / p[i];
      return g;
  }
  throw DomainError("unknown soft divergence kind");
}

namespace {

// Penalized objective restricted to one two-point orbit.
struct OrbitPenalized {
  const GeneratorSpec* gen;
  const SoftDivergenceSpec* spec;
  double wx, wy, penalty;
  Vector px, py;  // source rows

  double value(const Vector& a, const Vector& b) const {
    // Boundary iterates are worth +inf to the line search, not an error.
    try {
      const double base =
          wx * divergence(*gen, a, px) + wy * divergence(*gen, b, py);
      if (base == kInf) return kInf;
      const double d = soft_divergence(*spec, a, b);
      const double d2 = soft_divergence(*spec, b, a);
      return base + penalty * (wx * d + wy * d2);
    } catch (const DomainError&) {
      return kInf;
    }
  }

  void grads(const Vector& a, const Vector& b, Vector* ga, Vector* gb) const {
    *ga = wx * (gradient(*gen, a) - gradient(*gen, px));
    *gb = wy * (gradient(*gen, b) - gradient(*gen, py));
    *ga += penalty * (wx + wy) * soft_divergence_grad(*spec, a, b);
    *gb += penalty * (wx + wy) * soft_divergence_grad(*spec, b, a);
  }
};

// Accelerated projected gradient (FISTA with adaptive restart) on the
// product of two simplices. Large penalties make the problem stiff, so plain
// projected gradient would stall well short of the bisection tolerances.
void solve_orbit(const OrbitPenalized& prob, Vector* a, Vector* b,
                 int max_iter) {
  const Vector ones = Vector::Ones(a->size());
  Vector xa = *a, xb = *b;
  Vector ya = xa, yb = xb;
  double momentum = 1.0;
  double f_best = prob.value(xa, xb);
  double eta = 1.0;
  int flat = 0;
  int stalls = 0;
  const int cap = std::min(max_iter, 20000);
  for (int it = 0; it < cap; ++it) {
    Vector ga, gb;
    prob.grads(ya, yb, &ga, &gb);
    const double fy = prob.value(ya, yb);
    Vector na, nb;
    double fn = kInf;
    bool accepted = false;
    for (int h = 0; h < 80; ++h) {
      na = project_capped_simplex(ya - eta * ga, ones);
      nb = project_capped_simplex(yb - eta * gb, ones);
      fn = prob.value(na, nb);
      const double quad = fy + ga.dot(na - ya) + gb.dot(nb - yb) +
                          ((na - ya).squaredNorm() + (nb - yb).squaredNorm()) /
                              (2.0 * eta);
      if (std::isfinite(fn) && std::isfinite(fy) &&
          fn <= quad + 1e-15 * (1.0 + std::abs(fy))) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;

    if (fn > f_best + 1e-15 * (1.0 + std::abs(f_best))) {
      // Objective rose past the incumbent: drop the momentum and restart
      // from the best point. Repeated fruitless restarts mean the incumbent
      // is converged to machine precision.
      ya = xa;
      yb = xb;
      momentum = 1.0;
      if (++stalls >= 8) break;
      continue;
    }
    stalls = 0;
    const double move = std::max((na - xa).cwiseAbs().maxCoeff(),
                                 (nb - xb).cwiseAbs().maxCoeff());
    const double next_momentum =
        0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    ya = na + ((momentum - 1.0) / next_momentum) * (na - xa);
    yb = nb + ((momentum - 1.0) / next_momentum) * (nb - xb);
    momentum = next_momentum;
    // The extrapolation is only a gradient point; pull it back to a strictly
    // positive simplex neighborhood so steep generators stay evaluable.
    const Vector uniform = ones / static_cast<double>(ones.size());
    ya = (1.0 - 1e-12) * project_capped_simplex(ya, ones) + 1e-12 * uniform;
    yb = (1.0 - 1e-12) * project_capped_simplex(yb, ones) + 1e-12 * uniform;
    const double delta = f_best - fn;
    xa = std::move(na);
    xb = std::move(nb);
    f_best = std::min(f_best, fn);
    eta = std::min(eta * 1.3, 1e6);
    // The jitter floor of the extrapolated iterates sits well above machine
    // epsilon, so convergence keys on objective stagnation.
    if (std::abs(delta) < 1e-15 * (1.0 + std::abs(f_best)) && move < 1e-7)
      ++flat;
    else
      flat = 0;
    if (flat >= 40) break;
  }
  *a = xa;
  *b = xb;
}

}  // namespace

namespace {

RelaxedResult penalized_project_impl(const GeneratorSpec& gen,
                                     const SoftDivergenceSpec& spec,
                                     double penalty,
                                     const PromptDistribution& dist,
                                     const InvarianceMap& phi,
                                     const Matrix& pi0,
                                     const SolverOptions& opts,
                                     const Matrix* warm) {
  if (!phi.involution_flag)
    throw NotInvolution("relaxed projection requires an involution");
  if (gen.norm_tag != spec.norm_tag)
    throw DomainError("relaxed projection: mu_F and mu_D norms must agree");
  const auto t0 = std::chrono::steady_clock::now();
  RelaxedResult out;
  out.table = pi0;
  out.multiplier = penalty;
  const OrbitPartition part = orbit_partition(phi);
  int iters = 0;
  for (const auto& orbit : part.orbits) {
    if (orbit.size() == 1) continue;  // fixed point: B_F alone keeps the row
    const Eigen::Index x = orbit[0], y = orbit[1];
    OrbitPenalized prob{&gen, &spec, dist[x], dist[y],
                        penalty, pi0.row(x).transpose(),
                        pi0.row(y).transpose()};
    const Matrix& start = warm ? *warm : pi0;
    Vector a = start.row(x).transpose();
    Vector b = start.row(y).transpose();
    // Strictly interior start for steep pieces.
    const Eigen::Index d = pi0.cols();
    const Vector uniform = Vector::Constant(d, 1.0 / static_cast<double>(d));
    a = 0.98 * a + 0.02 * uniform;
    b = 0.98 * b + 0.02 * uniform;
    solve_orbit(prob, &a, &b, opts.max_iter);
    out.table.row(x) = a.transpose();
    out.table.row(y) = b.transpose();
    iters += 1;
  }
  KahanSum c;
  for (Eigen::Index x = 0; x < pi0.rows(); ++x)
    c.add(dist[x] * soft_divergence(spec, out.table.row(x).transpose(),
                                    out.table.row(phi(x)).transpose()));
  out.constraint_value = c.value();
  out.report.status = "converged";
  out.report.iterations = iters;
  out.report.objective =
      expected_divergence(gen, dist, out.table, pi0);
  out.report.algorithm = "penalized_projected_gradient";
  out.report.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  return out;
}

}  // namespace

RelaxedResult penalized_project(const GeneratorSpec& gen,
                                const SoftDivergenceSpec& spec, double penalty,
                                const PromptDistribution& dist,
                                const InvarianceMap& phi, const Matrix& pi0,
                                const SolverOptions& opts) {
  return penalized_project_impl(gen, spec, penalty, dist, phi, pi0, opts,
                                nullptr);
}

RelaxedResult relaxed_project(const GeneratorSpec& gen,
                              const SoftDivergenceSpec& spec, double lambda_cap,
                              const PromptDistribution& dist,
                              const InvarianceMap& phi, const Matrix& pi0,
                              const SolverOptions& opts) {
  if (!(lambda_cap > 0.0))
    throw DomainError("relaxed_project: Lambda must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  KahanSum c0;
  for (Eigen::Index x = 0; x < pi0.rows(); ++x)
    c0.add(dist[x] * soft_divergence(spec, pi0.row(x).transpose(),
                                     pi0.row(phi(x)).transpose()));
  if (c0.value() <= lambda_cap) {
    RelaxedResult out;
    out.table = pi0;
    out.multiplier = 0.0;
    out.constraint_value = c0.value();
    out.report.status = "constraint_inactive";
    out.report.objective = 0.0;
    out.report.algorithm = "penalized_projected_gradient";
    return out;
  }

  // The constraint value of the penalized solution is nonincreasing in the
  // multiplier: bracket then bisect, warm-starting each solve.
  double lo = 0.0, hi = 1.0;
  RelaxedResult at_hi =
      penalized_project_impl(gen, spec, hi, dist, phi, pi0, opts, nullptr);
  int doublings = 0;
  while (at_hi.constraint_value > lambda_cap && doublings < 60) {
    hi *= 2.0;
    at_hi = penalized_project_impl(gen, spec, hi, dist, phi, pi0, opts,
                                   &at_hi.table);
    ++doublings;
  }
  if (at_hi.constraint_value > lambda_cap)
    throw SolverError("relaxed_project: multiplier bracket failed");

  RelaxedResult best = at_hi;
  Matrix warm = at_hi.table;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    RelaxedResult r =
        penalized_project_impl(gen, spec, mid, dist, phi, pi0, opts, &warm);
    warm = r.table;
    if (r.constraint_value > lambda_cap) {
      lo = mid;
    } else {
      hi = mid;
      best = r;
    }
    if (std::abs(r.constraint_value - lambda_cap) <=
            1e-11 * std::max(1.0, lambda_cap) ||
        hi - lo < 1e-14 * std::max(1.0, hi))
      break;
  }
  best.multiplier = hi;
  best.report.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
  return best;
}

double relaxed_improvement_floor(double mu_f, double mu_d, double lambda_cap,
                                 double delta_coh) {
  if (mu_f < 0.0 || mu_d <= 0.0 || lambda_cap < 0.0 || delta_coh < 0.0)
    throw DomainError("relaxed_improvement_floor: nonnegative args required");
  const double slack =
      std::sqrt(delta_coh) - std::sqrt(lambda_cap / (2.0 * mu_d));
  const double pos = std::max(slack, 0.0);
  return 0.5 * mu_f * pos * pos;
}

}  // namespace coherence

#include "coherence/empirical.hpp"

#include <cmath>
#include <limits>

#include "coherence/rng.hpp"

namespace coherence {

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

PromptSample sample_prompts(const PromptDistribution& dist, Eigen::Index m,
                            std::uint64_t seed) {
  if (m < 1) throw DomainError("sample_prompts: m must be >= 1");
  PromptSample s;
  s.seed = seed;
  s.indices.reserve(static_cast<std::size_t>(m));
  // Inverse-CDF draws through the library generator; std:: distributions are
  // implementation-defined and would break cross-platform reproducibility.
  Vector cdf(dist.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    cdf[i] = acc;
  }
  SplitMix64 rng(seed);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double u = rng.uniform() * acc;
    Eigen::Index lo = 0, hi = dist.size() - 1;
    while (lo < hi) {
      const Eigen::Index mid = (lo + hi) / 2;
      if (cdf[mid] > u)
        hi = mid;
      else
        lo = mid + 1;
    }
    s.indices.push_back(lo);
  }
  return s;
}

Vector empirical_weights(const PromptSample& sample, Eigen::Index prompts) {
  Vector w = Vector::Zero(prompts);
  for (auto i : sample.indices) {
    if (i < 0 || i >= prompts)
      throw DomainError("empirical_weights: index out of range");
    w[i] += 1.0;
  }
  return w / static_cast<double>(sample.indices.size());
}

SolveResult empirical_projection(const GeneratorSpec& gen,
                                 const PromptSample& sample,
                                 const InvarianceMap& phi,
                                 const ConvexModelSet& set_pi,
                                 const Matrix& pi0,
                                 const SolverOptions& opts) {
  const Vector weights = empirical_weights(sample, set_pi.prompts);
  return bregman_project_weighted(
      gen, weights, coherent_restriction(set_pi, phi), pi0, opts);
}

namespace {

std::vector<Matrix> feasible_panel(const ConvexModelSet& coherent_set,
                                   const GeneratorSpec& gen, int panel_size,
                                   std::uint64_t seed) {
  std::vector<Matrix> panel;
  SplitMix64 rng(seed);
  const Eigen::Index n = coherent_set.prompts, d = coherent_set.outcomes;
  Matrix interior;
  try {
    interior = feasible_point(coherent_set);
  } catch (const Infeasible&) {
    return panel;
  }
  panel.push_back(interior);
  for (int k = 0; k < panel_size; ++k) {
    Matrix raw(n, d);
    for (Eigen::Index x = 0; x < n; ++x) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        raw(x, j) = -std::log(std::max(rng.uniform(), 1e-12));
        s += raw(x, j);
      }
      if (coherent_set.base == BaseSet::FullSimplexProduct) raw.row(x) /= s;
    }
    try {
      Matrix proj = euclidean_project(coherent_set, raw);
      if (gen.steep()) proj = 0.95 * proj + 0.05 * interior;
      panel.push_back(std::move(proj));
    } catch (const Infeasible&) {
      break;
    }
  }
  return panel;
}

double signed_deviation(const Vector& delta, const GeneratorSpec& gen,
                        const Matrix& a, const Matrix& b) {
  KahanSum s;
  for (Eigen::Index x = 0; x < delta.size(); ++x) {
    if (delta[x] == 0.0) continue;
    const double d = divergence(gen, a.row(x).transpose(), b.row(x).transpose());
    if (d == kInf) return kInf;
    s.add(delta[x] * d);
  }
  return s.value();
}

}  // namespace

double epsilon_m_lower(const GeneratorSpec& gen, const PromptDistribution& dist,
                       const PromptSample& sample, const ConvexModelSet& set_pi,
                       const InvarianceMap& phi, const Matrix& pi0,
                       int panel_size, const SolverOptions& opts) {
  const Vector delta =
      dist.weights - empirical_weights(sample, set_pi.prompts);
  const ConvexModelSet coherent = coherent_restriction(set_pi, phi);

  std::vector<Matrix> candidates =
      feasible_panel(coherent, gen, panel_size, sample.seed ^ 0xE5717A7EULL);
  // Structured candidates: population and empirical optima, projected pi0.
  try {
    candidates.push_back(
        bregman_project(gen, dist, coherent, pi0, opts).table);
    candidates.push_back(
        empirical_projection(gen, sample, phi, set_pi, pi0, opts).table);
  } catch (const SolverError&) {
  }

  double best = 0.0;
  for (const auto& c : candidates) {
    const double d1 = signed_deviation(delta, gen, c, pi0);
    if (std::isfinite(d1)) best = std::max(best, std::abs(d1));
  }
  for (const auto& a : candidates)
    for (const auto& b : candidates) {
      const double d2 = signed_deviation(delta, gen, a, b);
      if (std::isfinite(d2)) best = std::max(best, std::abs(d2));
    }
  return best;
}

namespace {

void enumerate_simplex_grid(Eigen::Index d, int levels, Vector* work,
                            Eigen::Index pos, int remaining,
                            std::vector<Vector>* out) {
  if (pos == d - 1) {
    (*work)[pos] = static_cast<double>(remaining) / levels;
    out->push_back(*work);
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    (*work)[pos] = static_cast<double>(k) / levels;
    enumerate_simplex_grid(d, levels, work, pos + 1, remaining - k, out);
  }
}

std::vector<Vector> row_grid(BaseSet base, Eigen::Index d, double step) {
  const int levels = std::max(1, static_cast<int>(std::lround(1.0 / step)));
  std::vector<Vector> pts;
  if (base == BaseSet::FullSimplexProduct) {
    Vector work(d);
    enumerate_simplex_grid(d, levels, &work, 0, levels, &pts);
  } else {
    // Cube grid; only small d is accepted by the caller.
    const Eigen::Index total =
        static_cast<Eigen::Index>(std::pow(levels + 1, d));
    for (Eigen::Index code = 0; code < total; ++code) {
      Vector v(d);
      Eigen::Index rest = code;
      for (Eigen::Index j = 0; j < d; ++j) {
        v[j] = static_cast<double>(rest % (levels + 1)) / levels;
        rest /= levels + 1;
      }
      pts.push_back(std::move(v));
    }
  }
  return pts;
}

}  // namespace

double epsilon_m_grid_upper(const GeneratorSpec& gen,
                            const PromptDistribution& dist,
                            const PromptSample& sample,
                            const ConvexModelSet& set_pi,
                            const InvarianceMap& phi, const Matrix& pi0,
                            double step) {
  if (!gen.quadratic())
    throw DomainError("epsilon_m_grid_upper: quadratic generators only");
  const Eigen::Index n = set_pi.prompts, d = set_pi.outcomes;
  if (n * d > 12)
    throw DomainError("epsilon_m_grid_upper: instance too large");
  const Vector delta = dist.weights - empirical_weights(sample, n);
  const ReducedSet rset = reduce(coherent_restriction(set_pi, phi));

  // Operator norm of the Hessian bounds the gradient of B over the region.
  Matrix a = gen.matrix ? *gen.matrix : Matrix::Identity(d, d);
  const double anorm = a.operatorNorm();
  const double diam = std::sqrt(2.0);
  const double lip = 2.0 * anorm * diam;
  const double cell = step * std::sqrt(static_cast<double>(d));

  const std::vector<Vector> grid = row_grid(rset.base, d, step);

  double hi_total_1 = 0.0, lo_total_1 = 0.0;
  double hi_total_2 = 0.0, lo_total_2 = 0.0;
  for (Eigen::Index b = 0; b < rset.rows; ++b) {
    double dmass = 0.0;
    for (auto x : rset.members[static_cast<std::size_t>(b)])
      dmass += std::abs(delta[x]);
    const double corr = dmass * lip * cell;

    double hi1 = -kInf, lo1 = kInf, hi2 = -kInf, lo2 = kInf;
    for (const auto& z : grid) {
      double g = 0.0;
      for (auto x : rset.members[static_cast<std::size_t>(b)])
        g += delta[x] * divergence(gen, z, pi0.row(x).transpose());
      hi1 = std::max(hi1, g);
      lo1 = std::min(lo1, g);
    }
    for (const auto& z : grid)
      for (const auto& zp : grid) {
        double h = 0.0;
        for (auto x : rset.members[static_cast<std::size_t>(b)])
          h += delta[x] * divergence(gen, zp, z);
        hi2 = std::max(hi2, h);
        lo2 = std::min(lo2, h);
      }
    hi_total_1 += hi1 + corr;
    lo_total_1 += lo1 - corr;
    hi_total_2 += hi2 + 2.0 * corr;
    lo_total_2 += lo2 - 2.0 * corr;
  }
  return std::max(std::max(hi_total_1, -lo_total_1),
                  std::max(hi_total_2, -lo_total_2));
}

BoundReport empirical_bound_report(
    const GeneratorSpec& gen, const PromptDistribution& dist,
    const PromptSample& sample, const ConvexModelSet& set_pi,
    const InvarianceMap& phi, const Matrix& pi0, const Matrix& pi_star,
    int panel_size, std::optional<double> lipschitz_pi_star,
    std::optional<double> grid_step, const SolverOptions& opts) {
  BoundReport rep;
  const ConvexModelSet coherent = coherent_restriction(set_pi, phi);
  const SolveResult population = bregman_project(gen, dist, coherent, pi0, opts);
  const SolveResult empirical =
      empirical_projection(gen, sample, phi, set_pi, pi0, opts);

  rep.epsilon_lower = epsilon_m_lower(gen, dist, sample, set_pi, phi, pi0,
                                      panel_size, opts);
  rep.epsilon_provenance = "panel";
  if (grid_step) {
    rep.epsilon_upper = epsilon_m_grid_upper(gen, dist, sample, set_pi, phi,
                                             pi0, *grid_step);
    rep.epsilon_provenance = "panel+grid";
  }

  const double eps = rep.epsilon_lower;
  const double a_term = expected_divergence(gen, dist, pi_star, empirical.table);
  const double b_term = expected_divergence(gen, dist, pi_star, population.table);
  const double c_term = expected_divergence(gen, dist, pi_star, pi0);
  const double d_hat = expected_divergence(gen, dist, population.table, pi0);
  const double d_s = expected_divergence(gen, dist, empirical.table, pi0);
  const double slack_tol = 1e-8;

  auto record = [&](const std::string& name, double lhs, double rhs) {
    InequalityRecord r;
    r.name = name;
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.holds = lhs <= rhs + slack_tol;
    return r;
  };

  rep.main_theorem = record("excess_divergence_main", a_term,
                            b_term + 6.0 * eps + (c_term - d_hat));
  rep.improvement_corollary = record("empirical_improvement", a_term - c_term,
                                     6.0 * eps + c_term - 2.0 * d_hat);
  rep.two_sided_left = record("population_optimality", d_hat, d_s);
  rep.two_sided_right = record("excess_risk", d_s, d_hat + 2.0 * eps);
  if (rep.epsilon_upper)
    rep.main_theorem_grid =
        record("excess_divergence_main_grid_eps", a_term,
               b_term + 6.0 * (*rep.epsilon_upper) + (c_term - d_hat));

  if (lipschitz_pi_star && gen.mu && gen.norm_tag == NormTag::L2) {
    const double floor_drop =
        2.0 * (*lipschitz_pi_star) / std::sqrt(*gen.mu) * std::sqrt(eps);
    rep.strong_convexity =
        record("improvement_strong_convexity", (c_term - b_term) - floor_drop,
               c_term - a_term);
    // lhs/rhs swapped into <= form: Improv(pi_S) >= Improv(pi_hat) - drop.
    rep.strong_convexity->name = "improvement_strong_convexity";
  }

  rep.smallest_main_constant =
      eps > 0.0
          ? std::max(0.0, (a_term - b_term - c_term + d_hat) / eps)
          : 0.0;

  // Untouched orbits: no sample mass anywhere in the orbit.
  const Vector w = empirical_weights(sample, set_pi.prompts);
  const OrbitPartition part = orbit_partition(phi);
  for (Eigen::Index o = 0; o < part.count(); ++o) {
    double mass = 0.0;
    for (auto x : part.orbits[static_cast<std::size_t>(o)]) mass += w[x];
    if (mass == 0.0) rep.untouched_orbits.push_back(o);
  }
  return rep;
}

}  // namespace coherence

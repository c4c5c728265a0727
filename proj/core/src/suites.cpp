#include "coherence/suites.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "coherence/rng.hpp"

namespace coherence {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

double tol_or(const SuiteOptions& opts, double fallback) {
  return opts.tol_override.value_or(fallback);
}

int job_count(const SuiteOptions& opts) {
  if (opts.jobs > 0) return opts.jobs;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Deterministic parallel map: results are collected by index.
template <typename T>
std::vector<T> parallel_map(int count, int jobs,
                            const std::function<T(int)>& fn) {
  std::vector<T> results(static_cast<std::size_t>(count));
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) results[static_cast<std::size_t>(i)] = fn(i);
    return results;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  const int team = std::min(jobs, count);
  workers.reserve(static_cast<std::size_t>(team));
  for (int w = 0; w < team; ++w)
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        results[static_cast<std::size_t>(i)] = fn(i);
    });
  for (auto& t : workers) t.join();
  return results;
}

Vector simplex_row(SplitMix64& rng, Eigen::Index d, double floor_mass) {
  Vector v(d);
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    v[i] = -std::log(std::max(rng.uniform(), 1e-12));
    s += v[i];
  }
  v /= s;
  const Vector uniform = Vector::Constant(d, 1.0 / static_cast<double>(d));
  return (1.0 - floor_mass) * v + floor_mass * uniform;
}

InvarianceMap random_involution(SplitMix64& rng, Eigen::Index n) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(rng.uniform_index(
                  static_cast<std::uint64_t>(i + 1)))]);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = 0; i + 1 < n; i += 2) {
    if (rng.uniform() < 0.75) {
      const Eigen::Index a = order[static_cast<std::size_t>(i)];
      const Eigen::Index b = order[static_cast<std::size_t>(i + 1)];
      perm[static_cast<std::size_t>(a)] = b;
      perm[static_cast<std::size_t>(b)] = a;
    }
  }
  return InvarianceMap(perm);
}

Matrix random_spd(SplitMix64& rng, Eigen::Index d) {
  Matrix b(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) b(i, j) = 2.0 * rng.uniform() - 1.0;
  Matrix a = b.transpose() * b / static_cast<double>(d);
  a += (0.25 + 0.5 * rng.uniform()) * Matrix::Identity(d, d);
  return 0.5 * (a + a.transpose());
}

struct RandomInstance {
  PromptDistribution dist;
  InvarianceMap phi;
  Matrix pi0;
  Matrix pi_star;  // coherent and feasible
  ConvexModelSet set;
  GeneratorSpec gen;
};

struct InstanceParams {
  Eigen::Index n_max = 8;
  Eigen::Index d_max = 5;
  bool caps = true;
  bool affine = true;
  bool phi_invariant_dist = false;
  std::vector<GeneratorKind> kinds = {GeneratorKind::SquaredEuclidean,
                                      GeneratorKind::NegativeEntropy,
                                      GeneratorKind::Mahalanobis};
};

RandomInstance make_instance(SplitMix64& rng, const InstanceParams& p,
                             int which_kind) {
  const Eigen::Index n =
      2 + static_cast<Eigen::Index>(rng.uniform_index(
              static_cast<std::uint64_t>(p.n_max - 1)));
  const Eigen::Index d =
      2 + static_cast<Eigen::Index>(rng.uniform_index(
              static_cast<std::uint64_t>(p.d_max - 1)));
  InvarianceMap phi = random_involution(rng, n);

  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = 0.2 + rng.uniform();
  if (p.phi_invariant_dist)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = 0.5 * (w[i] + w[phi(i)]);
      w[i] = m;
      w[phi(i)] = m;
    }
  PromptDistribution dist(w / w.sum());

  Matrix pi0(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    pi0.row(i) = simplex_row(rng, d, 0.12).transpose();

  const OrbitPartition part = orbit_partition(phi);
  Matrix pi_star(n, d);
  for (const auto& orbit : part.orbits) {
    const Vector row = simplex_row(rng, d, 0.12);
    for (auto x : orbit) pi_star.row(x) = row.transpose();
  }

  ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
  if (p.caps && rng.uniform() < 0.8) {
    const int k = 1 + static_cast<int>(rng.uniform_index(3));
    for (int c = 0; c < k; ++c) {
      const Eigen::Index x = static_cast<Eigen::Index>(rng.uniform_index(
          static_cast<std::uint64_t>(n)));
      const Eigen::Index y = static_cast<Eigen::Index>(rng.uniform_index(
          static_cast<std::uint64_t>(d)));
      const double cap =
          std::min(1.0, pi_star(x, y) + 0.05 + 0.4 * rng.uniform());
      set.with_cap(x, y, cap);
    }
  }
  if (p.affine && rng.uniform() < 0.5) {
    Matrix coeffs(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        coeffs(i, j) = std::round((2.0 * rng.uniform() - 1.0) * 4.0) / 4.0;
    const double rhs = (coeffs.array() * pi_star.array()).sum();
    set.with_affine(coeffs, rhs);
  }

  GeneratorSpec gen;
  const GeneratorKind kind =
      p.kinds[static_cast<std::size_t>(which_kind) % p.kinds.size()];
  switch (kind) {
    case GeneratorKind::SquaredEuclidean: gen = squared_euclidean(); break;
    case GeneratorKind::NegativeEntropy: gen = negative_entropy(); break;
    case GeneratorKind::NegativeLog: gen = negative_log(); break;
    case GeneratorKind::Mahalanobis: gen = mahalanobis(random_spd(rng, d)); break;
    case GeneratorKind::DiagonalQuadratic: {
      Vector diag(d);
      for (Eigen::Index j = 0; j < d; ++j) diag[j] = 0.3 + 2.0 * rng.uniform();
      gen = diagonal_quadratic(diag);
      break;
    }
    case GeneratorKind::QuadraticCoupled:
      gen = quadratic_coupled(random_spd(rng, d), Vector::Zero(d));
      break;
  }
  return RandomInstance{std::move(dist), std::move(phi), std::move(pi0),
                        std::move(pi_star), std::move(set), std::move(gen)};
}

double row_norm(const Vector& v, NormTag tag) {
  return tag == NormTag::L1 ? v.lpNorm<1>() : v.norm();
}

CheckResult aggregate(const std::string& name, double worst, double tol,
                      int violations, int total) {
  CheckResult c;
  c.name = name;
  c.value = worst;
  c.tolerance = tol;
  c.passed = violations == 0;
  c.detail = std::to_string(violations) + "/" + std::to_string(total) +
             " violations";
  return c;
}

// ---------------------------------------------------------------------------
// bregman-identities
// ---------------------------------------------------------------------------

SuiteReport suite_bregman_identities(const SuiteOptions& opts) {
  SuiteReport rep;
  rep.suite = "bregman-identities";
  rep.seed = opts.seed;
  SplitMix64 seeder(opts.seed);

  std::vector<std::pair<std::string, GeneratorSpec>> gens;
  gens.push_back({"squared_euclidean", squared_euclidean()});
  gens.push_back({"negative_entropy", negative_entropy()});
  gens.push_back({"negative_log", negative_log()});
  {
    SplitMix64 r = seeder.split();
    gens.push_back({"mahalanobis", mahalanobis(random_spd(r, 4))});
    Vector diag(4);
    diag << 0.5, 1.0, 2.0, 3.5;
    gens.push_back({"diagonal_quadratic", diagonal_quadratic(diag)});
  }

  const int points = 1000;
  const int jobs = job_count(opts);
  for (auto& [name, gen] : gens) {
    const Eigen::Index d = 4;
    const std::uint64_t gseed = seeder.next_u64();
    struct Acc {
      double fd = 0, bij = 0, fy = 0, dual = 0, three = 0, conv = 0;
      double nonneg = 0, fb = 0, lemma1 = 0;
    };
    std::function<Acc(int)> work = [&, gen = gen](int i) {
      SplitMix64 rng(derive_seed(gseed, static_cast<std::uint64_t>(i)));
      Acc a;
      const Vector pt = simplex_row(rng, d, 0.15);
      const Vector qt = simplex_row(rng, d, 0.15);
      const Vector rt = simplex_row(rng, d, 0.15);

      // Central finite difference against the analytic gradient.
      const Vector g = gradient(gen, pt);
      Vector fd(d);
      const double h = 1e-6;
      for (Eigen::Index j = 0; j < d; ++j) {
        Vector hi = pt, lo = pt;
        hi[j] += h;
        lo[j] -= h;
        fd[j] = (value(gen, hi) - value(gen, lo)) / (2.0 * h);
      }
      a.fd = (fd - g).cwiseAbs().maxCoeff() / (1.0 + g.cwiseAbs().maxCoeff());

      a.bij = (dual_map_inverse(gen, g) - pt).cwiseAbs().maxCoeff();
      a.fy = std::abs(value(gen, pt) + conjugate_value(gen, g) - pt.dot(g));
      a.dual = duality_residual(gen, pt, qt);
      a.three = std::abs(three_point_residual(gen, pt, rt, qt));

      const double t = rng.uniform();
      a.conv = value(gen, t * pt + (1.0 - t) * qt) -
               (t * value(gen, pt) + (1.0 - t) * value(gen, qt));
      a.nonneg = divergence(gen, pt, qt);
      a.fb = fenchel_bregman_gap(gen, pt, qt, gradient(gen, rt));

      // Weighted-combination identity is independent of the base point.
      Matrix pts(2, d);
      pts.row(0) = pt.transpose();
      pts.row(1) = rt.transpose();
      Vector lam(2);
      lam << t, 1.0 - t;
      auto lhs = [&](const Vector& base) {
        return lam[0] * divergence(gen, pt, base) +
               lam[1] * divergence(gen, rt, base) -
               divergence(gen, lam[0] * pt + lam[1] * rt, base);
      };
      a.lemma1 = std::abs(lhs(qt) - lhs(simplex_row(rng, d, 0.15)));
      return a;
    };
    const auto accs = parallel_map<Acc>(points, jobs, work);
    Acc worst;
    for (const auto& a : accs) {
      worst.fd = std::max(worst.fd, a.fd);
      worst.bij = std::max(worst.bij, a.bij);
      worst.fy = std::max(worst.fy, a.fy);
      worst.dual = std::max(worst.dual, a.dual);
      worst.three = std::max(worst.three, a.three);
      worst.conv = std::max(worst.conv, a.conv);
      worst.nonneg = std::min(worst.nonneg, a.nonneg);
      worst.fb = std::min(worst.fb, a.fb);
      worst.lemma1 = std::max(worst.lemma1, a.lemma1);
    }
    auto push = [&](const std::string& what, double v, double tol, bool le) {
      CheckResult c;
      c.name = name + "/" + what;
      c.value = v;
      c.tolerance = tol;
      c.passed = le ? v <= tol : v >= tol;
      rep.checks.push_back(c);
    };
    push("gradient_fd_rel", worst.fd, tol_or(opts, 1e-5), true);
    push("dual_map_bijection", worst.bij, tol_or(opts, 1e-10), true);
    push("fenchel_young", worst.fy, tol_or(opts, 1e-10), true);
    push("divergence_duality", worst.dual, tol_or(opts, 1e-10), true);
    push("three_point_identity", worst.three, tol_or(opts, 1e-10), true);
    push("convexity_gap", worst.conv, tol_or(opts, 1e-12), true);
    push("nonnegativity_min", worst.nonneg, -tol_or(opts, 1e-12), false);
    push("fenchel_bregman_gap_min", worst.fb, -tol_or(opts, 1e-12), false);
    push("combination_identity_base_free", worst.lemma1, tol_or(opts, 1e-10),
         true);
  }

  // Positive linearity in the generator over random quadratic pairs.
  {
    SplitMix64 rng(seeder.next_u64());
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Eigen::Index d = 3;
      const Matrix a1 = random_spd(rng, d);
      const Matrix a2 = random_spd(rng, d);
      const double al = 0.2 + rng.uniform(), be = 0.2 + rng.uniform();
      const GeneratorSpec g1 = mahalanobis(a1);
      const GeneratorSpec g2 = mahalanobis(a2);
      const GeneratorSpec gc = mahalanobis(al * a1 + be * a2);
      const Vector pt = simplex_row(rng, d, 0.1);
      const Vector qt = simplex_row(rng, d, 0.1);
      worst = std::max(
          worst, std::abs(al * divergence(g1, pt, qt) +
                          be * divergence(g2, pt, qt) -
                          divergence(gc, pt, qt)));
    }
    CheckResult c;
    c.name = "generator_linearity";
    c.value = worst;
    c.tolerance = tol_or(opts, 1e-12);
    c.passed = worst <= c.tolerance;
    rep.checks.push_back(c);
  }

  // Centroid golden values and the Jensen gap of the geometric mean.
  {
    Matrix pts(2, 1);
    pts << 0.10, 0.80;
    Vector lam(2);
    lam << 0.5, 0.5;
    auto push_val = [&](const std::string& nm, double got, double want,
                        double tol) {
      CheckResult c;
      c.name = nm;
      c.value = got - want;
      c.tolerance = tol;
      c.passed = std::abs(got - want) <= tol;
      rep.checks.push_back(c);
    };
    push_val("centroid/squared_euclidean",
             centroid(squared_euclidean(), lam, pts)[0], 0.45, 1e-12);
    push_val("centroid/negative_entropy",
             centroid(negative_entropy(), lam, pts)[0], std::sqrt(0.08), 1e-12);
    push_val("centroid/negative_log", centroid(negative_log(), lam, pts)[0],
             8.0 / 45.0, 1e-12);
    CheckResult c;
    c.name = "centroid/jensen_gap_geometric_le_arithmetic";
    c.value = centroid(negative_entropy(), lam, pts)[0] - 0.45;
    c.tolerance = 0.0;
    c.passed = c.value <= 0.0;
    rep.checks.push_back(c);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// direct-improvement
// ---------------------------------------------------------------------------

SuiteReport suite_direct_improvement(const SuiteOptions& opts) {
  SuiteReport rep;
  rep.suite = "direct-improvement";
  rep.seed = opts.seed;
  const int instances = 200;
  struct Out {
    double pyth_slack = kInf;     // Improv - E[B(pihat||pi0)]
    double floor_slack = kInf;    // Improv - mu/2 E[lam(1-lam)||...||^2]
    double nonreal_slack = kInf;  // non-realizable floor slack (Mahalanobis)
    bool has_nonreal = false;
  };
  InstanceParams params;
  std::function<Out(int)> work = [&](int i) {
    SplitMix64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(i)));
    RandomInstance inst = make_instance(rng, params, i);
    Out out;
    const SolveResult proj = direct_projection(inst.gen, inst.dist, inst.phi,
                                               inst.set, inst.pi0);
    const double improv =
        improvement(inst.gen, inst.dist, inst.pi_star, inst.pi0, proj.table);
    const double dterm =
        expected_divergence(inst.gen, inst.dist, proj.table, inst.pi0);
    out.pyth_slack = improv - dterm;

    KahanSum floor;
    for (Eigen::Index x = 0; x < inst.pi0.rows(); ++x) {
      const double lam = lambda_weight(inst.dist, inst.phi, x);
      const double nrm = row_norm(
          (inst.pi0.row(x) - inst.pi0.row(inst.phi(x))).transpose(),
          inst.gen.norm_tag);
      floor.add(inst.dist[x] * lam * (1.0 - lam) * nrm * nrm);
    }
    out.floor_slack = improv - 0.5 * inst.gen.require_mu() * floor.value();

    if (inst.gen.kind == GeneratorKind::Mahalanobis) {
      Matrix incoherent(inst.pi0.rows(), inst.pi0.cols());
      for (Eigen::Index x = 0; x < inst.pi0.rows(); ++x)
        incoherent.row(x) =
            simplex_row(rng, inst.pi0.cols(), 0.1).transpose();
      const NonRealizableReport nr = non_realizable_bound(
          inst.gen, inst.dist, inst.phi, inst.set, inst.pi0, incoherent);
      out.nonreal_slack = nr.improvement - nr.floor;
      out.has_nonreal = true;
    }
    return out;
  };
  const auto outs = parallel_map<Out>(instances, job_count(opts), work);
  double worst_p = kInf, worst_f = kInf, worst_nr = kInf;
  int viol_p = 0, viol_f = 0, viol_nr = 0, total_nr = 0;
  for (const auto& o : outs) {
    worst_p = std::min(worst_p, o.pyth_slack);
    worst_f = std::min(worst_f, o.floor_slack);
    if (o.pyth_slack < -tol_or(opts, 1e-8)) ++viol_p;
    if (o.floor_slack < -tol_or(opts, 1e-8)) ++viol_f;
    if (o.has_nonreal) {
      ++total_nr;
      worst_nr = std::min(worst_nr, o.nonreal_slack);
      if (o.nonreal_slack < -tol_or(opts, 1e-6)) ++viol_nr;
    }
  }
  rep.checks.push_back(aggregate("improvement_ge_projection_divergence",
                                 worst_p, 1e-8, viol_p, instances));
  rep.checks.push_back(aggregate("strong_convexity_floor", worst_f, 1e-8,
                                 viol_f, instances));
  rep.checks.push_back(aggregate("non_realizable_floor", worst_nr, 1e-6,
                                 viol_nr, total_nr));
  return rep;
}

// ---------------------------------------------------------------------------
// equivalence
// ---------------------------------------------------------------------------

SuiteReport suite_equivalence(const SuiteOptions& opts) {
  SuiteReport rep;
  rep.suite = "equivalence";
  rep.seed = opts.seed;
  const int instances = 100;
  InstanceParams params;
  params.n_max = 6;
  params.d_max = 4;
  params.affine = false;  // direct and two-step are compared on cap geometry
  params.kinds = {GeneratorKind::NegativeEntropy,
                  GeneratorKind::SquaredEuclidean, GeneratorKind::Mahalanobis,
                  GeneratorKind::NegativeLog,
                  GeneratorKind::DiagonalQuadratic};
  std::function<double(int)> work = [&](int i) {
    SplitMix64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(i)));
    RandomInstance inst = make_instance(rng, params, i);
    return equivalence_residual(inst.gen, inst.dist, inst.phi, inst.set,
                                inst.pi0);
  };
  const auto residuals = parallel_map<double>(instances, job_count(opts), work);
  double worst = 0.0;
  int viol = 0;
  for (double r : residuals) {
    worst = std::max(worst, r);
    if (r > tol_or(opts, 1e-7)) ++viol;
  }
  rep.checks.push_back(
      aggregate("direct_equals_two_step", worst, 1e-7, viol, instances));

  // Identity map: the two paths coincide exactly.
  {
    SplitMix64 rng(derive_seed(opts.seed, 777));
    InstanceParams id_params = params;
    RandomInstance inst = make_instance(rng, id_params, 0);
    const InvarianceMap identity = InvarianceMap::identity(inst.pi0.rows());
    const double r = equivalence_residual(inst.gen, inst.dist, identity,
                                          inst.set, inst.pi0);
    CheckResult c;
    c.name = "identity_map_exact";
    c.value = r;
    c.tolerance = 0.0;
    c.passed = r == 0.0;
    rep.checks.push_back(c);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// two-step (bounds, Pythagorean diagnostics, maximin)
// ---------------------------------------------------------------------------

SuiteReport suite_two_step(const SuiteOptions& opts) {
  SuiteReport rep;
  rep.suite = "two-step";
  rep.seed = opts.seed;
  const int jobs = job_count(opts);

  // Criterion: two-step bound and Hellinger floor on entropy instances.
  {
    const int instances = 100;
    struct Out {
      double delta = 0.0;
      double bound1 = kInf, bound2 = kInf, hell = kInf, order = kInf;
    };
    InstanceParams params;
    params.n_max = 6;
    params.d_max = 4;
    params.affine = false;
    params.kinds = {GeneratorKind::NegativeEntropy};
    std::function<Out(int)> work = [&](int i) {
      SplitMix64 rng(derive_seed(opts.seed, 1000 + static_cast<std::uint64_t>(i)));
      RandomInstance inst = make_instance(rng, params, 0);
      Out out;
      const GeneratorSpec& gen = inst.gen;
      const TwoStepResult two =
          two_step_projection(gen, inst.dist, inst.phi, inst.set, inst.pi0);
      out.delta = two_step_delta(gen, inst.dist, inst.phi, inst.pi0);
      const double improv = improvement(gen, inst.dist, inst.pi_star,
                                        inst.pi0, two.final);
      const double hop1 = expected_divergence(gen, inst.dist, two.final,
                                              two.intermediate);
      const double hop0 = expected_divergence(gen, inst.dist,
                                              two.intermediate, inst.pi0);
      out.bound1 = improv - (hop1 + hop0);
      out.bound2 = improv - (hop1 + out.delta);
      out.hell = improv - hellinger_improvement_floor(inst.dist, inst.phi,
                                                      inst.pi0);
      const SolveResult direct = direct_projection(gen, inst.dist, inst.phi,
                                                   inst.set, inst.pi0);
      if ((direct.table - two.final).cwiseAbs().maxCoeff() <= 1e-7) {
        const double dterm =
            expected_divergence(gen, inst.dist, direct.table, inst.pi0);
        out.order = dterm - (hop1 + hop0);
      }
      return out;
    };
    const auto outs = parallel_map<Out>(instances, jobs, work);
    double dmin = kInf, b1 = kInf, b2 = kInf, hl = kInf, ord = kInf;
    int vd = 0, v1 = 0, v2 = 0, vh = 0, vo = 0;
    for (const auto& o : outs) {
      dmin = std::min(dmin, o.delta);
      b1 = std::min(b1, o.bound1);
      b2 = std::min(b2, o.bound2);
      hl = std::min(hl, o.hell);
      ord = std::min(ord, o.order);
      if (o.delta < -tol_or(opts, 1e-12)) ++vd;
      if (o.bound1 < -tol_or(opts, 1e-8)) ++v1;
      if (o.bound2 < -tol_or(opts, 1e-8)) ++v2;
      if (o.hell < -tol_or(opts, 1e-8)) ++vh;
      if (o.order < -tol_or(opts, 1e-8)) ++vo;
    }
    rep.checks.push_back(aggregate("delta_nonnegative", dmin, 1e-12, vd,
                                   instances));
    rep.checks.push_back(aggregate("two_step_bound", b1, 1e-8, v1, instances));
    rep.checks.push_back(aggregate("two_step_bound_delta_form", b2, 1e-8, v2,
                                   instances));
    rep.checks.push_back(aggregate("hellinger_floor_le_improvement", hl, 1e-8,
                                   vh, instances));
    rep.checks.push_back(aggregate("direct_guarantee_dominates", ord, 1e-8, vo,
                                   instances));
  }

  // Criterion: Pythagorean equality on blocks-only affine geometry and the
  // inequality on capped sets.
  {
    const int instances = 50;
    struct Out {
      double eq = 0.0;
      double ineq = kInf;
    };
    std::function<Out(int)> work = [&](int i) {
      SplitMix64 rng(derive_seed(opts.seed, 2000 + static_cast<std::uint64_t>(i)));
      InstanceParams params;
      params.n_max = 6;
      params.d_max = 4;
      params.caps = false;
      params.affine = false;
      params.kinds = {GeneratorKind::NegativeEntropy,
                      GeneratorKind::SquaredEuclidean,
                      GeneratorKind::Mahalanobis};
      RandomInstance inst = make_instance(rng, params, i);
      const ConvexModelSet blocks_only =
          coherent_restriction(inst.set, inst.phi);
      const SolveResult proj = bregman_project(inst.gen, inst.dist,
                                               blocks_only, inst.pi0);
      Out out;
      out.eq = std::abs(pythagorean_residual(inst.gen, inst.dist, inst.pi_star,
                                             proj.table, inst.pi0));
      // Capped variant keeps the inequality direction only.
      InstanceParams capped = params;
      capped.caps = true;
      RandomInstance inst2 = make_instance(rng, capped, i);
      const SolveResult proj2 = direct_projection(
          inst2.gen, inst2.dist, inst2.phi, inst2.set, inst2.pi0);
      out.ineq = pythagorean_residual(inst2.gen, inst2.dist, inst2.pi_star,
                                      proj2.table, inst2.pi0);
      return out;
    };
    const auto outs = parallel_map<Out>(instances, jobs, work);
    double eq = 0.0, ineq = kInf;
    int ve = 0, vi = 0;
    for (const auto& o : outs) {
      eq = std::max(eq, o.eq);
      ineq = std::min(ineq, o.ineq);
      if (o.eq > tol_or(opts, 1e-9)) ++ve;
      if (o.ineq < -tol_or(opts, 1e-9)) ++vi;
    }
    rep.checks.push_back(
        aggregate("pythagorean_equality_affine", eq, 1e-9, ve, instances));
    rep.checks.push_back(
        aggregate("pythagorean_inequality_capped", ineq, 1e-9, vi, instances));
  }

  // Criterion: maximin optimality of the two-step output on small instances.
  {
    const int instances = 20;
    struct Out {
      double gap = 0.0;
      bool aligned = false;
    };
    std::function<Out(int)> work = [&](int i) {
      SplitMix64 rng(derive_seed(opts.seed, 3000 + static_cast<std::uint64_t>(i)));
      const bool use_sq = i % 2 == 0;
      const Eigen::Index d = 2;
      InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
      Vector w(2);
      if (use_sq) {
        // Grid-aligned data keeps the two-step output on the panel.
        w << 0.5, 0.5;
      } else {
        w << 0.3 + 0.4 * rng.uniform(), 0.0;
        w[1] = 1.0 - w[0];
      }
      PromptDistribution dist(w);
      Matrix pi0(2, d);
      if (use_sq) {
        const double a = std::round(rng.uniform() * 100.0) / 100.0;
        const double b = std::round(rng.uniform() * 100.0) / 100.0;
        pi0 << a, 1.0 - a, b, 1.0 - b;
      } else {
        pi0.row(0) = simplex_row(rng, d, 0.15).transpose();
        pi0.row(1) = simplex_row(rng, d, 0.15).transpose();
      }
      const ConvexModelSet set = ConvexModelSet::simplex_product(2, d);
      const GeneratorSpec gen =
          use_sq ? squared_euclidean() : negative_entropy();

      const TwoStepResult two = two_step_projection(gen, dist, phi, set, pi0);
      std::vector<Matrix> panel;
      const int levels = 200;  // grid step 0.005
      for (int k = 0; k <= levels; ++k) {
        const double t = static_cast<double>(k) / levels;
        Matrix m(2, 2);
        m << t, 1.0 - t, t, 1.0 - t;
        panel.push_back(std::move(m));
      }
      panel.push_back(two.final);  // structured candidate
      Out out;
      out.gap = maximin_gap(gen, dist, phi, set, pi0, two.final, panel);
      out.aligned = use_sq;
      return out;
    };
    const auto outs = parallel_map<Out>(instances, jobs, work);
    double worst_low = kInf, worst_abs = 0.0;
    int vl = 0, va = 0, aligned_total = 0;
    for (const auto& o : outs) {
      worst_low = std::min(worst_low, o.gap);
      if (o.gap < -tol_or(opts, 1e-5)) ++vl;
      if (o.aligned) {
        ++aligned_total;
        worst_abs = std::max(worst_abs, std::abs(o.gap));
        if (std::abs(o.gap) > tol_or(opts, 1e-5)) ++va;
      }
    }
    rep.checks.push_back(
        aggregate("maximin_gap_lower", worst_low, 1e-5, vl, instances));
    rep.checks.push_back(aggregate("maximin_gap_two_sided_aligned", worst_abs,
                                   1e-5, va, aligned_total));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// relaxed
// ---------------------------------------------------------------------------

SuiteReport suite_relaxed(const SuiteOptions& opts) {
  SuiteReport rep;
  rep.suite = "relaxed";
  rep.seed = opts.seed;
  const int jobs = job_count(opts);

  // Floor validity on Phi-invariant distributions (Delta_coh = gamma0/4).
  {
    const int instances = 100;
    std::function<double(int)> work = [&](int i) {
      SplitMix64 rng(derive_seed(opts.seed, 4000 + static_cast<std::uint64_t>(i)));
      InstanceParams params;
      params.n_max = 5;
      params.d_max = 3;
      params.caps = false;
      params.affine = false;
      params.phi_invariant_dist = true;
      params.kinds = {GeneratorKind::NegativeEntropy,
                      GeneratorKind::SquaredEuclidean};
      RandomInstance inst = make_instance(rng, params, i);
      const GeneratorSpec& gen = inst.gen;
      SoftDivergenceSpec soft;
      if (gen.norm_tag == NormTag::L1) {
        const double pick = rng.uniform();
        soft = pick < 0.34   ? SoftDivergenceSpec::jensen_shannon()
               : pick < 0.67 ? SoftDivergenceSpec::squared_hellinger()
                             : SoftDivergenceSpec::kl_symmetrized();
      } else {
        soft = SoftDivergenceSpec::squared_euclidean();
      }
      const double gamma0 = incoherence_gamma0(inst.dist, inst.pi0, inst.phi,
                                               gen.norm_tag);
      const double delta_coh = gamma0 / 4.0;  // Phi-invariant distribution
      KahanSum c0;
      for (Eigen::Index x = 0; x < inst.pi0.rows(); ++x)
        c0.add(inst.dist[x] *
               soft_divergence(soft, inst.pi0.row(x).transpose(),
                               inst.pi0.row(inst.phi(x)).transpose()));
      const double cap = std::max(1e-6, c0.value() * (0.1 + 0.8 * rng.uniform()));
      const RelaxedResult res = relaxed_project(gen, soft, cap, inst.dist,
                                                inst.phi, inst.pi0);
      const double floor = relaxed_improvement_floor(gen.require_mu(),
                                                     soft.mu_d, cap, delta_coh);
      // Worst coherent reference over a small panel.
      double worst = kInf;
      const OrbitPartition part = orbit_partition(inst.phi);
      for (int k = 0; k < 8; ++k) {
        Matrix star(inst.pi0.rows(), inst.pi0.cols());
        for (const auto& orbit : part.orbits) {
          const Vector row = simplex_row(rng, inst.pi0.cols(), 0.1);
          for (auto x : orbit) star.row(x) = row.transpose();
        }
        worst = std::min(worst, improvement(gen, inst.dist, star, inst.pi0,
                                            res.table));
      }
      return worst - floor;
    };
    const auto slacks = parallel_map<double>(instances, jobs, work);
    double worst = kInf;
    int viol = 0;
    for (double s : slacks) {
      worst = std::min(worst, s);
      if (s < -tol_or(opts, 1e-6)) ++viol;
    }
    rep.checks.push_back(
        aggregate("relaxed_floor_validity", worst, 1e-6, viol, instances));
  }

  // Monotonicity of the penalized path and the closed-form oracle.
  {
    SplitMix64 rng(derive_seed(opts.seed, 4100));
    InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
    PromptDistribution dist = PromptDistribution::uniform(2);
    Matrix pi0(2, 2);
    pi0 << 0.1, 0.9, 0.8, 0.2;
    const GeneratorSpec gen = squared_euclidean();
    const SoftDivergenceSpec soft = SoftDivergenceSpec::squared_euclidean();

    double prev_constraint = kInf, prev_obj = -kInf;
    bool monotone = true;
    for (double lam : {0.0, 0.3, 1.0, 3.0, 10.0, 100.0}) {
      const RelaxedResult r =
          penalized_project(gen, soft, lam, dist, phi, pi0);
      if (r.constraint_value > prev_constraint + 1e-9) monotone = false;
      if (r.report.objective < prev_obj - 1e-9) monotone = false;
      prev_constraint = r.constraint_value;
      prev_obj = r.report.objective;
    }
    CheckResult mono;
    mono.name = "penalized_path_monotone";
    mono.value = monotone ? 0.0 : 1.0;
    mono.tolerance = 0.0;
    mono.passed = monotone;
    rep.checks.push_back(mono);

    // Closed-form shrinkage oracle: constraint at half the incoherence
    // forces t = 1/sqrt(2) along the difference direction.
    KahanSum c0;
    for (Eigen::Index x = 0; x < 2; ++x)
      c0.add(dist[x] * soft_divergence(soft, pi0.row(x).transpose(),
                                       pi0.row(phi(x)).transpose()));
    const double cap = 0.5 * c0.value();
    const RelaxedResult r = relaxed_project(gen, soft, cap, dist, phi, pi0);
    const double t = 1.0 / std::sqrt(2.0);
    const Vector mean = 0.5 * (pi0.row(0) + pi0.row(1)).transpose();
    const Vector diff = 0.5 * (pi0.row(0) - pi0.row(1)).transpose();
    Matrix expected(2, 2);
    expected.row(0) = (mean + t * diff).transpose();
    expected.row(1) = (mean - t * diff).transpose();
    CheckResult oracle;
    oracle.name = "shrinkage_oracle";
    oracle.value = (r.table - expected).cwiseAbs().maxCoeff();
    oracle.tolerance = tol_or(opts, 1e-6);
    oracle.passed = oracle.value <= oracle.tolerance;
    rep.checks.push_back(oracle);

    CheckResult active;
    active.name = "shrinkage_constraint_active";
    active.value = r.constraint_value - cap;
    active.tolerance = tol_or(opts, 1e-9);
    active.passed = std::abs(active.value) <= active.tolerance;
    rep.checks.push_back(active);

    // Lambda -> 0 recovers the coherent projection.
    const RelaxedResult tight =
        relaxed_project(gen, soft, 1e-10, dist, phi, pi0);
    const SolveResult direct = direct_projection(
        gen, dist, phi, ConvexModelSet::simplex_product(2, 2), pi0);
    CheckResult limit;
    limit.name = "lambda_to_zero_limit";
    limit.value = (tight.table - direct.table).cwiseAbs().maxCoeff();
    limit.tolerance = tol_or(opts, 1e-4);
    limit.passed = limit.value <= limit.tolerance;
    rep.checks.push_back(limit);

    // Inactive constraint returns the baseline with zero multiplier.
    const RelaxedResult loose =
        relaxed_project(gen, soft, 10.0, dist, phi, pi0);
    CheckResult inactive;
    inactive.name = "inactive_constraint_identity";
    inactive.value = (loose.table - pi0).cwiseAbs().maxCoeff() +
                     std::abs(loose.multiplier);
    inactive.tolerance = 0.0;
    inactive.passed = inactive.value == 0.0;
    rep.checks.push_back(inactive);
  }

  // Joint convexity spot checks for every soft divergence kind.
  {
    SplitMix64 rng(derive_seed(opts.seed, 4200));
    const std::vector<SoftDivergenceSpec> kinds = {
        SoftDivergenceSpec::kl_symmetrized(),
        SoftDivergenceSpec::jensen_shannon(),
        SoftDivergenceSpec::squared_hellinger(),
        SoftDivergenceSpec::squared_euclidean(),
        SoftDivergenceSpec::tv_squared_surrogate()};
    double worst = 0.0;
    for (const auto& spec : kinds)
      for (int i = 0; i < 200; ++i) {
        const Eigen::Index d = 3;
        const Vector p1 = simplex_row(rng, d, 0.1);
        const Vector q1 = simplex_row(rng, d, 0.1);
        const Vector p2 = simplex_row(rng, d, 0.1);
        const Vector q2 = simplex_row(rng, d, 0.1);
        const double t = rng.uniform();
        const double mix =
            soft_divergence(spec, t * p1 + (1 - t) * p2, t * q1 + (1 - t) * q2);
        const double sep = t * soft_divergence(spec, p1, q1) +
                           (1 - t) * soft_divergence(spec, p2, q2);
        worst = std::max(worst, mix - sep);
      }
    CheckResult c;
    c.name = "soft_divergences_jointly_convex";
    c.value = worst;
    c.tolerance = tol_or(opts, 1e-12);
    c.passed = worst <= c.tolerance;
    rep.checks.push_back(c);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// empirical
// ---------------------------------------------------------------------------

SuiteReport suite_empirical(const SuiteOptions& opts) {
  SuiteReport rep;
  rep.suite = "empirical";
  rep.seed = opts.seed;
  const int jobs = job_count(opts);

  // Optimality invariants and the grid-refined main inequality, 50 seeds.
  {
    const int seeds = 50;
    struct Out {
      double pop_opt = kInf;    // E[B(pihat||pi0)] - E[B(pihat_S||pi0)] <= 0
      double emp_opt = kInf;    // empirical optimality margin
      double grid_main = kInf;  // main inequality slack with grid epsilon
      double simplified = kInf; // pi* = pihat simplified bound slack
    };
    std::function<Out(int)> work = [&](int i) {
      SplitMix64 rng(derive_seed(opts.seed, 5000 + static_cast<std::uint64_t>(i)));
      // Fixed-shape small instance: n = 4, d = 2, simplex base, SqE.
      const Eigen::Index n = 4, d = 2;
      InvarianceMap phi({1, 0, 3, 2});
      Vector w(n);
      for (Eigen::Index k = 0; k < n; ++k) w[k] = 0.2 + rng.uniform();
      PromptDistribution dist(w / w.sum());
      Matrix pi0(n, d);
      for (Eigen::Index k = 0; k < n; ++k)
        pi0.row(k) = simplex_row(rng, d, 0.1).transpose();
      const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
      const GeneratorSpec gen = squared_euclidean();

      const PromptSample sample = sample_prompts(dist, 40, rng.next_u64());
      const Vector emp_w = empirical_weights(sample, n);
      const ConvexModelSet coherent = coherent_restriction(set, phi);
      const SolveResult pop = bregman_project(gen, dist, coherent, pi0);
      const SolveResult emp = empirical_projection(gen, sample, phi, set, pi0);

      Out out;
      out.pop_opt = expected_divergence(gen, dist, emp.table, pi0) -
                    expected_divergence(gen, dist, pop.table, pi0);
      // Empirical optimality against a panel including the population optimum.
      double worst_emp = kInf;
      const OrbitPartition part = orbit_partition(phi);
      std::vector<Matrix> panel{pop.table};
      for (int k = 0; k < 8; ++k) {
        Matrix cand(n, d);
        for (const auto& orbit : part.orbits) {
          const Vector row = simplex_row(rng, d, 0.05);
          for (auto x : orbit) cand.row(x) = row.transpose();
        }
        panel.push_back(std::move(cand));
      }
      for (const auto& cand : panel)
        worst_emp = std::min(
            worst_emp, weighted_divergence(gen, emp_w, cand, pi0) -
                           weighted_divergence(gen, emp_w, emp.table, pi0));
      out.emp_opt = worst_emp;

      const BoundReport bounds = empirical_bound_report(
          gen, dist, sample, set, phi, pi0, pop.table, 12, std::nullopt, 0.02);
      out.grid_main = bounds.main_theorem_grid ? bounds.main_theorem_grid->slack
                                               : kInf;
      out.simplified = bounds.main_theorem.slack;
      return out;
    };
    const auto outs = parallel_map<Out>(seeds, jobs, work);
    double pop = kInf, emp = kInf, grid = kInf, simp = kInf;
    int vp = 0, ve = 0, vg = 0, vs = 0;
    for (const auto& o : outs) {
      pop = std::min(pop, o.pop_opt);
      emp = std::min(emp, o.emp_opt);
      grid = std::min(grid, o.grid_main);
      simp = std::min(simp, o.simplified);
      if (o.pop_opt < -tol_or(opts, 1e-9)) ++vp;
      if (o.emp_opt < -tol_or(opts, 1e-9)) ++ve;
      if (o.grid_main < -tol_or(opts, 1e-8)) ++vg;
      if (o.simplified < -tol_or(opts, 1e-8)) ++vs;
    }
    rep.checks.push_back(aggregate("population_optimality_exact", pop, 1e-9,
                                   vp, seeds));
    rep.checks.push_back(aggregate("empirical_optimality_exact", emp, 1e-9,
                                   ve, seeds));
    rep.checks.push_back(aggregate("main_inequality_grid_epsilon", grid, 1e-8,
                                   vg, seeds));
    rep.checks.push_back(aggregate("main_inequality_pistar_is_pihat", simp,
                                   1e-8, vs, seeds));
  }

  // Consistency: median distance at m = 1e5 over 20 seeds.
  {
    SplitMix64 rng(derive_seed(opts.seed, 5100));
    const Eigen::Index n = 4, d = 3;
    InvarianceMap phi({1, 0, 3, 2});
    Vector w(n);
    w << 0.35, 0.15, 0.3, 0.2;
    PromptDistribution dist(w);
    Matrix pi0(n, d);
    for (Eigen::Index k = 0; k < n; ++k)
      pi0.row(k) = simplex_row(rng, d, 0.1).transpose();
    const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
    const GeneratorSpec gen = negative_entropy();
    const SolveResult pop =
        bregman_project(gen, dist, coherent_restriction(set, phi), pi0);

    std::function<double(int)> work = [&](int s) {
      const PromptSample sample = sample_prompts(
          dist, 100000, derive_seed(opts.seed, 5200 + static_cast<std::uint64_t>(s)));
      const SolveResult emp = empirical_projection(gen, sample, phi, set, pi0);
      return (emp.table - pop.table).cwiseAbs().maxCoeff();
    };
    auto dists = parallel_map<double>(20, jobs, work);
    std::sort(dists.begin(), dists.end());
    const double median = 0.5 * (dists[9] + dists[10]);
    CheckResult c;
    c.name = "large_sample_consistency_median";
    c.value = median;
    c.tolerance = tol_or(opts, 0.02);
    c.passed = median <= c.tolerance;
    rep.checks.push_back(c);
  }

  // Reproducibility: identical seed gives bit-identical samples and solves.
  {
    SplitMix64 rng(derive_seed(opts.seed, 5300));
    const Eigen::Index n = 4, d = 2;
    InvarianceMap phi({1, 0, 3, 2});
    PromptDistribution dist = PromptDistribution::uniform(n);
    Matrix pi0(n, d);
    for (Eigen::Index k = 0; k < n; ++k)
      pi0.row(k) = simplex_row(rng, d, 0.1).transpose();
    const ConvexModelSet set = ConvexModelSet::simplex_product(n, d);
    const PromptSample s1 = sample_prompts(dist, 37, 123456789ULL);
    const PromptSample s2 = sample_prompts(dist, 37, 123456789ULL);
    const SolveResult r1 =
        empirical_projection(squared_euclidean(), s1, phi, set, pi0);
    const SolveResult r2 =
        empirical_projection(squared_euclidean(), s2, phi, set, pi0);
    CheckResult c;
    c.name = "seeded_reproducibility";
    c.value = (s1.indices == s2.indices && r1.table == r2.table) ? 0.0 : 1.0;
    c.tolerance = 0.0;
    c.passed = c.value == 0.0;
    rep.checks.push_back(c);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// minimax / orbit-average / impossibility
// ---------------------------------------------------------------------------

SuiteReport suite_minimax(const SuiteOptions& opts) {
  SuiteReport rep;
  rep.suite = "minimax";
  rep.seed = opts.seed;
  for (double m : {2.0, 5.0, 6.0, 10.0, 100.0}) {
    const MinimaxReport r = minimax_counterexample(m);
    CheckResult c;
    c.name = "M=" + std::to_string(static_cast<int>(m));
    c.value = r.gap - r.gap_formula;
    c.tolerance = tol_or(opts, 1e-12);
    c.passed = r.ok;
    c.detail = "gap=" + std::to_string(r.gap) +
               (r.violation ? " violation" : " no violation");
    rep.checks.push_back(c);
  }
  {
    const MinimaxReport r = minimax_counterexample(10.0);
    CheckResult c;
    c.name = "M=10_violation_reproduced";
    c.value = r.gap;
    c.tolerance = 0.0;
    c.passed = r.violation && std::abs(r.gap - 0.625) <= 1e-12;
    rep.checks.push_back(c);
  }
  return rep;
}

SuiteReport suite_orbit_average(const SuiteOptions& opts) {
  SplitMix64 rng(opts.seed);
  std::vector<GeneratorSpec> family = {squared_euclidean(), negative_entropy(),
                                       mahalanobis(random_spd(rng, 3)),
                                       negative_log()};
  SuiteReport rep = orbit_average_universal_check(family, 200, opts.seed);
  rep.suite = "orbit-average";
  return rep;
}

SuiteReport suite_impossibility(const SuiteOptions& opts) {
  SuiteReport rep;
  rep.suite = "impossibility";
  rep.seed = opts.seed;

  // Jointly convex kinds admit no reversed-Jensen witness.
  for (const auto& [name, gen] :
       {std::pair<std::string, GeneratorSpec>{"squared_euclidean",
                                              squared_euclidean()},
        std::pair<std::string, GeneratorSpec>{"negative_entropy",
                                              negative_entropy()}}) {
    const auto witness = reversed_jensen_witness(gen, 100000, opts.seed);
    CheckResult c;
    c.name = name + "/no_reversed_jensen";
    c.value = witness ? witness->lhs - witness->rhs : 0.0;
    c.tolerance = 0.0;
    c.passed = !witness.has_value();
    rep.checks.push_back(c);
  }
  // The Itakura-Saito generator is not jointly convex: witness expected,
  // and it must re-verify under independent arithmetic.
  {
    const auto witness =
        reversed_jensen_witness(negative_log(), 100000, opts.seed);
    CheckResult c;
    c.name = "negative_log/reversed_jensen_witness";
    c.negative_control = true;
    if (witness) {
      long double lhs = 0.0L, rhs = 0.0L;
      for (Eigen::Index k = 0; k < 2; ++k) {
        const long double p = witness->p_star[k];
        const long double mix = witness->lambda * witness->q1[k] +
                                (1.0L - (long double)witness->lambda) *
                                    witness->q2[k];
        lhs += p / mix - std::log((double)(p / mix)) - 1.0L;
        const long double r1 =
            p / witness->q1[k] - std::log((double)(p / witness->q1[k])) - 1.0L;
        const long double r2 =
            p / witness->q2[k] - std::log((double)(p / witness->q2[k])) - 1.0L;
        rhs += witness->lambda * r1 +
               (1.0L - (long double)witness->lambda) * r2;
      }
      c.value = static_cast<double>(lhs - rhs);
      c.passed = lhs > rhs + 1e-9;
      c.detail = "witness margin re-verified";
    } else {
      c.value = 0.0;
      c.passed = false;
      c.detail = "no witness found";
    }
    c.tolerance = 1e-9;
    rep.checks.push_back(c);
  }

  // Orbit-infeasibility construction: cap q1 <= 1/2 with orbit mean 0.6.
  {
    InvarianceMap phi = InvarianceMap::swap(2, 0, 1);
    PromptDistribution dist = PromptDistribution::uniform(2);
    Matrix pi0(2, 3);
    pi0 << 0.9, 0.05, 0.05, 0.3, 0.5, 0.2;  // orbit mean q1 = 0.6
    ConvexModelSet set = ConvexModelSet::simplex_product(2, 3);
    set.with_cap(0, 0, 0.5).with_cap(1, 0, 0.5);
    const InfeasibilityWitnessReport r =
        orbit_infeasibility_witness(set, dist, phi, pi0);
    CheckResult c;
    c.name = "orbit_infeasibility_margin_positive";
    c.value = r.min_margin;
    c.tolerance = 0.0;
    c.passed = r.applicable && r.min_margin > 0.0 && r.candidates > 0;
    c.detail = std::to_string(r.candidates) + " candidates";
    rep.checks.push_back(c);

    // Feasible orbit mean is reported as not applicable.
    Matrix tame(2, 3);
    tame << 0.4, 0.4, 0.2, 0.2, 0.5, 0.3;
    const InfeasibilityWitnessReport ok =
        orbit_infeasibility_witness(set, dist, phi, tame);
    CheckResult c2;
    c2.name = "orbit_feasible_not_applicable";
    c2.value = ok.applicable ? 1.0 : 0.0;
    c2.tolerance = 0.0;
    c2.passed = !ok.applicable;
    rep.checks.push_back(c2);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// characterization
// ---------------------------------------------------------------------------

SuiteReport suite_characterization(const SuiteOptions& opts) {
  SuiteReport rep;
  rep.suite = "characterization";
  rep.seed = opts.seed;
  const int instances = 24;
  std::function<CheckResult(int)> work = [&](int i) {
    SplitMix64 rng(derive_seed(opts.seed, 6000 + static_cast<std::uint64_t>(i)));
    InstanceParams params;
    params.n_max = 6;
    params.d_max = 4;
    params.affine = false;
    params.kinds = {GeneratorKind::SquaredEuclidean,
                    GeneratorKind::NegativeEntropy,
                    GeneratorKind::Mahalanobis};
    RandomInstance inst = make_instance(rng, params, i);
    const SolveResult proj = direct_projection(inst.gen, inst.dist, inst.phi,
                                               inst.set, inst.pi0);
    // The mechanism's feasible class is the coherent restriction; the strong
    // improvement inequality holds over that class, not all of the base set.
    const ConvexModelSet mechanism_class =
        coherent_restriction(inst.set, inst.phi);
    const CharacterizationResult res = single_f_characterization_check(
        inst.gen, inst.dist, mechanism_class, inst.pi0, proj.table,
        derive_seed(opts.seed, 6500 + static_cast<std::uint64_t>(i)));
    CheckResult c;
    c.name = "projection_refound/instance_" + std::to_string(i);
    c.value = res.value;
    c.tolerance = tol_or(opts, 1e-7);
    c.passed = res.inequality_holds && res.value <= c.tolerance;
    return c;
  };
  auto checks = parallel_map<CheckResult>(instances, job_count(opts), work);
  double worst = 0.0;
  int viol = 0;
  for (auto& c : checks) {
    worst = std::max(worst, c.value);
    if (!c.passed) ++viol;
  }
  rep.checks.push_back(aggregate("mechanism_equals_levelset_projection", worst,
                                 1e-7, viol, instances));

  // Tied-rows baseline inside the cube: the inequality holds trivially and
  // the strictness functional vanishes.
  {
    PromptDistribution dist = PromptDistribution::uniform(3);
    Matrix pi0(3, 1);
    pi0 << 0.5, 0.5, 0.2;
    const ConvexModelSet cube = ConvexModelSet::cube_product(3, 1);
    const CharacterizationResult res = single_f_characterization_check(
        squared_euclidean(), dist, cube, pi0, pi0, opts.seed);
    CheckResult c;
    c.name = "tied_baseline_zero_strictness";
    c.value = std::abs(res.value) + std::abs(res.strictness_inf_estimate);
    c.tolerance = tol_or(opts, 1e-9);
    c.passed = res.inequality_holds && c.value <= c.tolerance;
    rep.checks.push_back(c);
  }

  // Negative control: a far corner violates the strong improvement
  // inequality and is reported as such.
  {
    PromptDistribution dist = PromptDistribution::uniform(3);
    Matrix pi0(3, 2);
    pi0 << 0.5, 0.5, 0.4, 0.6, 0.7, 0.3;
    const ConvexModelSet set = ConvexModelSet::simplex_product(3, 2);
    Matrix corner(3, 2);
    corner << 1, 0, 1, 0, 1, 0;
    const CharacterizationResult res = single_f_characterization_check(
        squared_euclidean(), dist, set, pi0, corner, opts.seed);
    CheckResult c;
    c.name = "corner_violates_inequality";
    c.negative_control = true;
    c.value = res.value;
    c.tolerance = 0.0;
    c.passed = !res.inequality_holds && res.value > 0.0;
    rep.checks.push_back(c);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// rigidity / kernel
// ---------------------------------------------------------------------------

SuiteReport suite_rigidity(const SuiteOptions& opts) {
  SuiteReport rep = rigidity_affine_examples();
  rep.suite = "rigidity";
  rep.seed = opts.seed;

  // Four-point equilibrium on affine geometry, plus the trivial F = G case.
  {
    PromptDistribution dist = PromptDistribution::uniform(4);
    Matrix pi0(4, 1);
    pi0 << 0.1, 0.3, 0.9, 0.5;
    ConvexModelSet set = ConvexModelSet::cube_product(4, 1);
    set.with_blocks(BlockPartition({{0, 1}, {2, 3}}));
    const double a_fg = four_point_residual(squared_euclidean(),
                                            negative_entropy(), dist, set, pi0);
    CheckResult c;
    c.name = "four_point_equilibrium_affine";
    c.value = a_fg;
    c.tolerance = tol_or(opts, 1e-8);
    c.passed = std::abs(a_fg) <= c.tolerance;
    rep.checks.push_back(c);

    const double a_ff = four_point_residual(negative_entropy(),
                                            negative_entropy(), dist, set, pi0);
    CheckResult c2;
    c2.name = "four_point_equilibrium_same_generator";
    c2.value = a_ff;
    c2.tolerance = tol_or(opts, 1e-14);
    c2.passed = std::abs(a_ff) <= c2.tolerance;
    rep.checks.push_back(c2);

    // Affine-rows variant of the sum-constraint example.
    Matrix base(3, 1);
    base << 0.30, 0.30, 0.60;
    ConvexModelSet sum_set = ConvexModelSet::cube_product(3, 1);
    sum_set.with_affine(Matrix::Ones(3, 1), 1.0);
    const double a_sum =
        four_point_residual(squared_euclidean(), negative_entropy(),
                            PromptDistribution::uniform(3), sum_set, base);
    CheckResult c3;
    c3.name = "four_point_equilibrium_sum_constraint";
    c3.value = a_sum;
    c3.tolerance = tol_or(opts, 1e-8);
    c3.passed = std::abs(a_sum) <= c3.tolerance;
    rep.checks.push_back(c3);

    // Negative control: an active cap voids the contract; report only.
    ConvexModelSet capped = ConvexModelSet::cube_product(4, 1);
    capped.with_blocks(BlockPartition({{0, 1}, {2, 3}})).with_cap(2, 0, 0.6);
    const double a_cap = four_point_residual(
        squared_euclidean(), negative_entropy(), dist, capped, pi0);
    CheckResult c4;
    c4.name = "four_point_capped_reported_only";
    c4.negative_control = true;
    c4.value = a_cap;
    c4.tolerance = kInf;
    c4.passed = true;  // informational
    c4.detail = "contract void on non-affine sets";
    rep.checks.push_back(c4);
  }
  return rep;
}

SuiteReport suite_kernel(const SuiteOptions& opts) {
  SuiteReport rep = kernel_circle_example();
  rep.suite = "kernel";
  rep.seed = opts.seed;
  return rep;
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"bregman-identities", "direct-improvement", "two-step",
          "equivalence",        "relaxed",            "empirical",
          "minimax",            "orbit-average",      "impossibility",
          "characterization",   "rigidity",           "kernel"};
}

SuiteReport run_suite(const std::string& name, const SuiteOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteReport rep;
  if (name == "bregman-identities") rep = suite_bregman_identities(opts);
  else if (name == "direct-improvement") rep = suite_direct_improvement(opts);
  else if (name == "two-step") rep = suite_two_step(opts);
  else if (name == "equivalence") rep = suite_equivalence(opts);
  else if (name == "relaxed") rep = suite_relaxed(opts);
  else if (name == "empirical") rep = suite_empirical(opts);
  else if (name == "minimax") rep = suite_minimax(opts);
  else if (name == "orbit-average") rep = suite_orbit_average(opts);
  else if (name == "impossibility") rep = suite_impossibility(opts);
  else if (name == "characterization") rep = suite_characterization(opts);
  else if (name == "rigidity") rep = suite_rigidity(opts);
  else if (name == "kernel") rep = suite_kernel(opts);
  else throw UnknownSuite("unknown suite: " + name);
  rep.seed = opts.seed;
  rep.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

std::vector<SuiteReport> run_all_suites(const SuiteOptions& opts) {
  std::vector<SuiteReport> out;
  for (const auto& name : suite_names()) out.push_back(run_suite(name, opts));
  return out;
}

}  // namespace coherence

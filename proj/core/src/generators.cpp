#include "coherence/generators.hpp"

#include <cmath>
#include <limits>

namespace coherence {

namespace {

constexpr double kDomainTol = 0.0;  // exact sign checks; values are inputs, not iterates

void check_symmetric(const Matrix& a) {
  if (a.rows() != a.cols() || !a.isApprox(a.transpose(), 1e-12))
    throw DomainError("generator matrix must be symmetric");
}

const Matrix& require_matrix(const GeneratorSpec& gen) {
  if (!gen.matrix) throw DomainError("generator requires a matrix");
  return *gen.matrix;
}

Vector linear_or_zero(const GeneratorSpec& gen, Eigen::Index d) {
  if (gen.linear) return *gen.linear;
  return Vector::Zero(d);
}

}  // namespace

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::SquaredEuclidean: return "squared_euclidean";
    case GeneratorKind::Mahalanobis: return "mahalanobis";
    case GeneratorKind::NegativeEntropy: return "negative_entropy";
    case GeneratorKind::NegativeLog: return "negative_log";
    case GeneratorKind::QuadraticCoupled: return "quadratic_coupled";
    case GeneratorKind::DiagonalQuadratic: return "diagonal_quadratic";
  }
  return "unknown";
}

GeneratorSpec squared_euclidean() {
  GeneratorSpec g;
  g.kind = GeneratorKind::SquaredEuclidean;
  g.mu = 1.0;
  g.smoothness = 1.0;
  g.norm_tag = NormTag::L2;
  return g;
}

GeneratorSpec negative_entropy() {
  GeneratorSpec g;
  g.kind = GeneratorKind::NegativeEntropy;
  g.mu = 1.0;  // Pinsker: 1-strongly convex w.r.t. the L1 norm on the simplex
  g.norm_tag = NormTag::L1;
  return g;
}

GeneratorSpec negative_log() {
  GeneratorSpec g;
  g.kind = GeneratorKind::NegativeLog;
  g.norm_tag = NormTag::L2;
  return g;
}

GeneratorSpec mahalanobis(const Matrix& a) {
  check_symmetric(a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) throw DomainError("mahalanobis matrix must be positive definite");
  GeneratorSpec g;
  g.kind = GeneratorKind::Mahalanobis;
  g.matrix = a;
  g.mu = lo;
  g.smoothness = hi;
  g.norm_tag = NormTag::L2;
  return g;
}

GeneratorSpec quadratic_coupled(const Matrix& a, const Vector& b) {
  check_symmetric(a);
  if (b.size() != a.rows())
    throw DomainError("quadratic_coupled: linear term has wrong size");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < -1e-10) throw DomainError("quadratic_coupled matrix must be PSD");
  GeneratorSpec g;
  g.kind = GeneratorKind::QuadraticCoupled;
  g.matrix = a;
  g.linear = b;
  g.legendre = lo > 1e-12;
  if (g.legendre) {
    g.mu = lo;
    g.smoothness = es.eigenvalues().maxCoeff();
  }
  g.norm_tag = NormTag::L2;
  return g;
}

GeneratorSpec diagonal_quadratic(const Vector& diag) {
  if ((diag.array() <= 0.0).any())
    throw DomainError("diagonal_quadratic: diagonal must be positive");
  GeneratorSpec g;
  g.kind = GeneratorKind::DiagonalQuadratic;
  g.matrix = Matrix(diag.asDiagonal());
  g.mu = diag.minCoeff();
  g.smoothness = diag.maxCoeff();
  g.norm_tag = NormTag::L2;
  return g;
}

double value(const GeneratorSpec& gen, const Vector& p) {
  switch (gen.kind) {
    case GeneratorKind::SquaredEuclidean:
      return 0.5 * p.squaredNorm();
    case GeneratorKind::Mahalanobis:
      return 0.5 * p.dot(require_matrix(gen) * p);
    case GeneratorKind::QuadraticCoupled:
      return 0.5 * p.dot(require_matrix(gen) * p) +
             linear_or_zero(gen, p.size()).dot(p);
    case GeneratorKind::DiagonalQuadratic:
      return 0.5 * p.dot(require_matrix(gen) * p);
    case GeneratorKind::NegativeEntropy: {
      KahanSum s;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < kDomainTol) throw DomainError("negative_entropy: p must be >= 0");
        s.add(p[i] > 0.0 ? p[i] * std::log(p[i]) : 0.0);
      }
      return s.value();
    }
    case GeneratorKind::NegativeLog: {
      KahanSum s;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0)) throw DomainError("negative_log: p must be > 0");
        s.add(-std::log(p[i]));
      }
      return s.value();
    }
  }
  throw DomainError("unknown generator kind");
}

Vector gradient(const GeneratorSpec& gen, const Vector& p) {
  switch (gen.kind) {
    case GeneratorKind::SquaredEuclidean:
      return p;
    case GeneratorKind::Mahalanobis:
    case GeneratorKind::DiagonalQuadratic:
      return require_matrix(gen) * p;
    case GeneratorKind::QuadraticCoupled:
      return require_matrix(gen) * p + linear_or_zero(gen, p.size());
    case GeneratorKind::NegativeEntropy: {
      Vector g(p.size());
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0))
          throw DomainError("negative_entropy: gradient needs p > 0");
        g[i] = 1.0 + std::log(p[i]);
      }
      return g;
    }
    case GeneratorKind::NegativeLog: {
      Vector g(p.size());
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0)) throw DomainError("negative_log: gradient needs p > 0");
        g[i] = -1.0 / p[i];
      }
      return g;
    }
  }
  throw DomainError("unknown generator kind");
}

Vector dual_map_inverse(const GeneratorSpec& gen, const Vector& u) {
  switch (gen.kind) {
    case GeneratorKind::SquaredEuclidean:
      return u;
    case GeneratorKind::Mahalanobis:
    case GeneratorKind::DiagonalQuadratic:
      return require_matrix(gen).ldlt().solve(u);
    case GeneratorKind::QuadraticCoupled: {
      const Matrix& a = require_matrix(gen);
      if (!gen.legendre)
        throw SingularMatrix("quadratic_coupled: PSD matrix is singular");
      return a.ldlt().solve(u - linear_or_zero(gen, u.size()));
    }
    case GeneratorKind::NegativeEntropy: {
      Vector p(u.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) p[i] = std::exp(u[i] - 1.0);
      return p;
    }
    case GeneratorKind::NegativeLog: {
      Vector p(u.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (!(u[i] < 0.0))
          throw DomainError("negative_log: dual map range is u < 0");
        p[i] = -1.0 / u[i];
      }
      return p;
    }
  }
  throw DomainError("unknown generator kind");
}

double conjugate_value(const GeneratorSpec& gen, const Vector& u) {
  switch (gen.kind) {
    case GeneratorKind::SquaredEuclidean:
      return 0.5 * u.squaredNorm();
    case GeneratorKind::Mahalanobis:
    case GeneratorKind::DiagonalQuadratic:
      return 0.5 * u.dot(require_matrix(gen).ldlt().solve(u));
    case GeneratorKind::QuadraticCoupled: {
      const Matrix& a = require_matrix(gen);
      const Vector w = u - linear_or_zero(gen, u.size());
      if (gen.legendre) return 0.5 * w.dot(a.ldlt().solve(w));
      // Singular PSD: finite only when w lies in the range of A.
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
      Vector x = cod.solve(w);
      if ((a * x - w).norm() > 1e-9 * (1.0 + w.norm()))
        throw DomainError("quadratic_coupled: u outside dom(F*)");
      return 0.5 * w.dot(x);
    }
    case GeneratorKind::NegativeEntropy: {
      KahanSum s;
      for (Eigen::Index i = 0; i < u.size(); ++i) s.add(std::exp(u[i] - 1.0));
      return s.value();
    }
    case GeneratorKind::NegativeLog: {
      KahanSum s;
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (!(u[i] < 0.0)) throw DomainError("negative_log: dom(F*) is u < 0");
        s.add(-1.0 - std::log(-u[i]));
      }
      return s.value();
    }
  }
  throw DomainError("unknown generator kind");
}

double conjugate_divergence(const GeneratorSpec& gen, const Vector& alpha,
                            const Vector& beta) {
  // grad F* = (grad F)^{-1} for Legendre generators.
  const Vector grad_at_beta = dual_map_inverse(gen, beta);
  return conjugate_value(gen, alpha) - conjugate_value(gen, beta) -
         grad_at_beta.dot(alpha - beta);
}

namespace detail {

Vector extended_gradient(const GeneratorSpec& gen, const Vector& p) {
  if (!gen.steep()) return gradient(gen, p);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Vector g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0) throw DomainError("extended_gradient: negative component");
    if (p[i] == 0.0) {
      g[i] = neg_inf;
    } else if (gen.kind == GeneratorKind::NegativeEntropy) {
      g[i] = 1.0 + std::log(p[i]);
    } else {
      g[i] = -1.0 / p[i];
    }
  }
  return g;
}

Vector dual_combination(const Matrix& dual_points, const Vector& lambdas) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Vector u(dual_points.cols());
  for (Eigen::Index j = 0; j < dual_points.cols(); ++j) {
    bool pinned = false;
    KahanSum s;
    for (Eigen::Index k = 0; k < dual_points.rows(); ++k) {
      if (lambdas[k] == 0.0) continue;
      if (dual_points(k, j) == neg_inf) {
        pinned = true;
        break;
      }
      s.add(lambdas[k] * dual_points(k, j));
    }
    u[j] = pinned ? neg_inf : s.value();
  }
  return u;
}

}  // namespace detail

}  // namespace coherence

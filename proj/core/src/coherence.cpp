#include "coherence/coherence.hpp"

#include <cmath>

namespace coherence {

OrbitPartition orbit_partition(const InvarianceMap& phi) {
  const Eigen::Index n = phi.size();
  OrbitPartition part;
  part.orbit_of.assign(static_cast<std::size_t>(n), -1);
  for (Eigen::Index x = 0; x < n; ++x) {
    if (part.orbit_of[static_cast<std::size_t>(x)] != -1) continue;
    std::vector<Eigen::Index> orbit;
    Eigen::Index cur = x;
    while (part.orbit_of[static_cast<std::size_t>(cur)] == -1) {
      part.orbit_of[static_cast<std::size_t>(cur)] =
          static_cast<Eigen::Index>(part.orbits.size());
      orbit.push_back(cur);
      cur = phi(cur);
    }
    part.orbits.push_back(std::move(orbit));
  }
  return part;
}

double lambda_weight(const PromptDistribution& dist, const InvarianceMap& phi,
                     Eigen::Index x) {
  if (!phi.involution_flag)
    throw NotInvolution("lambda_weight requires an involution");
  const double px = dist[x];
  const double py = dist[phi(x)];
  return px / (px + py);
}

bool is_coherent(const Matrix& pi, const InvarianceMap& phi, double tol) {
  for (Eigen::Index x = 0; x < pi.rows(); ++x) {
    const Eigen::Index y = phi(x);
    if ((pi.row(x) - pi.row(y)).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

UnnormalizedModel orbit_average(const GeneratorSpec& gen,
                                const PromptDistribution& dist,
                                const InvarianceMap& phi, const Matrix& pi0) {
  if (pi0.rows() != phi.size())
    throw DomainError("orbit_average: shape mismatch");
  const OrbitPartition part = orbit_partition(phi);
  Matrix out(pi0.rows(), pi0.cols());
  for (const auto& orbit : part.orbits) {
    const Eigen::Index k = static_cast<Eigen::Index>(orbit.size());
    if (k == 1) {  // fixed point: the row is its own centroid
      out.row(orbit[0]) = pi0.row(orbit[0]);
      continue;
    }
    Vector lambdas(k);
    double total = 0.0;
    for (Eigen::Index i = 0; i < k; ++i)
      total += dist[orbit[static_cast<std::size_t>(i)]];
    for (Eigen::Index i = 0; i < k; ++i)
      lambdas[i] = dist[orbit[static_cast<std::size_t>(i)]] / total;
    Matrix duals(k, pi0.cols());
    for (Eigen::Index i = 0; i < k; ++i)
      duals.row(i) = detail::extended_gradient(
                         gen, pi0.row(orbit[static_cast<std::size_t>(i)])
                                  .transpose())
                         .transpose();
    const Vector u = detail::dual_combination(duals, lambdas);
    const Vector center = dual_map_inverse(gen, u);
    for (auto x : orbit) out.row(x) = center.transpose();
  }
  return UnnormalizedModel(out);
}

double incoherence_gamma0(const PromptDistribution& dist, const Matrix& pi0,
                          const InvarianceMap& phi, NormTag norm_tag) {
  if (!phi.involution_flag)
    throw NotInvolution("incoherence_gamma0 requires an involution");
  KahanSum s;
  for (Eigen::Index x = 0; x < pi0.rows(); ++x) {
    const Vector diff = (pi0.row(x) - pi0.row(phi(x))).transpose();
    const double nrm =
        norm_tag == NormTag::L1 ? diff.lpNorm<1>() : diff.norm();
    s.add(dist[x] * nrm * nrm);
  }
  return s.value();
}

double composition_operator_norm(const PromptDistribution& dist,
                                 const InvarianceMap& phi) {
  // ||pi o Phi||^2 = sum_x P(x) ||pi(Phi(x))||^2 = sum_y P(Phi^{-1}(y)) ||pi(y)||^2,
  // so the ratio is maximized by concentrating mass on one prompt.
  std::vector<Eigen::Index> inverse(static_cast<std::size_t>(phi.size()));
  for (Eigen::Index x = 0; x < phi.size(); ++x)
    inverse[static_cast<std::size_t>(phi(x))] = x;
  double best = 0.0;
  for (Eigen::Index y = 0; y < phi.size(); ++y)
    best = std::max(best,
                    dist[inverse[static_cast<std::size_t>(y)]] / dist[y]);
  return std::sqrt(best);
}

DeltaCohBounds delta_coh_bounds(double gamma0, double c_phi) {
  if (gamma0 < 0.0 || c_phi < 0.0)
    throw DomainError("delta_coh_bounds: arguments must be nonnegative");
  DeltaCohBounds b;
  b.lower = gamma0 / ((1.0 + c_phi) * (1.0 + c_phi));
  b.upper = gamma0 / 4.0;
  return b;
}

}  // namespace coherence

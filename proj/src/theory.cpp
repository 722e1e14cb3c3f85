#include "advdist/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace advdist {

namespace {

double erf_accuracy(double margin, double variance) {
  return 0.5 * (1.0 + std::erf(margin / std::sqrt(2.0 * variance)));
}

void require_two_attributes(const PopulationSpec& spec) {
  if (spec.attribute_count() != 2)
    throw std::invalid_argument("fixed-point theory is implemented for two attributes only");
}

void require_single_alignment(const GroupKey& g) {
  if (g.size() != 1) throw std::invalid_argument("two-attribute group key expected");
}

}  // namespace

double train_accuracy_clean(const LinearClassifier& w, const PopulationSpec& spec) {
  return train_accuracy_perturbed(w, spec, 0.0, Eigen::VectorXd::Zero(spec.total_dim()));
}

double train_accuracy_perturbed(const LinearClassifier& w, const PopulationSpec& spec, double eps,
                                const Eigen::VectorXd& delta) {
  if (w.dim() != spec.total_dim() || delta.size() != spec.total_dim())
    throw std::invalid_argument("classifier or direction dimension mismatch");
  if (!(eps >= 0.0)) throw std::invalid_argument("attack budget must be >= 0");
  const Eigen::VectorXd& v = w.weights();
  const double denom = std::sqrt(2.0 * spec.quadratic_form(v));
  const double shift = eps * delta.dot(v);
  double sum = 0.0;
  for (const GroupKey& g : spec.groups())
    sum += group_proportion(spec, g) * std::erf((spec.group_mean(g).dot(v) - shift) / denom);
  return 0.5 * (1.0 + sum);
}

double group_accuracy(const LinearClassifier& w, const PopulationSpec& spec, const GroupKey& g) {
  if (w.dim() != spec.total_dim()) throw std::invalid_argument("classifier dimension mismatch");
  const Eigen::VectorXd& v = w.weights();
  return erf_accuracy(spec.group_mean(g).dot(v), spec.quadratic_form(v));
}

double balanced_test_accuracy(std::span<const double> group_accuracies) {
  if (group_accuracies.empty()) throw std::invalid_argument("no group accuracies given");
  return std::accumulate(group_accuracies.begin(), group_accuracies.end(), 0.0) /
         static_cast<double>(group_accuracies.size());
}

double log_odds(double zeta, double clamp) {
  if (!(zeta > 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta must lie in (0, 1]");
  const double z = std::clamp(zeta, clamp, 1.0 - clamp);
  return std::log(z) - std::log1p(-z);
}

AlignmentTerms alignment_terms(const PopulationSpec& spec, const Eigen::VectorXd& delta) {
  require_two_attributes(spec);
  if (delta.size() != spec.total_dim()) throw std::invalid_argument("direction dimension mismatch");
  const auto& a1 = spec.attribute(0);
  const auto& a2 = spec.attribute(1);
  const Eigen::VectorXd d1 = delta.segment(spec.offset(0), a1.dim());
  const Eigen::VectorXd d2 = delta.segment(spec.offset(1), a2.dim());
  return AlignmentTerms{a1.inner(a1.mu(), d1), a2.inner(a2.mu(), d2), a1.inner(d1, d1) + a2.inner(d2, d2)};
}

double perturbed_variance(double c, const PerturbedProblem& p) {
  const auto& t = p.terms;
  return p.m1 + c * c * p.m2 - 2.0 * p.eps * t.n1 - 2.0 * c * p.eps * t.n2 + p.eps * p.eps * t.n3;
}

double phi(double c, const PerturbedProblem& p) {
  const auto& t = p.terms;
  const double denom = perturbed_variance(c, p);
  if (!(std::abs(denom) > 0.0)) throw std::domain_error("phi: vanishing denominator");
  const double invariant = p.m1 - 2.0 * p.eps * t.n1 - c * p.eps * t.n2 + p.eps * p.eps * t.n3;
  const double spurious = c * p.m2 - p.eps * t.n2;
  return invariant * spurious / denom;
}

double phi_clean(double c, double m1, double m2) {
  const double denom = m1 + c * c * m2;
  if (!(std::abs(denom) > 0.0)) throw std::domain_error("phi: vanishing denominator");
  return m1 * (c * m2) / denom;
}

double perturbed_training_accuracy(double c, const PerturbedProblem& p) {
  const auto& t = p.terms;
  const double v = perturbed_variance(c, p);
  if (!(v > 0.0)) return 0.5;
  // (mu_s - eps delta)^T w*(c) for s = +1 (aligned) and s = -1.
  const double base = p.m1 - 2.0 * p.eps * t.n1 + p.eps * p.eps * t.n3;
  const double aligned = base + c * p.m2 - (1.0 + c) * p.eps * t.n2;
  const double misaligned = base - c * p.m2 - (c - 1.0) * p.eps * t.n2;
  const double denom = std::sqrt(2.0 * v);
  return 0.5 * (1.0 + p.zeta * std::erf(aligned / denom) + (1.0 - p.zeta) * std::erf(misaligned / denom));
}

FixedPointResult solve_fixed_point(double half_log_odds, const PhiFunction& phi_fn, const RootScore& score,
                                   const SolverOptions& options) {
  if (options.grid_cells < 1) throw std::invalid_argument("grid_cells must be >= 1");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto g = [&](double x) {
    try {
      return x - std::tanh(half_log_odds - phi_fn(x));
    } catch (const std::domain_error&) {
      return nan;
    }
  };

  // Nodes: -1, the uniform scan over [-1 + edge, 1 - edge], then 1.
  std::vector<double> nodes;
  nodes.reserve(static_cast<std::size_t>(options.grid_cells) + 3);
  nodes.push_back(-1.0);
  const double lo = -1.0 + options.edge;
  const double hi = 1.0 - options.edge;
  for (int i = 0; i <= options.grid_cells; ++i)
    nodes.push_back(i == options.grid_cells ? hi : lo + (hi - lo) * i / options.grid_cells);
  nodes.push_back(1.0);

  std::vector<double> values(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) values[i] = g(nodes[i]);

  FixedPointResult result;
  std::vector<std::pair<double, double>> brackets;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    double a = nodes[i];
    double b = nodes[i + 1];
    double ga = values[i];
    const double gb = values[i + 1];
    if (std::isnan(ga) || std::isnan(gb)) continue;
    if (ga == 0.0) {
      result.candidates.push_back({a, 0.0, 0.0});
      brackets.emplace_back(a, a);
      continue;
    }
    if (i + 2 == nodes.size() && gb == 0.0) {
      result.candidates.push_back({b, 0.0, 0.0});
      brackets.emplace_back(b, b);
      continue;
    }
    if ((ga < 0.0) == (gb < 0.0) || gb == 0.0) continue;
    double root = 0.5 * (a + b);
    for (int it = 0; it < options.max_bisection_iterations && (b - a) > options.bisection_tolerance; ++it) {
      ++result.iterations;
      root = 0.5 * (a + b);
      const double gm = g(root);
      if (gm == 0.0 || std::isnan(gm)) {
        a = b = root;
        break;
      }
      if ((gm < 0.0) == (ga < 0.0)) {
        a = root;
        ga = gm;
      } else {
        b = root;
      }
    }
    root = 0.5 * (a + b);
    result.candidates.push_back({root, std::abs(g(root)), 0.0});
    brackets.emplace_back(a, b);
  }

  if (result.candidates.empty()) throw SolverError("fixed-point scan found no sign change", result);

  std::size_t best = 0;
  for (std::size_t k = 0; k < result.candidates.size(); ++k) {
    auto& cand = result.candidates[k];
    cand.training_accuracy = score(cand.root);
    if (cand.training_accuracy > result.candidates[best].training_accuracy) best = k;
  }
  result.value = result.candidates[best].root;
  result.residual = result.candidates[best].residual;
  result.bracket = brackets[best];
  if (!(result.residual <= options.tolerance))
    throw SolverError("fixed-point residual " + std::to_string(result.residual) + " above tolerance", result);
  return result;
}

FixedPointResult solve_tau(double m1, double m2, double zeta, const SolverOptions& options) {
  if (!(m1 > 0.0)) throw std::invalid_argument("m1 must be > 0");
  if (!(m2 >= 0.0)) throw std::invalid_argument("m2 must be >= 0");
  const double half = 0.5 * log_odds(zeta, options.zeta_clamp);
  const PerturbedProblem clean{m1, m2, zeta, 0.0, {}};
  return solve_fixed_point(
      half, [m1, m2](double t) { return phi_clean(t, m1, m2); },
      [&clean](double t) { return perturbed_training_accuracy(t, clean); }, options);
}

FixedPointResult solve_c(const PerturbedProblem& problem, const SolverOptions& options) {
  return solve_c(problem, [&problem](double c) { return phi(c, problem); }, options);
}

FixedPointResult solve_c(const PerturbedProblem& problem, const PhiFunction& phi_fn, const SolverOptions& options) {
  if (!(problem.m1 > 0.0)) throw std::invalid_argument("m1 must be > 0");
  if (!(problem.m2 >= 0.0)) throw std::invalid_argument("m2 must be >= 0");
  if (!(problem.eps >= 0.0)) throw std::invalid_argument("attack budget must be >= 0");
  const double half = 0.5 * log_odds(problem.zeta, options.zeta_clamp);
  return solve_fixed_point(
      half, phi_fn, [&problem](double c) { return perturbed_training_accuracy(c, problem); }, options);
}

double group_accuracy_clean(double m1, double m2, double tau, const GroupKey& g) {
  require_single_alignment(g);
  const double v = m1 + tau * tau * m2;
  if (!(v > 0.0)) throw std::domain_error("group accuracy: non-positive variance");
  return erf_accuracy(m1 + g[0] * tau * m2, v);
}

double group_accuracy_perturbed(const PerturbedOptimalCoefficient& coeff, const GroupKey& g) {
  require_single_alignment(g);
  const auto& p = coeff.problem;
  const double c = coeff.c;
  const double v = perturbed_variance(c, p);
  if (!(v > 0.0)) throw std::domain_error("group accuracy: non-positive variance");
  const double s = g[0];
  return erf_accuracy(p.m1 + s * c * p.m2 - p.eps * p.terms.n1 - s * p.eps * p.terms.n2, v);
}

Eigen::VectorXd clean_optimal_weights(const PopulationSpec& spec, double tau) {
  require_two_attributes(spec);
  Eigen::VectorXd w(spec.total_dim());
  const auto& a1 = spec.attribute(0);
  const auto& a2 = spec.attribute(1);
  w.segment(spec.offset(0), a1.dim()) = a1.solve(a1.mu());
  w.segment(spec.offset(1), a2.dim()) = tau * a2.solve(a2.mu());
  return w;
}

Eigen::VectorXd perturbed_optimal_weights(const PopulationSpec& spec, double c, double eps,
                                          const Eigen::VectorXd& delta) {
  require_two_attributes(spec);
  if (delta.size() != spec.total_dim()) throw std::invalid_argument("direction dimension mismatch");
  const auto& a1 = spec.attribute(0);
  const auto& a2 = spec.attribute(1);
  const Eigen::VectorXd d1 = delta.segment(spec.offset(0), a1.dim());
  const Eigen::VectorXd d2 = delta.segment(spec.offset(1), a2.dim());
  Eigen::VectorXd w(spec.total_dim());
  w.segment(spec.offset(0), a1.dim()) = a1.solve(a1.mu() - eps * d1);
  w.segment(spec.offset(1), a2.dim()) = a2.solve(c * a2.mu() - eps * d2);
  return w;
}

TheoryGap theoretical_gap(const PopulationSpec& spec, double eps_inf, ThreatModel threat,
                          const SolverOptions& options) {
  require_two_attributes(spec);
  TheoryGap out;
  out.m1 = separability(spec.attribute(0));
  out.m2 = separability(spec.attribute(1));
  const double zeta = spec.zeta(1);

  out.tau = solve_tau(out.m1, out.m2, zeta, options);
  const LinearClassifier clean(clean_optimal_weights(spec, out.tau.value));
  out.eps = scale_budget(eps_inf, spec.total_dim(), threat);
  out.direction = optimal_direction(clean, threat, out.eps);
  out.terms = alignment_terms(spec, out.direction.delta);

  const PerturbedProblem problem{out.m1, out.m2, zeta, out.eps, out.terms};
  out.c = solve_c(problem, options);
  const PerturbedOptimalCoefficient coeff{out.c.value, problem};

  const GroupKey aligned = GroupKey::aligned(1);
  const GroupKey misaligned = GroupKey::misaligned(1);
  const double clean_accs[] = {group_accuracy_clean(out.m1, out.m2, out.tau.value, aligned),
                               group_accuracy_clean(out.m1, out.m2, out.tau.value, misaligned)};
  const double pert_accs[] = {group_accuracy_perturbed(coeff, aligned), group_accuracy_perturbed(coeff, misaligned)};
  out.clean_balanced = balanced_test_accuracy(clean_accs);
  out.perturbed_balanced = balanced_test_accuracy(pert_accs);
  out.gap = out.perturbed_balanced - out.clean_balanced;
  return out;
}

}  // namespace advdist

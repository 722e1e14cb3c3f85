#include "advdist/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "advdist/format.hpp"
#include "advdist/rng.hpp"

namespace advdist {

namespace {

std::string coords(double mu1, double mu2, double zeta, double eps_inf, ThreatModel threat) {
  std::ostringstream os;
  os << "mu1=" << format_double(mu1) << " mu2=" << format_double(mu2) << " zeta=" << format_double(zeta)
     << " eps=" << format_double(eps_inf) << " threat=" << to_string(threat);
  return os.str();
}

ValidationCheck make_check(std::string kind, std::string where, double value, double threshold) {
  return {std::move(kind), std::move(where), value, threshold, value <= threshold};
}

ValidationCheck failed_check(std::string kind, std::string where, const std::string& message) {
  return {std::move(kind), std::move(where) + " error=" + message, std::numeric_limits<double>::infinity(), 0.0,
          false};
}

PhiFunction phi_for(const PerturbedProblem& problem, bool fault) {
  if (fault) return [problem](double c) { return -phi(c, problem); };
  return [problem](double c) { return phi(c, problem); };
}

struct CleanSetup {
  PopulationSpec spec;
  FixedPointResult tau;
  PerturbationDirection direction;
  PerturbedProblem problem;
};

CleanSetup setup(const SweepConfig& config, double mu1, double mu2, double zeta, double eps_inf,
                 ThreatModel threat, const SolverOptions& solver) {
  PopulationSpec spec = PopulationSpec::two_feature(mu1, mu2, zeta, config.var1, config.var2);
  const double m1 = separability(spec.attribute(0));
  const double m2 = separability(spec.attribute(1));
  FixedPointResult tau = solve_tau(m1, m2, zeta, solver);
  const LinearClassifier clean(clean_optimal_weights(spec, tau.value));
  const double eps = scale_budget(eps_inf, spec.total_dim(), threat);
  PerturbationDirection dir = optimal_direction(clean, threat, eps);
  PerturbedProblem problem{m1, m2, zeta, eps, alignment_terms(spec, dir.delta)};
  return {std::move(spec), std::move(tau), std::move(dir), problem};
}

Eigen::VectorXd random_unit(CounterRng& rng) {
  const double angle = 2.0 * std::numbers::pi * rng.uniform();
  Eigen::VectorXd w(2);
  w << std::cos(angle), std::sin(angle);
  return w;
}

}  // namespace

ValidationOptions ValidationOptions::from_config(const SweepConfig& config) {
  ValidationOptions o;
  o.mc_samples = config.mc_samples;
  o.mc_configs = config.mc_configs;
  o.seed = config.seed;
  return o;
}

std::vector<ValidationCheck> ValidationReport::failures() const {
  std::vector<ValidationCheck> out;
  std::copy_if(checks.begin(), checks.end(), std::back_inserter(out), [](const auto& c) { return !c.passed; });
  return out;
}

std::map<std::string, std::pair<std::size_t, std::size_t>> ValidationReport::summary() const {
  std::map<std::string, std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : checks) {
    auto& s = out[c.kind];
    s.first += c.passed ? 1 : 0;
    s.second += 1;
  }
  return out;
}

bool ValidationReport::passed() const {
  return mc_passed && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

double quotient_route_coefficient(const PopulationSpec& spec, double c, double eps, const Eigen::VectorXd& delta) {
  const Eigen::VectorXd w = perturbed_optimal_weights(spec, c, eps, delta);
  const double var = spec.quadratic_form(w);
  const double a_plus = (spec.group_mean(GroupKey::aligned(1)) - eps * delta).dot(w);
  const double a_minus = (spec.group_mean(GroupKey::misaligned(1)) - eps * delta).dot(w);
  const double log_ratio = -(a_plus * a_plus - a_minus * a_minus) / (2.0 * var);
  return std::tanh(0.5 * (log_odds(spec.zeta(1)) + log_ratio));
}

std::vector<ValidationCheck> consistency_checks(const SweepConfig& config, const ValidationOptions& options) {
  std::vector<ValidationCheck> out;
  const SolverOptions solver;
  for (double zeta : config.zeta)
    for (ThreatModel threat : config.threats)
      for (double mu2 : config.mu2)
        for (double mu1 : config.mu1) {
          const std::string where = coords(mu1, mu2, zeta, 0.0, threat);
          try {
            CleanSetup s = setup(config, mu1, mu2, zeta, 0.0, threat, solver);
            const auto c = solve_c(s.problem, phi_for(s.problem, options.inject_phi_fault), solver);
            out.push_back(make_check("eps0_c_vs_tau", where, std::abs(c.value - s.tau.value),
                                     options.consistency_tolerance));

            const PerturbedOptimalCoefficient coeff{c.value, s.problem};
            double group_diff = 0.0;
            double clean_sum = 0.0;
            double pert_sum = 0.0;
            for (const auto& g : s.spec.groups()) {
              const double a = group_accuracy_clean(s.problem.m1, s.problem.m2, s.tau.value, g);
              const double b = group_accuracy_perturbed(coeff, g);
              group_diff = std::max(group_diff, std::abs(a - b));
              clean_sum += a;
              pert_sum += b;
            }
            const double n = static_cast<double>(s.spec.group_count());
            out.push_back(make_check("eps0_group_accuracy", where, group_diff, options.group_consistency_tolerance));
            out.push_back(make_check("eps0_gap", where, std::abs(pert_sum / n - clean_sum / n),
                                     options.consistency_tolerance));
          } catch (const std::exception& e) {
            out.push_back(failed_check("eps0_c_vs_tau", where, e.what()));
          }
        }
  return out;
}

std::vector<ValidationCheck> fixed_point_checks(const SweepConfig& config, const ValidationOptions& options) {
  std::vector<ValidationCheck> out;
  const SolverOptions solver;
  for (double zeta : config.zeta)
    for (double eps_inf : config.eps_inf)
      for (ThreatModel threat : config.threats)
        for (double mu2 : config.mu2)
          for (double mu1 : config.mu1) {
            const std::string where = coords(mu1, mu2, zeta, eps_inf, threat);
            std::optional<CleanSetup> setup_or;
            try {
              setup_or.emplace(setup(config, mu1, mu2, zeta, eps_inf, threat, solver));
            } catch (const std::exception& e) {
              out.push_back(failed_check("tau_residual", where, e.what()));
              continue;
            }
            const CleanSetup& s = *setup_or;
            out.push_back(make_check("tau_residual", where, s.tau.residual, options.residual_tolerance));
            try {
              const auto c = solve_c(s.problem, phi_for(s.problem, options.inject_phi_fault), solver);
              out.push_back(make_check("c_residual", where, c.residual, options.residual_tolerance));

              const double check = quotient_route_coefficient(s.spec, c.value, s.problem.eps, s.direction.delta);
              out.push_back(make_check("c_quotient_residual", where, std::abs(c.value - check),
                                       options.quotient_tolerance));

              // vector-form training accuracy of the chosen root against a uniform c grid
              auto accuracy = [&](double cc) {
                return train_accuracy_perturbed(
                    LinearClassifier(perturbed_optimal_weights(s.spec, cc, s.problem.eps, s.direction.delta)), s.spec,
                    s.problem.eps, s.direction.delta);
              };
              const double chosen = accuracy(c.value);
              double best = -1.0;
              for (int k = 0; k < options.optimality_grid; ++k) {
                const double cc = -1.0 + 2.0 * (k + 0.5) / options.optimality_grid;
                try {
                  best = std::max(best, accuracy(cc));
                } catch (const std::exception&) {
                }
              }
              for (const auto& cand : c.candidates) best = std::max(best, accuracy(cand.root));
              out.push_back(make_check("c_optimality", where, best - chosen, options.optimality_slack));
            } catch (const std::exception& e) {
              out.push_back(failed_check("c_residual", where, e.what()));
            }
          }
  return out;
}

std::vector<Comparison> monte_carlo_comparisons(std::size_t configs, std::size_t n, std::uint64_t seed) {
  static const char* kinds[] = {"clean_accuracy", "perturbed_accuracy", "clean_group", "perturbed_group"};
  std::vector<Comparison> out;
  out.reserve(configs);
  for (std::size_t k = 0; k < configs; ++k) {
    CounterRng rng(seed, k);
    const double mu1 = 0.25 + 2.75 * rng.uniform();
    const double mu2 = 0.25 + 2.75 * rng.uniform();
    const double var1 = 0.5 + 1.5 * rng.uniform();
    const double var2 = 0.5 + 1.5 * rng.uniform();
    const double zeta = 0.5 + 0.49 * rng.uniform();
    const double eps_inf = 0.5 * rng.uniform();
    const ThreatModel threat = rng.uniform() < 0.5 ? ThreatModel::L2 : ThreatModel::Linf;
    const GroupKey group = rng.uniform() < 0.5 ? GroupKey::aligned(1) : GroupKey::misaligned(1);
    const std::uint64_t mc_seed = splitmix64(seed ^ splitmix64(k + 1));

    const PopulationSpec spec = PopulationSpec::two_feature(mu1, mu2, zeta, var1, var2);
    const double eps = scale_budget(eps_inf, spec.total_dim(), threat);
    const int kind = static_cast<int>(k % 4);

    std::ostringstream label;
    label << kinds[kind] << " mu1=" << format_double(mu1) << " mu2=" << format_double(mu2)
          << " var1=" << format_double(var1) << " var2=" << format_double(var2) << " zeta=" << format_double(zeta);

    Comparison cmp;
    if (kind == 0) {
      const LinearClassifier w(random_unit(rng));
      cmp.closed = train_accuracy_clean(w, spec);
      cmp.estimate = mc_accuracy(w, spec, 0.0, Eigen::VectorXd::Zero(2), n, mc_seed);
    } else if (kind == 1) {
      const LinearClassifier w(random_unit(rng));
      const auto dir = optimal_direction(w, threat, eps);
      label << " eps=" << format_double(eps_inf) << " threat=" << to_string(threat);
      cmp.closed = train_accuracy_perturbed(w, spec, eps, dir.delta);
      cmp.estimate = mc_accuracy(w, spec, eps, dir.delta, n, mc_seed);
    } else if (kind == 2) {
      const double m1 = separability(spec.attribute(0));
      const double m2 = separability(spec.attribute(1));
      const double tau = solve_tau(m1, m2, zeta).value;
      const LinearClassifier w(clean_optimal_weights(spec, tau));
      label << " group=" << group.label();
      cmp.closed = group_accuracy_clean(m1, m2, tau, group);
      cmp.estimate = mc_group_accuracy(w, spec, group, n, mc_seed);
    } else {
      const TheoryGap tg = theoretical_gap(spec, eps_inf, threat);
      const PerturbedOptimalCoefficient coeff{tg.c.value, {tg.m1, tg.m2, zeta, tg.eps, tg.terms}};
      const LinearClassifier w(perturbed_optimal_weights(spec, tg.c.value, tg.eps, tg.direction.delta));
      label << " eps=" << format_double(eps_inf) << " threat=" << to_string(threat) << " group=" << group.label();
      cmp.closed = group_accuracy_perturbed(coeff, group);
      cmp.estimate = mc_group_accuracy(w, spec, group, n, mc_seed);
    }
    cmp.label = label.str();
    cmp.z = agreement_report(cmp.closed, cmp.estimate);
    out.push_back(std::move(cmp));
  }
  return out;
}

std::size_t allowed_outliers(std::size_t k) { return std::max<std::size_t>(1, (2 * k) / 100); }

ValidationReport run_validation(const SweepConfig& config, const ValidationOptions& options) {
  ValidationReport report;
  report.checks = consistency_checks(config, options);
  auto fp = fixed_point_checks(config, options);
  report.checks.insert(report.checks.end(), fp.begin(), fp.end());

  if (options.run_monte_carlo && options.mc_configs > 0) {
    report.comparisons = monte_carlo_comparisons(options.mc_configs, options.mc_samples, options.seed);
    for (const auto& c : report.comparisons) {
      const double az = std::abs(c.z);
      report.max_abs_z = std::max(report.max_abs_z, az);
      if (az > 3.0) ++report.z_outliers;
    }
    report.z_allowed = allowed_outliers(report.comparisons.size());
    report.mc_passed = report.z_outliers <= report.z_allowed && report.max_abs_z <= 5.0;
  }
  return report;
}

void write_validation_text(std::ostream& os, const ValidationReport& report) {
  for (const auto& [kind, counts] : report.summary())
    os << kind << ": " << counts.first << "/" << counts.second << " passed\n";
  if (!report.comparisons.empty())
    os << "monte_carlo: " << report.comparisons.size() << " comparisons, " << report.z_outliers
       << " with |z| > 3 (allowed " << report.z_allowed << "), max |z| " << format_double(report.max_abs_z)
       << (report.mc_passed ? "" : " FAILED") << "\n";
  const auto failures = report.failures();
  for (const auto& f : failures)
    os << "FAIL " << f.kind << " " << f.where << " value=" << format_double(f.value)
       << " threshold=" << format_double(f.threshold) << "\n";
  for (const auto& c : report.comparisons)
    if (std::abs(c.z) > 3.0)
      os << "OUTLIER " << c.label << " closed=" << format_double(c.closed)
         << " mc=" << format_double(c.estimate.mean) << " z=" << format_double(c.z) << "\n";
  os << (report.passed() ? "validation passed" : "validation FAILED") << "\n";
}

void write_validation_checks_csv(std::ostream& os, const ValidationReport& report) {
  os << "kind,where,value,threshold,status\n";
  for (const auto& c : report.checks)
    os << c.kind << ',' << c.where << ',' << format_double(c.value) << ',' << format_double(c.threshold) << ','
       << (c.passed ? "pass" : "fail") << '\n';
}

}  // namespace advdist

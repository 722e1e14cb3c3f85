#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "advdist/montecarlo.hpp"
#include "advdist/sweep.hpp"

namespace advdist {

struct ValidationOptions {
  std::size_t mc_samples = 1000000;
  std::size_t mc_configs = 32;
  std::uint64_t seed = 0;
  double consistency_tolerance = 1e-10;        ///< |c - tau| and |gap| at eps = 0
  double group_consistency_tolerance = 1e-12;  ///< per-group accuracies at eps = 0
  double residual_tolerance = 1e-10;           ///< solver residual of tau and c
  double quotient_tolerance = 1e-9;            ///< c against the independent exponential-ratio route
  double optimality_slack = 1e-9;
  int optimality_grid = 1024;
  bool inject_phi_fault = false;  ///< solve c with a sign-flipped phi
  bool run_monte_carlo = true;

  static ValidationOptions from_config(const SweepConfig& config);
};

struct ValidationCheck {
  std::string kind;
  std::string where;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = true;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::vector<Comparison> comparisons;
  std::size_t z_outliers = 0;   ///< |z| > 3
  std::size_t z_allowed = 0;
  double max_abs_z = 0.0;
  bool mc_passed = true;

  std::vector<ValidationCheck> failures() const;
  /// kind -> (passed, total)
  std::map<std::string, std::pair<std::size_t, std::size_t>> summary() const;
  bool passed() const;
};

/// The independent check of a c root: tanh((L + log g_plus - log g_minus) / 2),
/// where g_pm = exp(-a_pm^2 / (2 w^T Sigma w)) and a_pm are the margins of
/// w*(c) on the perturbed aligned / misaligned means.
double quotient_route_coefficient(const PopulationSpec& spec, double c, double eps, const Eigen::VectorXd& delta);

/// eps = 0 identities on every (zeta, threat, mu1, mu2) of the config grid.
std::vector<ValidationCheck> consistency_checks(const SweepConfig& config, const ValidationOptions& options);

/// Solver residuals, quotient-route residuals and root optimality on every
/// (zeta, eps, threat, mu1, mu2) of the config grid.
std::vector<ValidationCheck> fixed_point_checks(const SweepConfig& config, const ValidationOptions& options);

/// Randomized closed-form vs Monte Carlo comparisons, cycling through clean
/// accuracy, perturbed accuracy, clean group accuracy and perturbed group
/// accuracy. Configuration k draws its parameters from CounterRng(seed, k).
std::vector<Comparison> monte_carlo_comparisons(std::size_t configs, std::size_t n, std::uint64_t seed);

/// Allowed number of |z| > 3 outliers among k comparisons: max(1, floor(0.02 k)).
std::size_t allowed_outliers(std::size_t k);

ValidationReport run_validation(const SweepConfig& config, const ValidationOptions& options);

/// Human-readable summary listing every failure with its coordinates.
void write_validation_text(std::ostream& os, const ValidationReport& report);
/// kind,where,value,threshold,status
void write_validation_checks_csv(std::ostream& os, const ValidationReport& report);

}  // namespace advdist

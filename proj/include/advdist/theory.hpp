#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "advdist/gaussian_model.hpp"
#include "advdist/linear.hpp"
#include "advdist/perturbation.hpp"

namespace advdist {

// ---------------------------------------------------------------------------
// Closed-form accuracies of linear classifiers (any number of attributes).
// ---------------------------------------------------------------------------

/// Training-distribution accuracy of sign(w^T z):
///   1/2 (1 + sum_g r_g erf(mu_g^T w / sqrt(2 w^T Sigma w))).
double train_accuracy_clean(const LinearClassifier& w, const PopulationSpec& spec);

/// Same, on data perturbed as z <- z - eps * y * delta (means mu_g - eps * delta).
double train_accuracy_perturbed(const LinearClassifier& w, const PopulationSpec& spec, double eps,
                                const Eigen::VectorXd& delta);

/// Accuracy of w on the (y, s) cells of group g, i.e. on a test set drawn
/// from that group alone (clean data).
double group_accuracy(const LinearClassifier& w, const PopulationSpec& spec, const GroupKey& g);

/// Unweighted mean of per-group accuracies.
double balanced_test_accuracy(std::span<const double> group_accuracies);

// ---------------------------------------------------------------------------
// Two-attribute Bayes-optimal coefficients.
// ---------------------------------------------------------------------------

struct SolverOptions {
  double tolerance = 1e-10;        ///< max accepted |x - tanh(L/2 - phi(x))|
  int grid_cells = 1024;           ///< uniform scan cells over [-1 + edge, 1 - edge]
  double edge = 1e-9;
  double bisection_tolerance = 1e-12;
  int max_bisection_iterations = 200;
  double zeta_clamp = 1e-12;       ///< zeta is clamped into [clamp, 1 - clamp]
};

struct RootCandidate {
  double root = 0.0;
  double residual = 0.0;
  double training_accuracy = 0.0;  ///< accuracy used to select among roots
};

struct FixedPointResult {
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;  ///< total bisection steps over all bracketed roots
  std::pair<double, double> bracket{-1.0, 1.0};
  std::vector<RootCandidate> candidates;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, FixedPointResult diagnostics)
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
  const FixedPointResult& diagnostics() const noexcept { return diagnostics_; }

 private:
  FixedPointResult diagnostics_;
};

/// log(zeta) - log(1 - zeta) with zeta clamped away from 0 and 1.
double log_odds(double zeta, double clamp = 1e-12);

/// Scalars n1 = mu_1^T Sigma_1^{-1} delta_1, n2 = mu_2^T Sigma_2^{-1} delta_2,
/// n3 = delta^T Sigma^{-1} delta.
struct AlignmentTerms {
  double n1 = 0.0;
  double n2 = 0.0;
  double n3 = 0.0;
};

AlignmentTerms alignment_terms(const PopulationSpec& spec, const Eigen::VectorXd& delta);

/// Scalar description of a (possibly) perturbed two-attribute training problem.
struct PerturbedProblem {
  double m1 = 0.0;
  double m2 = 0.0;
  double zeta = 0.5;
  double eps = 0.0;
  AlignmentTerms terms;
};

/// V(c) = m1 + c^2 m2 - 2 eps n1 - 2 c eps n2 + eps^2 n3, the squared Sigma-norm of w*(c).
double perturbed_variance(double c, const PerturbedProblem& p);

/// phi(c) = (m1 - 2 eps n1 - c eps n2 + eps^2 n3)(c m2 - eps n2) / V(c).
/// Throws std::domain_error when V(c) vanishes.
double phi(double c, const PerturbedProblem& p);

/// Clean-data special case: m1 c m2 / (m1 + c^2 m2).
double phi_clean(double c, double m1, double m2);

/// Training accuracy of w*(c) on the perturbed training distribution,
/// evaluated from the scalar parameterization only.
double perturbed_training_accuracy(double c, const PerturbedProblem& p);

using PhiFunction = std::function<double(double)>;
using RootScore = std::function<double(double)>;

/// Enumerates every root of x = tanh(half_log_odds - phi(x)) on (-1, 1) by a
/// uniform scan followed by bisection, and returns the one with the largest
/// score. Throws SolverError if no root reaches options.tolerance.
FixedPointResult solve_fixed_point(double half_log_odds, const PhiFunction& phi_fn,
                                   const RootScore& score, const SolverOptions& options = {});

/// Clean coefficient tau: tau = tanh(L/2 - m1 tau m2 / (m1 + tau^2 m2)).
FixedPointResult solve_tau(double m1, double m2, double zeta, const SolverOptions& options = {});

/// Perturbed coefficient c: c = tanh(L/2 - phi(c)). Multiple roots are
/// resolved by the largest perturbed training accuracy.
FixedPointResult solve_c(const PerturbedProblem& problem, const SolverOptions& options = {});

/// As above with a caller-supplied phi (used to exercise the validator).
FixedPointResult solve_c(const PerturbedProblem& problem, const PhiFunction& phi_fn,
                         const SolverOptions& options = {});

struct CleanOptimalCoefficient {
  double tau = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double zeta = 0.5;
};

struct PerturbedOptimalCoefficient {
  double c = 0.0;
  PerturbedProblem problem;
};

/// Clean-test accuracy of w^# = [Sigma_1^{-1} mu_1, tau Sigma_2^{-1} mu_2] on
/// the group with alignment s = g[0].
double group_accuracy_clean(double m1, double m2, double tau, const GroupKey& g);

/// Clean-test accuracy of w*(c) on group g:
///   1/2 (1 + erf((m1 + s c m2 - eps n1 - s eps n2) / sqrt(2 V(c)))).
double group_accuracy_perturbed(const PerturbedOptimalCoefficient& coeff, const GroupKey& g);

/// w^# with the invariant block coefficient fixed to 1.
Eigen::VectorXd clean_optimal_weights(const PopulationSpec& spec, double tau);

/// w*(c) = [Sigma_1^{-1}(mu_1 - eps delta_1), Sigma_2^{-1}(c mu_2 - eps delta_2)].
Eigen::VectorXd perturbed_optimal_weights(const PopulationSpec& spec, double c, double eps,
                                          const Eigen::VectorXd& delta);

struct TheoryGap {
  double gap = 0.0;                 ///< perturbed minus clean balanced accuracy
  double clean_balanced = 0.0;
  double perturbed_balanced = 0.0;
  double eps = 0.0;                 ///< budget after threat scaling
  FixedPointResult tau;
  FixedPointResult c;
  AlignmentTerms terms;
  PerturbationDirection direction;
  double m1 = 0.0;
  double m2 = 0.0;
};

/// Balanced-test accuracy change from training on data perturbed along the
/// clean Bayes classifier's worst-case direction. Two-attribute specs only.
TheoryGap theoretical_gap(const PopulationSpec& spec, double eps_inf, ThreatModel threat,
                          const SolverOptions& options = {});

}  // namespace advdist

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "advdist/gaussian_model.hpp"
#include "advdist/linear.hpp"

namespace advdist {

/// Bernoulli accuracy estimate; standard_error = sqrt(mean (1 - mean) / n).
struct MCEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

/// Samples n points from `spec` (same draws as sample(spec, n, seed)),
/// shifts them by -eps * y * delta, and counts sign(w^T z) == y.
MCEstimate mc_accuracy(const LinearClassifier& w, const PopulationSpec& spec, double eps,
                       const Eigen::VectorXd& delta, std::size_t n, std::uint64_t seed);

/// Accuracy on clean samples whose alignment is fixed to g.
MCEstimate mc_group_accuracy(const LinearClassifier& w, const PopulationSpec& spec, const GroupKey& g,
                             std::size_t n, std::uint64_t seed);

/// z = (est.mean - closed) / est.standard_error. A zero standard error is
/// accepted only when the estimate matches exactly (z = 0); otherwise throws.
double agreement_report(double closed, const MCEstimate& est);

struct Comparison {
  std::string label;
  double closed = 0.0;
  MCEstimate estimate;
  double z = 0.0;
};

/// CSV: label,closed,mc_mean,stderr,n,seed,z
void write_comparison_report(std::ostream& os, std::span<const Comparison> rows);

/// Number of worker threads used by the estimators (hardware concurrency, at least 1).
unsigned default_worker_count();

}  // namespace advdist

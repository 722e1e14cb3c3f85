#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "advdist/gaussian_model.hpp"
#include "advdist/linear.hpp"

namespace advdist {

enum class ThreatModel { L2, Linf };

std::string_view to_string(ThreatModel threat) noexcept;
/// Accepts "l2"/"l_2" and "linf"/"l_inf" (case-insensitive).
ThreatModel parse_threat(std::string_view text);

/// Unit-norm worst-case direction under a threat model, with its budget.
/// L2: ||delta||_2 = 1. Linf: every |delta_i| = 1.
struct PerturbationDirection {
  Eigen::VectorXd delta;
  double eps = 0.0;
  ThreatModel threat = ThreatModel::Linf;
};

/// argmax_{||d||_p <= 1} w^T d: w / ||w||_2 for L2, sign(w) for Linf, with sign(0) = +1.
PerturbationDirection optimal_direction(const LinearClassifier& w, ThreatModel threat, double eps = 0.0);

/// Budget comparable across threats: Linf keeps eps_inf, L2 uses sqrt(d) * eps_inf.
double scale_budget(double eps_inf, int dim, ThreatModel threat);

/// z <- z - eps * y * delta for every sample; labels and groups unchanged.
Dataset apply(const Dataset& data, const PerturbationDirection& dir);

/// Single-step gradient attack on the per-sample logistic loss of a
/// bias-free linear model: x' = x + eps * d(x), where d is sign(grad_x) for
/// Linf and grad_x / (||grad_x||_2 + 1e-8) for L2.
Dataset fgsm_perturb(const LinearModel& model, const Dataset& batch, double eps, ThreatModel threat);

}  // namespace advdist

#pragma once

#include <cstdint>
#include <map>

#include <Eigen/Dense>

#include "advdist/gaussian_model.hpp"
#include "advdist/linear.hpp"
#include "advdist/perturbation.hpp"

namespace advdist {

struct LbfgsOptions {
  int history = 10;
  double initial_step = 1.0;  // "learning rate"
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_line_search = 40;
};

/// One epoch is one full-batch L-BFGS iteration (direction + line search).
struct TrainConfig {
  int epochs = 10;
  double grad_tolerance = 1e-8;
  std::uint64_t seed = 0;  // recorded for provenance; the full-batch fit does not draw
  LbfgsOptions optimizer;

  static TrainConfig proxy_default() { return TrainConfig{}; }
  static TrainConfig adversarial_default() {
    TrainConfig c;
    c.epochs = 100;
    return c;
  }
};

/// Mean logistic loss (1/n) sum log(1 + exp(-y w^T z)) and its gradient.
double logistic_loss(const Dataset& data, const Eigen::VectorXd& w, Eigen::VectorXd* gradient);

/// Full-batch L-BFGS from w = 0. Stops when ||grad||_2 <= grad_tolerance or
/// after `epochs` iterations. Throws std::invalid_argument on empty or
/// single-class data.
LinearModel fit_logistic(const Dataset& data, const TrainConfig& config);

struct ProxyModels {
  LinearModel clean;
  LinearModel proxy;
};

/// Fit on clean data, perturb the training set once with that model's
/// gradients, fit again on the perturbed set.
ProxyModels two_stage_proxy(const Dataset& trainset, double eps, ThreatModel threat, const TrainConfig& config);

/// Per epoch: perturb the full batch with the current model, then take one
/// L-BFGS step on the perturbed-batch loss.
LinearModel adversarial_train(const Dataset& trainset, double eps, ThreatModel threat, const TrainConfig& config);

struct Evaluation {
  double overall = 0.0;
  std::map<GroupKey, double> per_group;

  /// Unweighted mean over the groups present in the test set.
  double balanced() const;
};

/// Fraction of samples with sign(w^T z) == y (sign(0) = +1), overall and per group.
Evaluation evaluate(const LinearModel& model, const Dataset& testset);

}  // namespace advdist

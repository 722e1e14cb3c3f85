#pragma once

#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace advdist {

/// Predicts sign(w^T z) with sign(0) = +1. The weight vector is never zero.
class LinearClassifier {
 public:
  explicit LinearClassifier(Eigen::VectorXd w) : w_(std::move(w)) {
    if (w_.size() == 0 || !w_.allFinite() || w_.isZero(0.0))
      throw std::invalid_argument("classifier weights must be finite and nonzero");
  }

  const Eigen::VectorXd& weights() const noexcept { return w_; }
  int dim() const noexcept { return static_cast<int>(w_.size()); }

 private:
  Eigen::VectorXd w_;
};

/// Trainable bias-free linear model. Unlike LinearClassifier it may be zero
/// (the optimizer starts there).
struct LinearModel {
  Eigen::VectorXd w;

  int dim() const noexcept { return static_cast<int>(w.size()); }
  LinearClassifier classifier() const { return LinearClassifier(w); }
};

}  // namespace advdist

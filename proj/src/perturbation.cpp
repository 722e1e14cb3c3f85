#include "advdist/perturbation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace advdist {

namespace {

constexpr double kL2GradientGuard = 1e-8;

double sign_or_plus(double v) noexcept { return v < 0.0 ? -1.0 : 1.0; }

// sigma(t) = 1 / (1 + exp(-t)) without overflow.
double logistic(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

std::string_view to_string(ThreatModel threat) noexcept {
  return threat == ThreatModel::L2 ? "l2" : "linf";
}

ThreatModel parse_threat(std::string_view text) {
  std::string t;
  for (char ch : text)
    if (ch != '_') t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (t == "l2") return ThreatModel::L2;
  if (t == "linf") return ThreatModel::Linf;
  throw std::invalid_argument("unknown threat model '" + std::string(text) + "' (expected l2 or linf)");
}

PerturbationDirection optimal_direction(const LinearClassifier& w, ThreatModel threat, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("attack budget must be >= 0");
  PerturbationDirection dir;
  dir.threat = threat;
  dir.eps = eps;
  const Eigen::VectorXd& v = w.weights();
  if (threat == ThreatModel::L2) {
    dir.delta = v / v.norm();
  } else {
    dir.delta = v.unaryExpr([](double x) { return sign_or_plus(x); });
  }
  return dir;
}

double scale_budget(double eps_inf, int dim, ThreatModel threat) {
  if (!(eps_inf >= 0.0)) throw std::invalid_argument("attack budget must be >= 0");
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  return threat == ThreatModel::L2 ? std::sqrt(static_cast<double>(dim)) * eps_inf : eps_inf;
}

Dataset apply(const Dataset& data, const PerturbationDirection& dir) {
  if (dir.delta.size() != data.dim()) throw std::invalid_argument("direction dimension mismatch");
  Dataset out = data;
  if (dir.eps == 0.0) return out;
  const Eigen::RowVectorXd shift = dir.eps * dir.delta.transpose();
  auto& x = out.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (data.label(static_cast<std::size_t>(i)) > 0)
      x.row(i) -= shift;
    else
      x.row(i) += shift;
  }
  return out;
}

Dataset fgsm_perturb(const LinearModel& model, const Dataset& batch, double eps, ThreatModel threat) {
  if (model.w.size() != batch.dim()) throw std::invalid_argument("model dimension mismatch");
  if (!(eps >= 0.0)) throw std::invalid_argument("attack budget must be >= 0");
  Dataset out = batch;
  if (eps == 0.0) return out;
  auto& x = out.features();
  const Eigen::VectorXd& w = model.w;

  if (threat == ThreatModel::Linf) {
    // grad_x = -y * sigma(-y w.x) * w with sigma > 0, so sign(grad_x) = -y * sign(w).
    const Eigen::RowVectorXd step = eps * w.unaryExpr([](double v) { return sign_or_plus(v); }).transpose();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (batch.label(static_cast<std::size_t>(i)) > 0)
        x.row(i) -= step;
      else
        x.row(i) += step;
    }
    return out;
  }

  const double wnorm = w.norm();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double y = batch.label(static_cast<std::size_t>(i));
    const double margin = y * x.row(i).dot(w);
    const double scale = logistic(-margin);  // |d loss / d margin|
    const double gnorm = scale * wnorm;
    // grad = -y * scale * w
    x.row(i) += (eps * (-y * scale) / (gnorm + kL2GradientGuard)) * w.transpose();
  }
  return out;
}

}  // namespace advdist

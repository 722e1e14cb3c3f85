#include "advdist/trainer.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

namespace advdist {

namespace {

// log(1 + exp(-t))
double softplus_neg(double t) noexcept {
  return t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

// sigma(-t) = 1 / (1 + exp(t))
double logistic_neg(double t) noexcept {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

void require_trainable(const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("training set is empty");
  bool pos = false;
  bool neg = false;
  for (auto y : data.labels()) (y > 0 ? pos : neg) = true;
  if (!pos || !neg) throw std::invalid_argument("training set must contain both labels");
}

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

/// Two-loop recursion. Returns the search direction -H g.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& grad, const std::deque<CurvaturePair>& memory) {
  Eigen::VectorXd q = grad;
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * memory[k].s.dot(q);
    q -= alpha[k] * memory[k].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * memory[k].y.dot(q);
    q += (alpha[k] - beta) * memory[k].s;
  }
  return -q;
}

/// State carried across iterations; the objective may change between steps.
class LbfgsState {
 public:
  explicit LbfgsState(const LbfgsOptions& options) : options_(options) {}

  /// One iteration on `data` starting from w. Returns false if no progress was possible.
  bool step(const Dataset& data, Eigen::VectorXd& w) {
    Eigen::VectorXd grad;
    const double loss = logistic_loss(data, w, &grad);
    Eigen::VectorXd dir = lbfgs_direction(grad, memory_);
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      memory_.clear();
      dir = -grad;
      slope = -grad.squaredNorm();
      if (!(slope < 0.0)) return false;
    }

    double t = options_.initial_step;
    Eigen::VectorXd next;
    Eigen::VectorXd next_grad;
    bool accepted = false;
    for (int k = 0; k < options_.max_line_search; ++k) {
      next = w + t * dir;
      const double trial = logistic_loss(data, next, &next_grad);
      if (trial <= loss + options_.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= options_.backtrack;
    }
    if (!accepted) return false;

    CurvaturePair pair{next - w, next_grad - grad, 0.0};
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
      pair.rho = 1.0 / sy;
      memory_.push_back(std::move(pair));
      if (static_cast<int>(memory_.size()) > options_.history) memory_.pop_front();
    }
    w = std::move(next);
    return true;
  }

 private:
  LbfgsOptions options_;
  std::deque<CurvaturePair> memory_;
};

double gradient_norm(const Dataset& data, const Eigen::VectorXd& w) {
  Eigen::VectorXd grad;
  logistic_loss(data, w, &grad);
  return grad.norm();
}

}  // namespace

double logistic_loss(const Dataset& data, const Eigen::VectorXd& w, Eigen::VectorXd* gradient) {
  const auto& x = data.features();
  if (w.size() != x.cols()) throw std::invalid_argument("weight dimension mismatch");
  const Eigen::VectorXd margins = x * w;
  double loss = 0.0;
  Eigen::VectorXd coeff(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double y = data.label(static_cast<std::size_t>(i));
    const double t = y * margins[i];
    loss += softplus_neg(t);
    coeff[i] = -y * logistic_neg(t);
  }
  const double n = static_cast<double>(x.rows());
  if (gradient != nullptr) *gradient = (x.transpose() * coeff) / n;
  return loss / n;
}

LinearModel fit_logistic(const Dataset& data, const TrainConfig& config) {
  require_trainable(data);
  if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(data.dim());
  LbfgsState state(config.optimizer);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (gradient_norm(data, w) <= config.grad_tolerance) break;
    if (!state.step(data, w)) break;
  }
  return LinearModel{std::move(w)};
}

ProxyModels two_stage_proxy(const Dataset& trainset, double eps, ThreatModel threat, const TrainConfig& config) {
  ProxyModels out;
  out.clean = fit_logistic(trainset, config);
  const Dataset adversarial = fgsm_perturb(out.clean, trainset, eps, threat);
  out.proxy = fit_logistic(adversarial, config);
  return out;
}

LinearModel adversarial_train(const Dataset& trainset, double eps, ThreatModel threat, const TrainConfig& config) {
  require_trainable(trainset);
  if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  LinearModel model{Eigen::VectorXd::Zero(trainset.dim())};
  LbfgsState state(config.optimizer);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Dataset batch = fgsm_perturb(model, trainset, eps, threat);
    if (gradient_norm(batch, model.w) <= config.grad_tolerance) continue;
    state.step(batch, model.w);
  }
  return model;
}

double Evaluation::balanced() const {
  if (per_group.empty()) throw std::invalid_argument("evaluation has no groups");
  double sum = 0.0;
  for (const auto& [g, acc] : per_group) sum += acc;
  return sum / static_cast<double>(per_group.size());
}

Evaluation evaluate(const LinearModel& model, const Dataset& testset) {
  if (testset.size() == 0) throw std::invalid_argument("test set is empty");
  const auto& x = testset.features();
  if (model.w.size() != x.cols()) throw std::invalid_argument("model dimension mismatch");
  const Eigen::VectorXd scores = x * model.w;
  std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> counts;  // correct, total
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const int pred = scores[i] < 0.0 ? -1 : 1;
    const bool hit = pred == testset.label(idx);
    correct += hit;
    auto& c = counts[testset.group_indices()[idx]];
    c.first += hit;
    ++c.second;
  }
  Evaluation out;
  out.overall = static_cast<double>(correct) / static_cast<double>(testset.size());
  for (const auto& [g, c] : counts)
    out.per_group[GroupKey::from_index(testset.spurious_count(), g)] =
        static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

}  // namespace advdist

#include "advdist/gaussian_model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include "advdist/rng.hpp"

namespace advdist {

AttributeSpec::AttributeSpec(Vector mu, Matrix sigma) : mu_(std::move(mu)), sigma_(std::move(sigma)) {
  if (mu_.size() < 1) throw std::invalid_argument("attribute mean must have dimension >= 1");
  if (!mu_.allFinite()) throw std::invalid_argument("attribute mean has non-finite entries");
  if (sigma_.rows() != mu_.size() || sigma_.cols() != mu_.size())
    throw std::invalid_argument("covariance shape does not match mean dimension");
  if (!sigma_.allFinite()) throw std::invalid_argument("covariance has non-finite entries");
  const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("covariance is not symmetric");
  llt_.compute(sigma_);
  if (llt_.info() != Eigen::Success)
    throw std::invalid_argument("covariance is not positive definite");
  lower_ = llt_.matrixL();
  if (lower_.diagonal().minCoeff() <= 0.0)
    throw std::invalid_argument("covariance is not positive definite");
}

AttributeSpec AttributeSpec::scalar(double mu, double variance) {
  return AttributeSpec(Vector::Constant(1, mu), Matrix::Constant(1, 1, variance));
}

Vector AttributeSpec::solve(const Vector& v) const { return llt_.solve(v); }

double AttributeSpec::inner(const Vector& a, const Vector& b) const { return a.dot(llt_.solve(b)); }

double separability(const AttributeSpec& attr) {
  // ||L^{-1} mu||^2 keeps the result non-negative by construction.
  const Vector half = attr.cholesky_lower().triangularView<Eigen::Lower>().solve(attr.mu());
  return half.squaredNorm();
}

GroupKey::GroupKey(std::vector<int> alignment) : alignment_(std::move(alignment)) {
  for (int s : alignment_)
    if (s != 1 && s != -1) throw std::invalid_argument("group alignment entries must be +1 or -1");
  if (alignment_.size() > 31) throw std::invalid_argument("at most 31 spurious attributes supported");
}

GroupKey GroupKey::aligned(std::size_t spurious_count) {
  return GroupKey(std::vector<int>(spurious_count, 1));
}

GroupKey GroupKey::misaligned(std::size_t spurious_count) {
  return GroupKey(std::vector<int>(spurious_count, -1));
}

GroupKey GroupKey::from_index(std::size_t spurious_count, std::uint32_t index) {
  std::vector<int> a(spurious_count);
  for (std::size_t k = 0; k < spurious_count; ++k) a[k] = ((index >> k) & 1U) ? -1 : 1;
  return GroupKey(std::move(a));
}

std::uint32_t GroupKey::index() const noexcept {
  std::uint32_t idx = 0;
  for (std::size_t k = 0; k < alignment_.size(); ++k)
    if (alignment_[k] < 0) idx |= (1U << k);
  return idx;
}

std::string GroupKey::label() const {
  std::string out;
  for (int s : alignment_) out.push_back(s > 0 ? '+' : '-');
  return out;
}

PopulationSpec::PopulationSpec(std::vector<AttributeSpec> attributes, std::vector<double> zeta)
    : attributes_(std::move(attributes)), zeta_(std::move(zeta)) {
  if (attributes_.size() < 2) throw std::invalid_argument("population needs at least two attributes");
  if (zeta_.size() + 1 == attributes_.size()) zeta_.insert(zeta_.begin(), 1.0);
  if (zeta_.size() != attributes_.size())
    throw std::invalid_argument("zeta must have one entry per attribute");
  if (zeta_[0] != 1.0) throw std::invalid_argument("invariant attribute must have zeta == 1");
  for (double z : zeta_)
    if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("zeta entries must lie in [0, 1]");
  if (attributes_.size() > 32) throw std::invalid_argument("at most 32 attributes supported");
  offsets_.reserve(attributes_.size());
  for (const auto& a : attributes_) {
    offsets_.push_back(total_dim_);
    total_dim_ += a.dim();
  }
}

PopulationSpec PopulationSpec::two_feature(double mu1, double mu2, double zeta, double var1,
                                           double var2) {
  return PopulationSpec({AttributeSpec::scalar(mu1, var1), AttributeSpec::scalar(mu2, var2)},
                        {1.0, zeta});
}

std::vector<GroupKey> PopulationSpec::groups() const {
  std::vector<GroupKey> out;
  out.reserve(group_count());
  for (std::uint32_t i = 0; i < group_count(); ++i) out.push_back(GroupKey::from_index(spurious_count(), i));
  return out;
}

Vector PopulationSpec::group_mean(const GroupKey& g) const {
  if (g.size() != spurious_count()) throw std::invalid_argument("group key does not match population");
  Vector m(total_dim_);
  for (std::size_t n = 0; n < attributes_.size(); ++n) {
    const double s = n == 0 ? 1.0 : static_cast<double>(g[n - 1]);
    m.segment(offsets_[n], attributes_[n].dim()) = s * attributes_[n].mu();
  }
  return m;
}

Vector PopulationSpec::apply_sigma(const Vector& v) const {
  if (v.size() != total_dim_) throw std::invalid_argument("vector dimension mismatch");
  Vector out(total_dim_);
  for (std::size_t n = 0; n < attributes_.size(); ++n) {
    const int k = attributes_[n].dim();
    out.segment(offsets_[n], k) = attributes_[n].sigma() * v.segment(offsets_[n], k);
  }
  return out;
}

Vector PopulationSpec::solve_sigma(const Vector& v) const {
  if (v.size() != total_dim_) throw std::invalid_argument("vector dimension mismatch");
  Vector out(total_dim_);
  for (std::size_t n = 0; n < attributes_.size(); ++n) {
    const int k = attributes_[n].dim();
    out.segment(offsets_[n], k) = attributes_[n].solve(v.segment(offsets_[n], k));
  }
  return out;
}

double PopulationSpec::quadratic_form(const Vector& w) const { return w.dot(apply_sigma(w)); }

double group_proportion(const PopulationSpec& spec, const GroupKey& g) {
  if (g.size() != spec.spurious_count()) throw std::invalid_argument("group key does not match population");
  double r = 1.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double z = spec.zeta(k + 1);
    r *= g[k] > 0 ? z : 1.0 - z;
  }
  return r;
}

PopulationSpec balanced_variant(const PopulationSpec& spec) {
  std::vector<double> zeta = spec.zeta();
  for (std::size_t n = 1; n < zeta.size(); ++n) zeta[n] = 0.5;
  return PopulationSpec(spec.attributes(), std::move(zeta));
}

Dataset::Dataset(RowMatrix features, std::vector<std::int8_t> labels, std::vector<std::uint32_t> groups,
                 std::size_t spurious_count)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      groups_(std::move(groups)),
      spurious_count_(spurious_count) {
  if (static_cast<std::size_t>(features_.rows()) != labels_.size() || labels_.size() != groups_.size())
    throw std::invalid_argument("dataset columns have inconsistent lengths");
}

LabeledSample Dataset::at(std::size_t i) const {
  return LabeledSample{features_.row(static_cast<Eigen::Index>(i)).transpose(), labels_.at(i), group(i)};
}

Sampler::Sampler(PopulationSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {}

int Sampler::draw(std::uint64_t index, Eigen::Ref<Vector> z, std::uint32_t& group) const {
  return draw_impl(index, nullptr, z, group);
}

int Sampler::draw_in_group(std::uint64_t index, std::uint32_t group, Eigen::Ref<Vector> z) const {
  std::uint32_t out = 0;
  return draw_impl(index, &group, z, out);
}

int Sampler::draw_impl(std::uint64_t index, const std::uint32_t* forced, Eigen::Ref<Vector> z,
                       std::uint32_t& group) const {
  CounterRng rng(seed_, index);
  const int y = rng.uniform() < 0.5 ? -1 : 1;

  std::uint32_t g = 0;
  for (std::size_t k = 0; k < spec_.spurious_count(); ++k) {
    // Always consumed so that forced and free draws stay in lockstep.
    const double u = rng.uniform();
    if (u >= spec_.zeta(k + 1)) g |= (1U << k);
  }
  if (forced != nullptr) g = *forced;
  group = g;

  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t n = 0; n < spec_.attribute_count(); ++n) {
    const auto& attr = spec_.attribute(n);
    const int k = attr.dim();
    Vector eps(k);
    for (int j = 0; j < k; ++j) eps[j] = normal(rng);
    const double s = (n == 0 || ((g >> (n - 1)) & 1U) == 0) ? 1.0 : -1.0;
    z.segment(spec_.offset(n), k) = (y * s) * attr.mu() + attr.cholesky_lower() * eps;
  }
  return y;
}

Dataset sample(const PopulationSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample size must be >= 1");
  const Sampler sampler(spec, seed);
  RowMatrix features(static_cast<Eigen::Index>(n), spec.total_dim());
  std::vector<std::int8_t> labels(n);
  std::vector<std::uint32_t> groups(n);
  Vector z(spec.total_dim());
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<std::int8_t>(sampler.draw(i, z, groups[i]));
    features.row(static_cast<Eigen::Index>(i)) = z.transpose();
  }
  return Dataset(std::move(features), std::move(labels), std::move(groups), spec.spurious_count());
}

nlohmann::json to_json(const PopulationSpec& spec) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : spec.attributes()) {
    nlohmann::json mu = nlohmann::json::array();
    for (int i = 0; i < a.dim(); ++i) mu.push_back(a.mu()[i]);
    nlohmann::json sigma = nlohmann::json::array();
    for (int r = 0; r < a.dim(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < a.dim(); ++c) row.push_back(a.sigma()(r, c));
      sigma.push_back(std::move(row));
    }
    attrs.push_back({{"mu", std::move(mu)}, {"sigma", std::move(sigma)}});
  }
  return {{"attributes", std::move(attrs)}, {"zeta", spec.zeta()}};
}

PopulationSpec population_from_json(const nlohmann::json& doc) {
  try {
    std::vector<AttributeSpec> attrs;
    for (const auto& a : doc.at("attributes")) {
      const auto mu_values = a.at("mu").get<std::vector<double>>();
      const auto d = static_cast<Eigen::Index>(mu_values.size());
      Vector mu = Eigen::Map<const Vector>(mu_values.data(), d);
      Matrix sigma(d, d);
      const auto& s = a.at("sigma");
      if (!s.is_array()) throw std::invalid_argument("sigma must be an array");
      if (!s.empty() && s.front().is_array()) {
        if (static_cast<Eigen::Index>(s.size()) != d) throw std::invalid_argument("sigma row count mismatch");
        for (Eigen::Index r = 0; r < d; ++r) {
          const auto row = s.at(r).get<std::vector<double>>();
          if (static_cast<Eigen::Index>(row.size()) != d) throw std::invalid_argument("sigma row length mismatch");
          for (Eigen::Index c = 0; c < d; ++c) sigma(r, c) = row[c];
        }
      } else {
        const auto flat = s.get<std::vector<double>>();
        if (static_cast<Eigen::Index>(flat.size()) != d * d) throw std::invalid_argument("sigma size mismatch");
        for (Eigen::Index r = 0; r < d; ++r)
          for (Eigen::Index c = 0; c < d; ++c) sigma(r, c) = flat[r * d + c];
      }
      attrs.emplace_back(std::move(mu), std::move(sigma));
    }
    return PopulationSpec(std::move(attrs), doc.at("zeta").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed population document: ") + e.what());
  }
}

}  // namespace advdist

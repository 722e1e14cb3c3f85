#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <json.hpp>

namespace advdist {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One feature block: z_n | (y, s_n) ~ N(y * s_n * mu, sigma).
///
/// The Cholesky factor of sigma is computed once at construction and shared
/// by sampling and every Mahalanobis-type quantity. Construction throws
/// std::invalid_argument when sigma is not symmetric positive definite.
class AttributeSpec {
 public:
  AttributeSpec(Vector mu, Matrix sigma);

  /// One-dimensional block with mean `mu` and variance `variance`.
  static AttributeSpec scalar(double mu, double variance = 1.0);

  const Vector& mu() const noexcept { return mu_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  int dim() const noexcept { return static_cast<int>(mu_.size()); }

  /// Lower-triangular L with L L^T = sigma.
  const Matrix& cholesky_lower() const noexcept { return lower_; }

  /// sigma^{-1} v
  Vector solve(const Vector& v) const;

  /// a^T sigma^{-1} b
  double inner(const Vector& a, const Vector& b) const;

 private:
  Vector mu_;
  Matrix sigma_;
  Eigen::LLT<Matrix> llt_;
  Matrix lower_;
};

/// m = mu^T sigma^{-1} mu.
double separability(const AttributeSpec& attr);

/// Alignment pattern of the spurious attributes with the invariant one:
/// entry k is s_{k+2} = a_1 * a_{k+2} in {-1, +1}.
class GroupKey {
 public:
  GroupKey() = default;
  explicit GroupKey(std::vector<int> alignment);

  static GroupKey aligned(std::size_t spurious_count);
  static GroupKey misaligned(std::size_t spurious_count);
  /// Bit k of `index` set means spurious attribute k is misaligned.
  static GroupKey from_index(std::size_t spurious_count, std::uint32_t index);

  std::uint32_t index() const noexcept;
  std::size_t size() const noexcept { return alignment_.size(); }
  int operator[](std::size_t k) const { return alignment_.at(k); }
  const std::vector<int>& alignment() const noexcept { return alignment_; }

  /// "+", "-", "+-", ... one character per spurious attribute.
  std::string label() const;

  friend bool operator==(const GroupKey&, const GroupKey&) = default;
  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;

 private:
  std::vector<int> alignment_;
};

/// Generative description of a spurious-correlation population.
/// Attribute 0 is the invariant one; zeta[0] is fixed to 1.
class PopulationSpec {
 public:
  /// `zeta` has one entry per attribute (zeta[0] == 1) or one per spurious
  /// attribute (N - 1 entries); the invariant entry is inserted in that case.
  PopulationSpec(std::vector<AttributeSpec> attributes, std::vector<double> zeta);

  /// Two one-dimensional features with means mu1, mu2 and variances var1, var2.
  static PopulationSpec two_feature(double mu1, double mu2, double zeta,
                                    double var1 = 1.0, double var2 = 1.0);

  std::size_t attribute_count() const noexcept { return attributes_.size(); }
  std::size_t spurious_count() const noexcept { return attributes_.size() - 1; }
  std::size_t group_count() const noexcept { return std::size_t{1} << spurious_count(); }
  int total_dim() const noexcept { return total_dim_; }

  const std::vector<AttributeSpec>& attributes() const noexcept { return attributes_; }
  const AttributeSpec& attribute(std::size_t n) const { return attributes_.at(n); }
  const std::vector<double>& zeta() const noexcept { return zeta_; }
  double zeta(std::size_t n) const { return zeta_.at(n); }

  /// Offset of block n inside the concatenated feature vector.
  int offset(std::size_t n) const { return offsets_.at(n); }

  std::vector<GroupKey> groups() const;

  /// Mean of z given y = +1 and alignment g: [mu_1, s_2 mu_2, ..., s_N mu_N].
  Vector group_mean(const GroupKey& g) const;

  /// Block-diagonal Sigma applied to / solved against full-length vectors.
  Vector apply_sigma(const Vector& v) const;
  Vector solve_sigma(const Vector& v) const;
  /// w^T Sigma w
  double quadratic_form(const Vector& w) const;

 private:
  std::vector<AttributeSpec> attributes_;
  std::vector<double> zeta_;
  std::vector<int> offsets_;
  int total_dim_ = 0;
};

/// r_g = prod_n (zeta_n if s_n = +1 else 1 - zeta_n).
double group_proportion(const PopulationSpec& spec, const GroupKey& g);

/// Same spec with every spurious zeta set to 0.5.
PopulationSpec balanced_variant(const PopulationSpec& spec);

struct LabeledSample {
  Vector z;
  int y = 1;
  GroupKey group;
};

/// Column-oriented sample container: one feature row per sample.
class Dataset {
 public:
  Dataset() = default;
  Dataset(RowMatrix features, std::vector<std::int8_t> labels,
          std::vector<std::uint32_t> groups, std::size_t spurious_count);

  std::size_t size() const noexcept { return labels_.size(); }
  int dim() const noexcept { return static_cast<int>(features_.cols()); }
  std::size_t spurious_count() const noexcept { return spurious_count_; }

  const RowMatrix& features() const noexcept { return features_; }
  RowMatrix& features() noexcept { return features_; }
  const std::vector<std::int8_t>& labels() const noexcept { return labels_; }
  const std::vector<std::uint32_t>& group_indices() const noexcept { return groups_; }

  int label(std::size_t i) const { return labels_[i]; }
  GroupKey group(std::size_t i) const { return GroupKey::from_index(spurious_count_, groups_[i]); }
  LabeledSample at(std::size_t i) const;

 private:
  RowMatrix features_;
  std::vector<std::int8_t> labels_;
  std::vector<std::uint32_t> groups_;
  std::size_t spurious_count_ = 0;
};

/// Draws individual samples. Sample i consumes CounterRng(seed, i) in the
/// fixed order y, s_2..s_N, then the standard normals for z_1..z_N, so any
/// subset of indices can be generated independently and in parallel.
class Sampler {
 public:
  Sampler(PopulationSpec spec, std::uint64_t seed);

  /// Writes z into `z` (length d); returns y and stores the group index.
  int draw(std::uint64_t index, Eigen::Ref<Vector> z, std::uint32_t& group) const;

  /// As draw(), with the alignment forced to `group` instead of sampled.
  int draw_in_group(std::uint64_t index, std::uint32_t group, Eigen::Ref<Vector> z) const;

  const PopulationSpec& spec() const noexcept { return spec_; }

 private:
  int draw_impl(std::uint64_t index, const std::uint32_t* forced, Eigen::Ref<Vector> z,
                std::uint32_t& group) const;

  PopulationSpec spec_;
  std::uint64_t seed_;
};

Dataset sample(const PopulationSpec& spec, std::size_t n, std::uint64_t seed);

nlohmann::json to_json(const PopulationSpec& spec);
PopulationSpec population_from_json(const nlohmann::json& doc);

}  // namespace advdist

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "advdist/perturbation.hpp"
#include "advdist/theory.hpp"
#include "advdist/trainer.hpp"

namespace advdist {

enum class Pipeline { Theory, Proxy, AdvTrain };

std::string_view to_string(Pipeline pipeline) noexcept;
Pipeline parse_pipeline(std::string_view text);

/// Raised for malformed or semantically invalid configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentPoint {
  double mu1 = 1.0;
  double mu2 = 1.0;
  double var1 = 1.0;  ///< Sigma_1 (one-dimensional feature)
  double var2 = 1.0;  ///< Sigma_2
  double zeta = 0.95;
  double eps_inf = 0.01;
  ThreatModel threat = ThreatModel::Linf;
  Pipeline pipeline = Pipeline::Theory;
  std::size_t n_train = 100000;
  std::size_t n_test = 100000;
  std::uint64_t seed = 0;  ///< per-cell seed (see cell_seed)

  /// Throws ConfigError on mu <= 0, zeta outside [0.5, 1], eps < 0, or empty sample sizes.
  void validate() const;
  PopulationSpec population() const;
};

struct PointResult {
  double gap = 0.0;
  double clean_acc = 0.0;      ///< balanced test accuracy of the clean model
  double perturbed_acc = 0.0;  ///< balanced test accuracy of the proxy / adversarial / w* model
  double tau = 0.0;
  double c = 0.0;
  double residual = 0.0;  ///< max fixed-point residual (theory); nan for empirical pipelines
  int iterations = 0;
  bool ok = true;
  std::string error;
};

struct PipelineSettings {
  TrainConfig proxy = TrainConfig::proxy_default();
  TrainConfig adversarial = TrainConfig::adversarial_default();
  SolverOptions solver;
};

/// Evaluates one cell. Failures are captured in the result (ok = false),
/// never thrown.
PointResult run_point(const ExperimentPoint& p, const PipelineSettings& settings = {});

struct SweepConfig {
  std::vector<double> mu1;
  std::vector<double> mu2;
  std::vector<double> zeta;
  std::vector<double> eps_inf;
  std::vector<ThreatModel> threats;
  std::vector<Pipeline> pipelines;
  double var1 = 1.0;
  double var2 = 1.0;
  std::size_t n_train = 100000;
  std::size_t n_test = 100000;
  std::uint64_t seed = 0;
  int proxy_epochs = 10;
  int advtrain_epochs = 100;
  std::size_t mc_samples = 1000000;
  std::size_t mc_configs = 32;

  /// Axes 0.5..3.0 step 0.25, zeta {0.6, 0.9, 0.95, 0.99}, eps 0.01, both threats, theory.
  static SweepConfig defaults();

  /// Throws ConfigError for empty axes or invalid values.
  void validate() const;
  PipelineSettings settings() const;
};

SweepConfig sweep_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SweepConfig& config);
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// seed XOR fnv1a64(mu1, mu2, zeta, eps_inf, threat). The pipeline is not
/// hashed, so proxy and advtrain cells share training and test data.
std::uint64_t cell_seed(std::uint64_t base, double mu1, double mu2, double zeta, double eps_inf,
                        ThreatModel threat);
/// Test-set seed of a cell: splitmix64(cell seed).
std::uint64_t test_seed(std::uint64_t cell);

inline constexpr std::string_view kSeedRule =
    "cell_seed = seed XOR fnv1a64(le-bytes of doubles mu1, mu2, zeta, eps_inf, threat_index[l2=0,linf=1]); "
    "train sample i uses CounterRng(cell_seed, i); test sample i uses CounterRng(splitmix64(cell_seed), i); "
    "theory cells draw no random numbers";

struct GapGrid {
  std::vector<double> mu1_axis;
  std::vector<double> mu2_axis;
  /// cells[i * mu1_axis.size() + j] is (mu1_axis[j], mu2_axis[i]).
  std::vector<PointResult> cells;
  double zeta = 0.0;
  double eps_inf = 0.0;
  ThreatModel threat = ThreatModel::Linf;
  Pipeline pipeline = Pipeline::Theory;
  std::uint64_t seed = 0;

  double value(std::size_t row, std::size_t col) const;
  std::size_t invalid_cells() const;
  double max_residual() const;
};

/// One grid per (zeta, eps_inf, threat, pipeline), in that nesting order.
/// Cells run on up to `jobs` threads; output order is fixed.
std::vector<GapGrid> run_sweep(const SweepConfig& config, int jobs = 1);

/// Header: mu1,mu2,zeta,eps,threat,pipeline,gap,clean_acc,perturbed_acc,tau,c,residual,status
void write_grid_csv(std::ostream& os, const GapGrid& grid);
GapGrid read_grid_csv(std::istream& is);

std::string grid_file_stem(const GapGrid& grid);

/// Writes <stem>.csv and <stem>.svg per grid plus manifest.json into out_dir.
/// Returns the manifest. Throws std::runtime_error on I/O failure.
nlohmann::json write_sweep_outputs(const SweepConfig& config, const std::vector<GapGrid>& grids,
                                   const std::filesystem::path& out_dir);

/// fnv1a64 of the canonical (sorted-key, compact) config dump, as 16 hex digits.
std::string config_hash(const SweepConfig& config);

}  // namespace advdist

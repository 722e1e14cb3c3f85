#include "advdist/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "advdist/format.hpp"
#include "advdist/heatmap.hpp"
#include "advdist/rng.hpp"

namespace advdist {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view text) {
  std::string out;
  for (char ch : text) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

// Invariant-normalized ratio of block coefficients for one-dimensional blocks:
// w_n = k_n * mu_n / var_n, returns k_2 / k_1.
double block_ratio(const Eigen::VectorXd& w, const ExperimentPoint& p) {
  const double k1 = w[0] * p.var1 / p.mu1;
  const double k2 = w[1] * p.var2 / p.mu2;
  return k1 == 0.0 ? kNaN : k2 / k1;
}

PointResult run_theory(const ExperimentPoint& p, const PipelineSettings& settings) {
  const TheoryGap tg = theoretical_gap(p.population(), p.eps_inf, p.threat, settings.solver);
  PointResult r;
  r.gap = tg.gap;
  r.clean_acc = tg.clean_balanced;
  r.perturbed_acc = tg.perturbed_balanced;
  r.tau = tg.tau.value;
  r.c = tg.c.value;
  r.residual = std::max(tg.tau.residual, tg.c.residual);
  r.iterations = tg.tau.iterations + tg.c.iterations;
  return r;
}

PointResult run_empirical(const ExperimentPoint& p, const PipelineSettings& settings) {
  const PopulationSpec spec = p.population();
  const Dataset train = sample(spec, p.n_train, p.seed);
  const Dataset test = sample(balanced_variant(spec), p.n_test, test_seed(p.seed));
  const double eps = scale_budget(p.eps_inf, spec.total_dim(), p.threat);

  LinearModel clean;
  LinearModel perturbed;
  if (p.pipeline == Pipeline::Proxy) {
    auto models = two_stage_proxy(train, eps, p.threat, settings.proxy);
    clean = std::move(models.clean);
    perturbed = std::move(models.proxy);
  } else {
    clean = fit_logistic(train, settings.proxy);
    perturbed = adversarial_train(train, eps, p.threat, settings.adversarial);
  }
  PointResult r;
  r.clean_acc = evaluate(clean, test).balanced();
  r.perturbed_acc = evaluate(perturbed, test).balanced();
  r.gap = r.perturbed_acc - r.clean_acc;
  r.tau = block_ratio(clean.w, p);
  r.c = block_ratio(perturbed.w, p);
  r.residual = kNaN;
  return r;
}

std::vector<double> number_list(const nlohmann::json& doc, const char* key) {
  const auto& v = doc.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(std::string("'") + key + "' must contain numbers");
      out.push_back(x.get<double>());
    }
  } else {
    throw ConfigError(std::string("'") + key + "' must be a number or an array of numbers");
  }
  return out;
}

std::vector<std::string> string_list(const nlohmann::json& doc, const char* key) {
  const auto& v = doc.at(key);
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_string()) throw ConfigError(std::string("'") + key + "' must contain strings");
      out.push_back(x.get<std::string>());
    }
  } else {
    throw ConfigError(std::string("'") + key + "' must be a string or an array of strings");
  }
  return out;
}

double parse_number(const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::runtime_error("malformed number '" + text + "' in grid CSV");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr std::string_view kCsvHeader =
    "mu1,mu2,zeta,eps,threat,pipeline,gap,clean_acc,perturbed_acc,tau,c,residual,status";

}  // namespace

std::string_view to_string(Pipeline pipeline) noexcept {
  switch (pipeline) {
    case Pipeline::Theory: return "theory";
    case Pipeline::Proxy: return "proxy";
    case Pipeline::AdvTrain: return "advtrain";
  }
  return "theory";
}

Pipeline parse_pipeline(std::string_view text) {
  const std::string t = lower(text);
  if (t == "theory") return Pipeline::Theory;
  if (t == "proxy") return Pipeline::Proxy;
  if (t == "advtrain") return Pipeline::AdvTrain;
  throw std::invalid_argument("unknown pipeline '" + std::string(text) + "' (expected theory, proxy or advtrain)");
}

void ExperimentPoint::validate() const {
  if (!(mu1 > 0.0) || !(mu2 > 0.0) || !std::isfinite(mu1) || !std::isfinite(mu2))
    throw ConfigError("mu1 and mu2 must be finite and > 0");
  if (!(var1 > 0.0) || !(var2 > 0.0)) throw ConfigError("feature variances must be > 0");
  if (!(zeta >= 0.5 && zeta <= 1.0)) throw ConfigError("zeta must lie in [0.5, 1]");
  if (!(eps_inf >= 0.0) || !std::isfinite(eps_inf)) throw ConfigError("eps must be finite and >= 0");
  if (pipeline != Pipeline::Theory && (n_train < 2 || n_test < 1))
    throw ConfigError("empirical pipelines need n_train >= 2 and n_test >= 1");
}

PopulationSpec ExperimentPoint::population() const {
  return PopulationSpec::two_feature(mu1, mu2, zeta, var1, var2);
}

PointResult run_point(const ExperimentPoint& p, const PipelineSettings& settings) {
  try {
    p.validate();
    return p.pipeline == Pipeline::Theory ? run_theory(p, settings) : run_empirical(p, settings);
  } catch (const std::exception& e) {
    PointResult r;
    r.ok = false;
    r.error = e.what();
    r.gap = r.clean_acc = r.perturbed_acc = r.tau = r.c = r.residual = kNaN;
    return r;
  }
}

SweepConfig SweepConfig::defaults() {
  SweepConfig c;
  for (int i = 0; i <= 10; ++i) c.mu1.push_back(0.5 + 0.25 * i);
  c.mu2 = c.mu1;
  c.zeta = {0.6, 0.9, 0.95, 0.99};
  c.eps_inf = {0.01};
  c.threats = {ThreatModel::L2, ThreatModel::Linf};
  c.pipelines = {Pipeline::Theory};
  return c;
}

void SweepConfig::validate() const {
  if (mu1.empty() || mu2.empty() || zeta.empty() || eps_inf.empty() || threats.empty() || pipelines.empty())
    throw ConfigError("grid axes must be nonempty");
  ExperimentPoint probe;
  probe.var1 = var1;
  probe.var2 = var2;
  probe.n_train = n_train;
  probe.n_test = n_test;
  for (double a : mu1)
    for (double b : mu2) {
      probe.mu1 = a;
      probe.mu2 = b;
      probe.validate();
    }
  for (double z : zeta) {
    probe.zeta = z;
    probe.validate();
  }
  for (double e : eps_inf) {
    probe.eps_inf = e;
    probe.validate();
  }
  for (Pipeline pl : pipelines) {
    probe.pipeline = pl;
    probe.validate();
  }
  if (proxy_epochs < 1 || advtrain_epochs < 1) throw ConfigError("epoch counts must be >= 1");
  if (mc_samples < 1000) throw ConfigError("validation.mc_samples must be >= 1000");
  if (mc_configs < 4) throw ConfigError("validation.mc_configs must be >= 4");
}

PipelineSettings SweepConfig::settings() const {
  PipelineSettings s;
  s.proxy.epochs = proxy_epochs;
  s.proxy.seed = seed;
  s.adversarial.epochs = advtrain_epochs;
  s.adversarial.seed = seed;
  return s;
}

SweepConfig sweep_config_from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known = {"mu1",   "mu2",     "zeta",   "eps_inf",  "threat",     "pipeline",
                                              "sigma", "n_train", "n_test", "seed",     "training",   "validation"};
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  SweepConfig c = SweepConfig::defaults();
  try {
    if (doc.contains("mu1")) c.mu1 = number_list(doc, "mu1");
    if (doc.contains("mu2")) c.mu2 = number_list(doc, "mu2");
    if (doc.contains("zeta")) c.zeta = number_list(doc, "zeta");
    if (doc.contains("eps_inf")) c.eps_inf = number_list(doc, "eps_inf");
    if (doc.contains("threat")) {
      c.threats.clear();
      for (const auto& t : string_list(doc, "threat")) c.threats.push_back(parse_threat(t));
    }
    if (doc.contains("pipeline")) {
      c.pipelines.clear();
      for (const auto& t : string_list(doc, "pipeline")) c.pipelines.push_back(parse_pipeline(t));
    }
    if (doc.contains("sigma")) {
      const auto sigma = number_list(doc, "sigma");
      if (sigma.size() != 2) throw ConfigError("'sigma' must list the two feature variances");
      c.var1 = sigma[0];
      c.var2 = sigma[1];
    }
    if (doc.contains("n_train")) c.n_train = doc.at("n_train").get<std::size_t>();
    if (doc.contains("n_test")) c.n_test = doc.at("n_test").get<std::size_t>();
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("training")) {
      const auto& t = doc.at("training");
      c.proxy_epochs = t.value("proxy_epochs", c.proxy_epochs);
      c.advtrain_epochs = t.value("advtrain_epochs", c.advtrain_epochs);
    }
    if (doc.contains("validation")) {
      const auto& v = doc.at("validation");
      c.mc_samples = v.value("mc_samples", c.mc_samples);
      c.mc_configs = v.value("mc_configs", c.mc_configs);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const SweepConfig& c) {
  nlohmann::json threats = nlohmann::json::array();
  for (auto t : c.threats) threats.push_back(std::string(to_string(t)));
  nlohmann::json pipelines = nlohmann::json::array();
  for (auto p : c.pipelines) pipelines.push_back(std::string(to_string(p)));
  return {{"mu1", c.mu1},
          {"mu2", c.mu2},
          {"zeta", c.zeta},
          {"eps_inf", c.eps_inf},
          {"threat", threats},
          {"pipeline", pipelines},
          {"sigma", {c.var1, c.var2}},
          {"n_train", c.n_train},
          {"n_test", c.n_test},
          {"seed", c.seed},
          {"training", {{"proxy_epochs", c.proxy_epochs}, {"advtrain_epochs", c.advtrain_epochs}}},
          {"validation", {{"mc_samples", c.mc_samples}, {"mc_configs", c.mc_configs}}}};
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return sweep_config_from_json(doc);
}

std::string config_hash(const SweepConfig& config) {
  const std::string dump = to_json(config).dump();
  const auto h = fnv1a64({reinterpret_cast<const unsigned char*>(dump.data()), dump.size()});
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t cell_seed(std::uint64_t base, double mu1, double mu2, double zeta, double eps_inf,
                        ThreatModel threat) {
  const double coords[] = {mu1, mu2, zeta, eps_inf, threat == ThreatModel::L2 ? 0.0 : 1.0};
  return base ^ fnv1a64_doubles(coords);
}

std::uint64_t test_seed(std::uint64_t cell) { return splitmix64(cell); }

double GapGrid::value(std::size_t row, std::size_t col) const {
  const auto& cell = cells.at(row * mu1_axis.size() + col);
  return cell.ok ? cell.gap : kNaN;
}

std::size_t GapGrid::invalid_cells() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.ok; }));
}

double GapGrid::max_residual() const {
  double r = 0.0;
  bool any = false;
  for (const auto& c : cells)
    if (c.ok && !std::isnan(c.residual)) {
      r = std::max(r, c.residual);
      any = true;
    }
  return any ? r : kNaN;
}

std::vector<GapGrid> run_sweep(const SweepConfig& config, int jobs) {
  config.validate();
  const PipelineSettings settings = config.settings();

  struct Task {
    std::size_t grid;
    std::size_t cell;
    ExperimentPoint point;
  };
  std::vector<GapGrid> grids;
  std::vector<Task> tasks;
  for (double zeta : config.zeta)
    for (double eps : config.eps_inf)
      for (ThreatModel threat : config.threats)
        for (Pipeline pipeline : config.pipelines) {
          GapGrid g;
          g.mu1_axis = config.mu1;
          g.mu2_axis = config.mu2;
          g.zeta = zeta;
          g.eps_inf = eps;
          g.threat = threat;
          g.pipeline = pipeline;
          g.seed = config.seed;
          g.cells.resize(config.mu1.size() * config.mu2.size());
          for (std::size_t i = 0; i < config.mu2.size(); ++i)
            for (std::size_t j = 0; j < config.mu1.size(); ++j) {
              ExperimentPoint p;
              p.mu1 = config.mu1[j];
              p.mu2 = config.mu2[i];
              p.var1 = config.var1;
              p.var2 = config.var2;
              p.zeta = zeta;
              p.eps_inf = eps;
              p.threat = threat;
              p.pipeline = pipeline;
              p.n_train = config.n_train;
              p.n_test = config.n_test;
              p.seed = cell_seed(config.seed, p.mu1, p.mu2, zeta, eps, threat);
              tasks.push_back({grids.size(), i * config.mu1.size() + j, p});
            }
          grids.push_back(std::move(g));
        }

  const unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(1U, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < tasks.size(); k = next.fetch_add(1))
      grids[tasks[k].grid].cells[tasks[k].cell] = run_point(tasks[k].point, settings);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(workers, tasks.size()); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return grids;
}

void write_grid_csv(std::ostream& os, const GapGrid& grid) {
  os << kCsvHeader << '\n';
  const std::string zeta = format_double(grid.zeta);
  const std::string eps = format_double(grid.eps_inf);
  for (std::size_t i = 0; i < grid.mu2_axis.size(); ++i)
    for (std::size_t j = 0; j < grid.mu1_axis.size(); ++j) {
      const PointResult& c = grid.cells.at(i * grid.mu1_axis.size() + j);
      os << format_double(grid.mu1_axis[j]) << ',' << format_double(grid.mu2_axis[i]) << ',' << zeta << ',' << eps
         << ',' << to_string(grid.threat) << ',' << to_string(grid.pipeline) << ',' << format_double(c.gap) << ','
         << format_double(c.clean_acc) << ',' << format_double(c.perturbed_acc) << ',' << format_double(c.tau)
         << ',' << format_double(c.c) << ',' << format_double(c.residual) << ',' << (c.ok ? "ok" : "error")
         << '\n';
    }
}

GapGrid read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::runtime_error("grid CSV has an unexpected header");
  struct Row {
    double mu1, mu2;
    PointResult r;
  };
  std::vector<Row> rows;
  GapGrid grid;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 13) throw std::runtime_error("grid CSV row has " + std::to_string(f.size()) + " fields");
    Row row{parse_number(f[0]), parse_number(f[1]), {}};
    row.r.gap = parse_number(f[6]);
    row.r.clean_acc = parse_number(f[7]);
    row.r.perturbed_acc = parse_number(f[8]);
    row.r.tau = parse_number(f[9]);
    row.r.c = parse_number(f[10]);
    row.r.residual = parse_number(f[11]);
    row.r.ok = f[12] == "ok";
    if (first) {
      grid.zeta = parse_number(f[2]);
      grid.eps_inf = parse_number(f[3]);
      grid.threat = parse_threat(f[4]);
      grid.pipeline = parse_pipeline(f[5]);
      first = false;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("grid CSV has no rows");
  std::set<double> a1, a2;
  for (const auto& r : rows) {
    a1.insert(r.mu1);
    a2.insert(r.mu2);
  }
  grid.mu1_axis.assign(a1.begin(), a1.end());
  grid.mu2_axis.assign(a2.begin(), a2.end());
  if (rows.size() != a1.size() * a2.size()) throw std::runtime_error("grid CSV does not cover a full grid");
  grid.cells.resize(rows.size());
  for (const auto& r : rows) {
    const auto j = static_cast<std::size_t>(std::lower_bound(grid.mu1_axis.begin(), grid.mu1_axis.end(), r.mu1) -
                                            grid.mu1_axis.begin());
    const auto i = static_cast<std::size_t>(std::lower_bound(grid.mu2_axis.begin(), grid.mu2_axis.end(), r.mu2) -
                                            grid.mu2_axis.begin());
    grid.cells[i * grid.mu1_axis.size() + j] = r.r;
  }
  return grid;
}

std::string grid_file_stem(const GapGrid& grid) {
  return "gap_" + std::string(to_string(grid.pipeline)) + "_" + std::string(to_string(grid.threat)) + "_zeta" +
         format_double(grid.zeta) + "_eps" + format_double(grid.eps_inf);
}

nlohmann::json write_sweep_outputs(const SweepConfig& config, const std::vector<GapGrid>& grids,
                                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());

  const std::string hash = config_hash(config);
  nlohmann::json files = nlohmann::json::array();
  auto write_file = [&](const std::string& name, const std::string& content) {
    std::ofstream out(out_dir / name, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("failed to write " + (out_dir / name).string());
  };

  for (const auto& grid : grids) {
    const std::string stem = grid_file_stem(grid);
    std::ostringstream csv;
    write_grid_csv(csv, grid);
    write_file(stem + ".csv", csv.str());
    write_file(stem + ".svg", render_heatmap_svg(grid));

    nlohmann::json errors = nlohmann::json::array();
    for (std::size_t i = 0; i < grid.mu2_axis.size(); ++i)
      for (std::size_t j = 0; j < grid.mu1_axis.size(); ++j) {
        const auto& c = grid.cells[i * grid.mu1_axis.size() + j];
        if (!c.ok) errors.push_back({{"mu1", grid.mu1_axis[j]}, {"mu2", grid.mu2_axis[i]}, {"message", c.error}});
      }
    const double max_res = grid.max_residual();
    nlohmann::json meta = {{"zeta", grid.zeta},
                           {"eps_inf", grid.eps_inf},
                           {"threat", std::string(to_string(grid.threat))},
                           {"pipeline", std::string(to_string(grid.pipeline))},
                           {"seed", grid.seed},
                           {"config_hash", hash},
                           {"seed_rule", std::string(kSeedRule)},
                           {"cells", grid.cells.size()},
                           {"invalid_cells", grid.invalid_cells()},
                           {"max_residual", std::isnan(max_res) ? nlohmann::json(nullptr) : nlohmann::json(max_res)},
                           {"errors", errors}};
    nlohmann::json csv_entry = meta;
    csv_entry["path"] = stem + ".csv";
    csv_entry["kind"] = "csv";
    files.push_back(csv_entry);
    nlohmann::json svg_entry = meta;
    svg_entry["path"] = stem + ".svg";
    svg_entry["kind"] = "svg";
    files.push_back(svg_entry);
  }

  nlohmann::json manifest = {{"config", to_json(config)},
                             {"config_hash", hash},
                             {"seed_rule", std::string(kSeedRule)},
                             {"files", files}};
  write_file("manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace advdist

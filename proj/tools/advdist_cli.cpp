#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advdist/format.hpp"
#include "advdist/heatmap.hpp"
#include "advdist/sweep.hpp"
#include "advdist/theory.hpp"
#include "advdist/validation.hpp"

namespace fs = std::filesystem;
using namespace advdist;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kConfig = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::vector<std::string> pipelines;
  std::vector<std::string> threats;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

SweepConfig resolve_config(const CommonFlags& flags) {
  SweepConfig c = flags.config.empty() ? SweepConfig::defaults() : load_sweep_config(flags.config);
  try {
    if (!flags.pipelines.empty()) {
      c.pipelines.clear();
      for (const auto& p : flags.pipelines) c.pipelines.push_back(parse_pipeline(p));
    }
    if (!flags.threats.empty()) {
      c.threats.clear();
      for (const auto& t : flags.threats) c.threats.push_back(parse_threat(t));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (flags.seed) c.seed = *flags.seed;
  c.validate();
  return c;
}

nlohmann::json fixed_point_json(const FixedPointResult& r) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& cand : r.candidates)
    candidates.push_back(
        {{"root", cand.root}, {"residual", cand.residual}, {"training_accuracy", cand.training_accuracy}});
  return {{"value", r.value},
          {"residual", r.residual},
          {"iterations", r.iterations},
          {"bracket", {r.bracket.first, r.bracket.second}},
          {"candidates", candidates}};
}

int cmd_sweep(const CommonFlags& flags) {
  const SweepConfig config = resolve_config(flags);
  const fs::path out = flags.out.empty() ? fs::path("out") : fs::path(flags.out);
  const auto grids = run_sweep(config, flags.jobs);
  write_sweep_outputs(config, grids, out);
  std::size_t invalid = 0;
  for (const auto& g : grids) {
    invalid += g.invalid_cells();
    std::cout << grid_file_stem(g) << ".csv";
    if (g.invalid_cells() > 0) std::cout << " (" << g.invalid_cells() << " invalid cells)";
    std::cout << "\n";
  }
  std::cout << "wrote " << grids.size() << " grids to " << out.string() << "\n";
  if (invalid > 0) std::cerr << "warning: " << invalid << " cells marked invalid, see manifest.json\n";
  return kOk;
}

int cmd_render(const std::string& input, const std::string& out) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot open " + input);
  const GapGrid grid = read_grid_csv(in);
  fs::path target = out.empty() ? fs::path(input).replace_extension(".svg") : fs::path(out);
  if (fs::is_directory(target)) target /= grid_file_stem(grid) + ".svg";
  render_heatmap(grid, target);
  std::cout << target.string() << "\n";
  return kOk;
}

int cmd_validate(const CommonFlags& flags, bool inject_fault) {
  const SweepConfig config = resolve_config(flags);
  ValidationOptions options = ValidationOptions::from_config(config);
  options.inject_phi_fault = inject_fault;
  const ValidationReport report = run_validation(config, options);
  write_validation_text(std::cout, report);
  if (!flags.out.empty()) {
    const fs::path out(flags.out);
    fs::create_directories(out);
    std::ofstream checks(out / "validation_checks.csv", std::ios::binary);
    write_validation_checks_csv(checks, report);
    std::ofstream mc(out / "validation_mc.csv", std::ios::binary);
    write_comparison_report(mc, report.comparisons);
    if (!checks || !mc) throw std::runtime_error("failed to write validation report to " + out.string());
  }
  return report.passed() ? kOk : kRuntime;
}

struct SolveFlags {
  double mu1 = 1.0;
  double mu2 = 1.0;
  double var1 = 1.0;
  double var2 = 1.0;
  double zeta = 0.95;
  double eps = 0.01;
  std::string threat = "linf";
};

int cmd_solve(const SolveFlags& f) {
  ExperimentPoint p;
  p.mu1 = f.mu1;
  p.mu2 = f.mu2;
  p.var1 = f.var1;
  p.var2 = f.var2;
  p.zeta = f.zeta;
  p.eps_inf = f.eps;
  try {
    p.threat = parse_threat(f.threat);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  p.validate();

  nlohmann::json doc = {{"mu1", p.mu1},   {"mu2", p.mu2}, {"sigma", {p.var1, p.var2}},
                        {"zeta", p.zeta}, {"eps_inf", p.eps_inf}, {"threat", std::string(to_string(p.threat))}};
  try {
    const TheoryGap tg = theoretical_gap(p.population(), p.eps_inf, p.threat);
    doc["eps"] = tg.eps;
    doc["m1"] = tg.m1;
    doc["m2"] = tg.m2;
    doc["delta"] = std::vector<double>(tg.direction.delta.data(), tg.direction.delta.data() + tg.direction.delta.size());
    doc["terms"] = {{"n1", tg.terms.n1}, {"n2", tg.terms.n2}, {"n3", tg.terms.n3}};
    doc["tau"] = fixed_point_json(tg.tau);
    doc["c"] = fixed_point_json(tg.c);
    doc["clean_balanced"] = tg.clean_balanced;
    doc["perturbed_balanced"] = tg.perturbed_balanced;
    doc["gap"] = tg.gap;
    std::cout << doc.dump(2) << "\n";
    return kOk;
  } catch (const SolverError& e) {
    doc["error"] = e.what();
    doc["diagnostics"] = fixed_point_json(e.diagnostics());
    std::cout << doc.dump(2) << "\n";
    return kRuntime;
  }
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_out = true) {
  cmd->add_option("--config", flags.config, "JSON sweep configuration")->check(CLI::ExistingFile);
  if (with_out) cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--pipeline", flags.pipelines, "theory, proxy, advtrain (repeatable)")->delimiter(',');
  cmd->add_option("--threat", flags.threats, "l2, linf (repeatable)")->delimiter(',');
  cmd->add_option("--seed", flags.seed, "base seed");
  cmd->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accuracy gaps of adversarially perturbed linear classifiers under spurious correlation"};
  app.require_subcommand(1);

  CommonFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep and write CSV, SVG and manifest");
  add_common(sweep, sweep_flags);

  std::string render_input;
  std::string render_out;
  auto* render = app.add_subcommand("render", "render a sweep CSV as an SVG heatmap");
  render->add_option("input", render_input, "grid CSV")->required()->check(CLI::ExistingFile);
  render->add_option("--out", render_out, "SVG file or directory");

  CommonFlags validate_flags;
  bool inject_fault = false;
  auto* validate = app.add_subcommand("validate", "closed-form consistency and Monte Carlo agreement checks");
  add_common(validate, validate_flags);
  validate->add_flag("--inject-phi-fault", inject_fault)->group("");

  SolveFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "solve tau and c at one point and print diagnostics");
  solve->add_option("--mu1", solve_flags.mu1);
  solve->add_option("--mu2", solve_flags.mu2);
  solve->add_option("--var1", solve_flags.var1);
  solve->add_option("--var2", solve_flags.var2);
  solve->add_option("--zeta", solve_flags.zeta);
  solve->add_option("--eps", solve_flags.eps, "l-inf budget (l2 uses sqrt(d) times it)");
  solve->add_option("--threat", solve_flags.threat);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*sweep) return cmd_sweep(sweep_flags);
    if (*render) return cmd_render(render_input, render_out);
    if (*validate) return cmd_validate(validate_flags, inject_fault);
    if (*solve) return cmd_solve(solve_flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kRuntime;
}

// pairloc: sample positions, run relaxation traces and field sweeps, solve
// the pair models and fit relaxation curves. Every run writes CSV files and a
// manifest.json next to them.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pairloc/config.hpp"
#include "pairloc/experiment.hpp"
#include "pairloc/fit.hpp"
#include "pairloc/io.hpp"
#include "pairloc/pair_models.hpp"
#include "pairloc/parallel.hpp"

namespace fs = std::filesystem;
using namespace pairloc;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string output_dir;
  std::size_t workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  auto* cfg = cmd->add_option("-c,--config", a.config_path, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("-p,--preset", a.preset, "start from a preset (weak|strong|vdw)")->excludes(cfg);
  cmd->add_option("-o,--output-dir", a.output_dir, "output directory (overrides run.output_dir)");
  cmd->add_option("-w,--workers", a.workers, "worker threads (overrides run.workers)");
}

ExperimentConfig resolve_config(const CommonArgs& a) {
  ExperimentConfig c;
  if (!a.config_path.empty())
    c = load_config(a.config_path);
  else if (!a.preset.empty())
    c = parse_config("[run]\npreset = " + a.preset + "\n", "--preset");
  else
    throw CLI::ValidationError("one of --config or --preset is required");
  if (!a.output_dir.empty()) c.output_dir = a.output_dir;
  if (a.workers > 0) c.workers = a.workers;
  return c;
}

class Run {
 public:
  Run(std::string command, const ExperimentConfig& c)
      : start_(std::chrono::steady_clock::now()), dir_(c.output_dir) {
    manifest_.command = std::move(command);
    manifest_.config_ini = config_to_ini(c);
    manifest_.seed = c.seed;
    manifest_.workers = c.workers > 0 ? c.workers : default_worker_count();
    fs::create_directories(dir_);
  }

  fs::path output(const std::string& name) {
    manifest_.outputs.push_back(name);
    return dir_ / name;
  }

  void note(const std::string& s) {
    std::cerr << "note: " << s << '\n';
    manifest_.notes.push_back(s);
  }

  void finish() {
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    io::write_manifest(dir_ / "manifest.json", manifest_);
    std::cout << "wrote " << manifest_.outputs.size() << " file(s) to " << dir_.string() << '\n';
  }

 private:
  std::chrono::steady_clock::time_point start_;
  fs::path dir_;
  io::Manifest manifest_;
};

void report_failures(Run& run, const std::vector<RealizationFailure>& failures) {
  for (const auto& f : failures)
    run.note(fmt::format("realization {} omega {}: {}", f.realization, f.omega, f.message));
}

int cmd_presets() {
  fmt::print("{:<8} {:>6} {:>7} {:>18} {:>7} {:>7} {:<16} {:>10} {:<16} {:>7}\n", "name",
             "N", "r_bl", "radii (um)", "a0", "a0_smp", "law", "J_med MHz", "ensemble",
             "rescale");
  for (const auto& p : presets())
    fmt::print("{:<8} {:>6} {:>7} {:>18} {:>7} {:>7} {:<16} {:>10} {:<16} {:>7}\n", p.name,
               p.n_spins, p.r_bl, fmt::format("{}x{}x{}", p.radii[0], p.radii[1], p.radii[2]),
               p.table_a0, p.sampling_a0, p.law, p.j_median_mhz, pairs::to_string(p.ensemble),
               p.rescale);
  return 0;
}

int cmd_sample(const ExperimentConfig& c, std::size_t realization) {
  Run run("sample", c);
  const auto pos = sample_realization(c, realization);
  io::write_positions_csv(run.output(fmt::format("positions_r{}.csv", realization)), pos);
  run.note(fmt::format("realization {} seed {} J_median {} MHz", realization, pos.seed,
                       median_nn_coupling(pos, c.law)));
  run.finish();
  return 0;
}

int cmd_sweep(const ExperimentConfig& c) {
  Run run("sweep", c);
  const auto res = run_field_sweep(c);
  io::write_sweep_csv(run.output("sweep.csv"), res);
  report_failures(run, res.failures);
  run.finish();
  return 0;
}

int cmd_relax(const ExperimentConfig& c) {
  Run run("relax", c);
  const auto res = run_relaxation(c);
  const std::size_t n_traj = c.engine == Engine::Dtwa ? c.n_traj : 0;
  for (std::size_t k = 0; k < res.traces.size(); ++k)
    io::write_trace_csv(run.output(fmt::format("trace_{:03}.csv", k)), res.times,
                        res.traces[k].mean, res.traces[k].sem, n_traj);
  for (std::size_t k = 0; k < res.traces.size(); ++k)
    run.note(fmt::format("trace_{:03}.csv: omega = {} MHz", k, res.traces[k].omega));
  report_failures(run, res.failures);
  run.finish();
  return 0;
}

int cmd_pairs(const ExperimentConfig& c, std::size_t realization) {
  Run run("pairs", c);
  const auto pos = sample_realization(c, realization);
  const auto J = build_coupling_matrix(pos, c.law, c.cutoff_um);
  const auto d = pairs::match_pairs(pos, J, c.matching);
  const auto gge = pairs::ensemble_field_sweep(d, c.omegas, pairs::EnsembleKind::GgeMeanField,
                                               c.rescale, c.mean_field, c.workers);
  const auto can = pairs::ensemble_field_sweep(d, c.omegas, pairs::EnsembleKind::CanonicalGlobal,
                                               c.rescale, c.mean_field, c.workers);
  io::write_pair_sweep_csv(run.output(fmt::format("pairs_r{}.csv", realization)), gge, can);
  for (const auto* s : {&gge, &can})
    for (const auto& pt : *s)
      if (!pt.ok) run.note(fmt::format("omega {}: {}", pt.omega, pt.error));
  run.finish();
  return 0;
}

int cmd_fit(const std::string& path, const std::string& column, double t_max) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string h;
    while (std::getline(ss, h, ',')) header.push_back(h);
  }
  const auto col = std::find(header.begin(), header.end(), column);
  if (header.empty() || header[0] != "t_us" || col == header.end())
    throw std::runtime_error(path + ": expected a trace CSV with columns t_us and " + column);
  const auto ci = static_cast<std::size_t>(col - header.begin());
  std::vector<double> t, v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() <= ci) throw std::runtime_error(path + ": short row '" + line + "'");
    const double tt = std::stod(cells[0]);
    if (t_max > 0 && tt > t_max) break;
    t.push_back(tt);
    v.push_back(std::stod(cells[ci]));
  }
  const auto f = fit_stretched_exponential(t, v);
  fmt::print("{{\"m_inf\": {}, \"tau_us\": {}, \"beta_s\": {}, \"residual\": {}, \"iterations\": {}}}\n",
             f.m_inf, f.tau, f.beta_s, f.residual, f.iterations);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pair localization in disordered spin ensembles"};
  app.set_version_flag("--version", io::version_string());
  app.require_subcommand(1);

  CommonArgs common;
  std::size_t realization = 0;
  std::string fit_input, fit_column = "sx_mean";
  double fit_tmax = 0.0;

  auto* presets_cmd = app.add_subcommand("presets", "list the built-in cloud presets");
  auto* sample = app.add_subcommand("sample", "sample blockaded positions for one realization");
  add_common(sample, common);
  sample->add_option("-r,--realization", realization, "realization index");
  auto* sweep = app.add_subcommand("sweep", "late-time magnetization vs field");
  add_common(sweep, common);
  auto* relax = app.add_subcommand("relax", "relaxation traces (ed or dtwa engine)");
  add_common(relax, common);
  auto* pairs_cmd = app.add_subcommand("pairs", "GGE and canonical pair curves for one realization");
  add_common(pairs_cmd, common);
  pairs_cmd->add_option("-r,--realization", realization, "realization index");
  auto* fit = app.add_subcommand("fit", "stretched-exponential fit of a trace CSV");
  fit->add_option("input", fit_input, "trace CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--column", fit_column, "value column");
  fit->add_option("--t-max", fit_tmax, "ignore samples after this time (us)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (presets_cmd->parsed()) return cmd_presets();
    if (fit->parsed()) return cmd_fit(fit_input, fit_column, fit_tmax);
    const ExperimentConfig c = resolve_config(common);
    if (sample->parsed()) return cmd_sample(c, realization);
    if (sweep->parsed()) return cmd_sweep(c);
    if (relax->parsed()) return cmd_relax(c);
    if (pairs_cmd->parsed()) return cmd_pairs(c, realization);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

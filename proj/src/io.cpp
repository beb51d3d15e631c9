#include "pairloc/io.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#ifndef PAIRLOC_VERSION
#define PAIRLOC_VERSION "0.0.0"
#endif

namespace pairloc::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void close_checked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw std::runtime_error("error writing " + path.string());
}

}  // namespace

std::string format_number(double x) { return fmt::format("{}", x); }

void write_positions_csv(const std::filesystem::path& path, const SpinPositions& positions) {
  auto out = open_out(path);
  out << "index,x_um,y_um,z_um\n";
  for (std::size_t i = 0; i < positions.points.size(); ++i) {
    const auto& p = positions.points[i];
    out << i << ',' << format_number(p.x()) << ',' << format_number(p.y()) << ','
        << format_number(p.z()) << '\n';
  }
  close_checked(out, path);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& times,
                     const std::vector<double>& mean, const std::vector<double>& sem,
                     std::size_t n_traj) {
  if (mean.size() != times.size() || sem.size() != times.size())
    throw std::invalid_argument("trace columns differ in length");
  auto out = open_out(path);
  out << "t_us,sx_mean,sx_stderr,n_traj\n";
  for (std::size_t k = 0; k < times.size(); ++k)
    out << format_number(times[k]) << ',' << format_number(mean[k]) << ','
        << format_number(sem[k]) << ',' << n_traj << '\n';
  close_checked(out, path);
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
  auto out = open_out(path);
  out << "omega_mhz,m_late,m_stderr,engine,n_ok\n";
  for (const auto& r : sweep.rows)
    out << format_number(r.omega) << ',' << format_number(r.m_late) << ','
        << format_number(r.m_stderr) << ',' << to_string(sweep.engine) << ',' << r.n_ok << '\n';
  close_checked(out, path);
}

void write_pair_sweep_csv(const std::filesystem::path& path,
                          const std::vector<pairs::SweepPoint>& gge,
                          const std::vector<pairs::SweepPoint>& canonical) {
  if (gge.size() != canonical.size()) throw std::invalid_argument("sweeps differ in length");
  auto out = open_out(path);
  out << "omega_mhz,m_gge,m_canonical,beta,residual,iterations\n";
  for (std::size_t k = 0; k < gge.size(); ++k)
    out << format_number(gge[k].omega) << ',' << format_number(gge[k].m) << ','
        << format_number(canonical[k].m) << ',' << format_number(canonical[k].beta) << ','
        << format_number(std::max(gge[k].residual, canonical[k].residual)) << ','
        << gge[k].iterations + canonical[k].iterations << '\n';
  close_checked(out, path);
}

void write_spectrum_csv(const std::filesystem::path& path, const ed::SpectralData& s) {
  auto out = open_out(path);
  out << "eigenvalue_mhz,overlap,sx\n";
  for (std::size_t k = 0; k < s.eigenvalues.size(); ++k)
    out << format_number(s.eigenvalues[k]) << ',' << format_number(s.overlaps[k]) << ','
        << format_number(s.magnetizations[k]) << '\n';
  close_checked(out, path);
}

std::string version_string() { return PAIRLOC_VERSION; }

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  nlohmann::json j;
  j["version"] = version_string();
  j["command"] = m.command;
  j["config"] = m.config_ini;
  j["seed"] = m.seed;
  j["workers"] = m.workers;
  j["wall_seconds"] = m.wall_seconds;
  j["outputs"] = m.outputs;
  j["notes"] = m.notes;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  close_checked(out, path);
}

}  // namespace pairloc::io

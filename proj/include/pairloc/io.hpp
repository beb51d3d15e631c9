#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pairloc/experiment.hpp"
#include "pairloc/pair_models.hpp"
#include "pairloc/quantum_ed.hpp"

namespace pairloc::io {

// Numbers are written in shortest round-trip form, so equal doubles give
// byte-equal files.
std::string format_number(double x);

void write_positions_csv(const std::filesystem::path& path, const SpinPositions& positions);
void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& times,
                     const std::vector<double>& mean, const std::vector<double>& sem,
                     std::size_t n_traj);
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);
/// Columns omega_mhz, m_gge, m_canonical, beta, residual, iterations.
void write_pair_sweep_csv(const std::filesystem::path& path,
                          const std::vector<pairs::SweepPoint>& gge,
                          const std::vector<pairs::SweepPoint>& canonical);
void write_spectrum_csv(const std::filesystem::path& path, const ed::SpectralData& spectrum);

struct Manifest {
  std::string command;
  std::string config_ini;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
  std::vector<std::string> notes;
};

std::string version_string();
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

}  // namespace pairloc::io

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pairloc/couplings.hpp"
#include "pairloc/geometry.hpp"
#include "pairloc/pair_models.hpp"

namespace pairloc {

// Cloud parameters of one experimental regime. Positions are sampled in a box
// with the aspect ratio of the quoted cloud radii whose volume gives the
// density N / (4π/3 sampling_a0³).
struct Preset {
  std::string name;
  std::string description;
  std::size_t n_spins = 0;
  double r_bl = 0.0;                      // μm
  std::array<double, 3> radii{};          // quoted 1/e² radii, μm
  double table_a0 = 0.0;                  // quoted Wigner-Seitz radius, μm
  double sampling_a0 = 0.0;               // radius used for sampling, μm
  std::string law;                        // interaction_law_preset name
  double j_median_mhz = 0.0;              // quoted J_median/2π
  pairs::EnsembleKind ensemble = pairs::EnsembleKind::GgeMeanField;
  double rescale = 1.0;
};

const std::vector<Preset>& presets();
const Preset& preset(const std::string& name);

/// Box of the preset's aspect ratio holding n_spins at density set by a0.
CloudGeometry scaled_cloud(const std::array<double, 3>& radii, std::size_t n_spins, double a0);

enum class Engine { Ed, Dtwa, PairDiagonal, PairGge, PairCanonical };
std::string to_string(Engine engine);
Engine engine_from_string(const std::string& s);
bool is_trace_engine(Engine engine);

struct ExperimentConfig {
  std::string preset;  // informational; fields below are authoritative
  CloudGeometry cloud;
  std::size_t n_spins = 0;
  double r_bl = 0.0;
  std::optional<double> a0;  // if set, the cloud box is rescaled to this density
  InteractionLaw law;
  std::optional<double> cutoff_um;

  Engine engine = Engine::PairGge;
  std::vector<double> omegas;  // MHz
  std::vector<double> times;   // μs, trace engines
  double t_late = 10.0;
  bool window_mode = true;       // mean over the final 10% before t_late
  double window_fraction = 0.1;

  std::size_t n_realizations = 1;
  std::size_t n_traj = 1000;
  double dtwa_tol = 1e-8;
  std::size_t batch_size = 16;
  bool dtwa_single_precision = false;
  std::uint64_t seed = 1;
  double rescale = 1.0;
  pairs::MatchOptions matching;
  pairs::MeanFieldOptions mean_field;
  std::size_t workers = 0;
  std::string output_dir = ".";

  void validate() const;
};

/// Config filled from a preset: geometry, law, engine and rescale defaults.
ExperimentConfig config_from_preset(const std::string& name);

/// Symmetric field grid with `n_inner` points per side in (0, inner] and
/// `n_outer` points per side in (inner, outer].
std::vector<double> default_field_grid(double inner, double outer, std::size_t n_inner = 10,
                                       std::size_t n_outer = 10);

std::vector<double> uniform_times(double t_max, std::size_t n);

/// Positions of realization r (seeded from config.seed and r).
SpinPositions sample_realization(const ExperimentConfig& config, std::size_t realization);

struct RealizationFailure {
  std::size_t realization = 0;
  double omega = 0.0;
  std::string message;
};

struct Trace {
  double omega = 0.0;
  std::vector<double> mean;    // disorder-averaged <S_x>(t)
  std::vector<double> sem;     // across realizations; DTWA stderr for one realization
  std::size_t n_ok = 0;
};

struct RelaxationResult {
  std::vector<double> times;
  std::vector<Trace> traces;
  std::vector<double> j_median;  // per realization, MHz
  std::vector<RealizationFailure> failures;
};

RelaxationResult run_relaxation(const ExperimentConfig& config);

struct SweepRow {
  double omega = 0.0;
  double m_late = 0.0;
  double m_stderr = 0.0;
  std::size_t n_ok = 0;
};

struct SweepResult {
  Engine engine = Engine::PairGge;
  std::vector<SweepRow> rows;
  std::vector<double> j_median;
  std::vector<RealizationFailure> failures;
};

/// Late-time value of a trace: window mean over (t_late(1-f), t_late], or the
/// sample at t_late.
double late_time_value(const std::vector<double>& times, const std::vector<double>& values,
                       double t_late, bool window_mode, double window_fraction = 0.1);

SweepResult run_field_sweep(const ExperimentConfig& config);

}  // namespace pairloc

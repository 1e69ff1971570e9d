#pragma once

// Disorder-averaged experiments. Realization k of an experiment draws its
// random numbers from the counter key (base_seed, k, draw index), independent
// of the strength or t_final grid point, so grids can be extended without
// perturbing existing draws and results do not depend on scheduling.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "sshhom/model.hpp"

namespace sshhom {

enum class ExperimentKind { bs_fidelity, hom_fidelity, tf_scan, parity_study, df_study };
enum class Regime { bdi_static, bdi_temporal, inv_static, generic_static, generic_temporal };

std::string to_string(ExperimentKind kind);
std::string to_string(Regime regime);
ExperimentKind parse_experiment_kind(const std::string& name);
Regime parse_regime(const std::string& name);

/// Disorder template (kind, policy, refresh interval) of a regime.
DisorderSpec regime_disorder(Regime regime);

struct ExperimentConfig {
  LatticeSpec lattice;
  double t_final = 252.0;
  int n_steps = 0;  // 0 selects Schedule::default_steps
  // Kind, policy and refresh interval; strength and seed come from the grid.
  DisorderSpec disorder;
  std::vector<double> strengths{0.0};
  std::vector<double> t_finals;  // tf_scan grid
  ExperimentKind kind = ExperimentKind::hom_fidelity;
  // Figure of merit scanned by tf_scan (bs_fidelity or hom_fidelity).
  ExperimentKind tf_measure = ExperimentKind::bs_fidelity;
  int n_realizations = 100;
  std::uint64_t base_seed = 1;
  int workers = 0;  // 0 = hardware concurrency
  int sample_stride = 64;

  Schedule schedule_for(double t_final) const;
  void validate() const;
};

struct GridPointStats {
  double parameter = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  int n_valid = 0;
  int n_flagged = 0;
  std::vector<double> values;  // NaN where a realization failed outright
  std::vector<bool> flagged;
  std::vector<std::string> reasons;
};

struct EnsembleResult {
  ExperimentKind kind = ExperimentKind::hom_fidelity;
  std::vector<GridPointStats> points;
};

/// Statistics over realizations; values that are NaN are excluded.
/// Flagged realizations keep their value in the statistics and are counted.
GridPointStats summarize(double parameter, std::vector<double> values, std::vector<bool> flagged,
                         std::vector<std::string> reasons);

/// One grid point per strength.
EnsembleResult run_ensemble(const ExperimentConfig& cfg);

struct TfScanResult {
  std::vector<GridPointStats> points;  // parameter = t_final
  double argmax_t_final = 0.0;
  double max_mean = 0.0;
  std::vector<double> best_per_realization;
  std::vector<double> best_t_per_realization;
};

/// Fidelity vs t_final at the first configured strength.
TfScanResult tf_scan(const ExperimentConfig& cfg);

inline constexpr int kDfWindows = 10;

/// Everything recorded while evolving the end-site inputs |1> and |2N>.
struct EndSiteRun {
  Eigen::MatrixXcd final_columns;
  std::vector<double> times;
  std::vector<double> noon_fidelity;
  std::vector<double> nity;
  std::vector<double> parity_plus;   // input (|1> + |2N>)/sqrt(2)
  std::vector<double> parity_minus;  // input (|1> - |2N>)/sqrt(2)
  // Mean D_f of the instantaneous in-gap states over each 0.1 t_final window.
  std::array<double, kDfWindows> window_df_plus{};
  std::array<double, kDfWindows> window_df_minus{};
  double max_leakage = 0.0;

  double windowed_abs_df() const;
  double parity_drift() const;
};

struct EndSiteOptions {
  int sample_stride = 64;
  bool track_in_gap = true;
  bool record_two_particle = true;
};

EndSiteRun run_end_sites(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec,
                         const EndSiteOptions& options = {});

struct RegimeOptions {
  LatticeSpec lattice;
  double t_final = 252.0;
  int n_steps = 0;
  double strength = 0.2;
  int n_realizations = 100;
  std::uint64_t base_seed = 1;
  int workers = 0;
  int sample_stride = 64;
};

struct RegimeReport {
  Regime regime = Regime::bdi_static;
  DisorderSpec disorder;
  double t_final = 0.0;
  std::vector<double> times;
  // Realization 0, for single-trajectory plots.
  std::vector<double> fidelity_first, nity_first, parity_plus_first, parity_minus_first;
  std::array<double, kDfWindows> window_df_plus_first{}, window_df_minus_first{};
  Eigen::MatrixXd final_gamma_first;
  // Ensemble means.
  std::vector<double> fidelity_mean, nity_mean, parity_plus_mean, parity_minus_mean;
  Eigen::MatrixXd final_gamma_mean;
  GridPointStats final_fidelity;
  GridPointStats final_nity;
  GridPointStats windowed_abs_df;
  GridPointStats parity_drift;
  // max_t |<P(t)> - P(0)| of the ensemble-mean parity of (|1>+|2N>)/sqrt(2).
  double mean_parity_drift = 0.0;
};

RegimeReport symmetry_regime_study(Regime regime, const RegimeOptions& options);

/// Runs fn(0..count-1) on up to `workers` threads (0 = hardware concurrency).
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace sshhom

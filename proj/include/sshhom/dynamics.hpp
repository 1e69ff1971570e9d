#pragma once

// Time-ordered propagation of single-particle states through the adiabatic
// ramp, dynamical phase bookkeeping and the tunable beam-splitter scan.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "sshhom/model.hpp"
#include "sshhom/spectral.hpp"

namespace sshhom {

struct Propagator {
  Eigen::MatrixXcd u;
  double t_final = 0.0;
  int n_steps = 0;

  double unitarity_error() const;
};

/// What an observer sees after each integrator step.
struct StepView {
  int step;
  double t_mid;                      // time at which H was sampled
  const EigenSystem& eigen;          // eigensystem of H(t_mid) with this step's draw
  const Eigen::MatrixXcd& columns;   // evolved states at t = (step + 1) dt
};

using StepObserver = std::function<void(const StepView&)>;

/// Evolves each column of `states` with
///   prod_k exp(-i H(t_k + dt/2) dt),
/// drawing disorder per step as dspec prescribes. Each factor is applied
/// through the exact eigendecomposition of H, so every step is unitary.
Eigen::MatrixXcd evolve(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec,
                        Eigen::MatrixXcd states, const StepObserver& observer = {});

Propagator propagate(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec);

/// Compares n_steps against 2 n_steps for the columns of sites 1 and 2N.
/// Throws ConvergenceError (with a suggested step count) when any site
/// probability moves by more than `tolerance`. Temporal disorder changes the
/// noise itself when the step changes, so it is rejected.
double check_convergence(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec,
                         double tolerance = 1e-8);

struct PhaseReport {
  double phi_d = 0.0;
  std::vector<double> times;
  std::vector<double> e_plus;
};

/// Trapezoidal integral of the half splitting (E_+ - E_-)/2 of the tracked
/// in-gap pair over the n_steps + 1 grid nodes of the schedule. Equal to
/// int E_+ dt whenever the spectrum is chiral symmetric.
PhaseReport dynamical_phase(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec);

/// (1/pi) int_0^pi E_+(theta) d theta of the clean chain.
double mean_in_gap_energy(const LatticeSpec& spec, int quadrature_nodes = 20001);

/// t_final such that the clean chain accumulates target_phase.
double calibrate_t_final(const LatticeSpec& spec, double target_phase);

/// Ideal tunable beam-splitter output for input site 0 or 2N-1:
///   |1>  -> cos(phi)|1> + (-1)^N i sin(phi)|2N>,
///   |2N> -> (-1)^N i sin(phi)|1> + cos(phi)|2N>.
WaveFunction beam_splitter_target(const LatticeSpec& spec, double phi_d, int input_site);

struct BeamSplitterRow {
  double phi_target = 0.0;
  double t_final = 0.0;
  double phi_d = 0.0;  // phase actually accumulated at that t_final
  int input_site = 0;
  double p_port1 = 0.0;
  double p_port2 = 0.0;
  double leakage = 0.0;
  bool flagged = false;
};

inline constexpr double kLeakageThreshold = 0.01;

/// For every phase, calibrates t_final, propagates the clean chain and
/// records the end-site probabilities for both inputs.
std::vector<BeamSplitterRow> beam_splitter_scan(const LatticeSpec& spec,
                                                const std::vector<double>& phase_grid,
                                                int n_steps_override = 0);

struct TrajectorySample {
  double t = 0.0;
  WaveFunction state;
  double parity = 0.0;
  double df = 0.0;
  double in_gap_population = 1.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
};

/// Evolves psi0 and records parity <I>, D_f of the state and its population
/// in the instantaneous in-gap pair at t = 0 and every `stride` steps
/// (always including t_final).
Trajectory parity_trajectory(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec,
                             const WaveFunction& psi0, int stride = 64);

/// Largest population outside the in-gap subspace along the trajectory.
double adiabaticity_metric(const Trajectory& trajectory);

WaveFunction site_state(int sites, int site);

}  // namespace sshhom

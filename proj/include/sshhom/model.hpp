#pragma once

// Time-dependent single-particle SSH chain: geometry, the sin-ramp schedule of
// the intracell hopping, disorder realizations and symmetry operators.
//
// Sites are 0-based internally (site 0 is the left end, site 2N-1 the right
// end). Energies are in units of the intercell hopping w, times in 1/w.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sshhom {

using Complex = std::complex<double>;

/// Single-particle state on the 2N sites.
using WaveFunction = Eigen::VectorXcd;

struct LatticeSpec {
  int n_cells = 8;
  double v0 = 0.6;
  double w = 1.0;

  int sites() const { return 2 * n_cells; }
  void validate() const;
};

/// theta(t) = pi t / t_final, integrated in n_steps midpoint steps.
struct Schedule {
  double t_final = 252.0;
  int n_steps = 0;

  static int default_steps(double t_final);
  static Schedule with_default_steps(double t_final);

  double dt() const { return t_final / n_steps; }
  double theta(double t) const;
  double step_midpoint(int step) const { return (step + 0.5) * dt(); }
  void validate() const;
};

/// v(t) = v0 sin(theta(t)). Throws std::out_of_range outside [0, t_final].
double intracell_amplitude(double t, const LatticeSpec& spec, const Schedule& sched);

/// dv/dt.
double intracell_rate(double t, const LatticeSpec& spec, const Schedule& sched);

enum class DisorderKind { none, hopping_bdi, onsite_generic, onsite_inversion_symmetric };
enum class TemporalPolicy { static_draw, resample_every_step };

std::string to_string(DisorderKind kind);
std::string to_string(TemporalPolicy policy);
DisorderKind parse_disorder_kind(const std::string& name);
TemporalPolicy parse_temporal_policy(const std::string& name);

struct DisorderSpec {
  DisorderKind kind = DisorderKind::none;
  double strength = 0.0;
  TemporalPolicy policy = TemporalPolicy::static_draw;
  // Correlation time of temporal disorder. Unset means a fresh draw every step.
  std::optional<double> refresh_interval;
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;

  bool is_temporal() const { return policy == TemporalPolicy::resample_every_step; }
  bool is_random() const { return kind != DisorderKind::none && strength > 0.0; }
  void validate() const;
};

/// One realization of the random numbers r_n in [-0.5, 0.5]. Hopping draws
/// hold one entry per bond (2N-1), on-site draws one entry per site (2N).
/// An empty draw stands for the clean chain.
struct DisorderDraw {
  std::vector<double> r;

  bool empty() const { return r.empty(); }
};

std::size_t draw_length(DisorderKind kind, int n_cells);

/// Counter-based uniform number in [-0.5, 0.5) keyed by all four counters.
double counter_uniform(std::uint64_t seed, std::uint64_t realization, std::uint64_t draw_index,
                       std::uint64_t entry);

/// Which draw a given integrator step uses: always 0 for static disorder, the
/// step itself for per-step resampling, or the refresh epoch of the step
/// midpoint when a refresh interval is set.
std::uint64_t draw_index_for_step(const DisorderSpec& dspec, const Schedule& sched, int step);

/// Draw number `draw_index` of the realization described by dspec. Static
/// disorder ignores draw_index.
DisorderDraw sample_disorder(const DisorderSpec& dspec, int n_cells, std::uint64_t draw_index);

/// Real symmetric tridiagonal single-particle Hamiltonian (open chain).
/// bonds(b) couples sites b and b+1; even b are intracell bonds.
struct HamiltonianMatrix {
  Eigen::VectorXd diagonal;
  Eigen::VectorXd bonds;

  int sites() const { return static_cast<int>(diagonal.size()); }
  Eigen::MatrixXcd dense() const;
};

HamiltonianMatrix build_hamiltonian(double t, const LatticeSpec& spec, const Schedule& sched,
                                    const DisorderSpec& dspec, const DisorderDraw& draw);

/// dH/dt at fixed disorder draw (the draw itself is treated as constant).
HamiltonianMatrix hamiltonian_rate(double t, const LatticeSpec& spec, const Schedule& sched,
                                   const DisorderSpec& dspec, const DisorderDraw& draw);

/// S = P_odd - P_even in 1-based site labels, i.e. diag(+1, -1, +1, ...).
Eigen::MatrixXd chiral_operator(int n_cells);
/// I |n> = |2N+1-n>.
Eigen::MatrixXd inversion_operator(int n_cells);

/// H(k) = (v + w cos k) sigma_x + (w sin k) sigma_y.
Eigen::Matrix2cd bloch_hamiltonian(double k, double v, double w);

}  // namespace sshhom

#include "sshhom/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sshhom/errors.hpp"

namespace sshhom {

double Propagator::unitarity_error() const {
  return (u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols())).norm();
}

WaveFunction site_state(int sites, int site) {
  if (site < 0 || site >= sites) throw std::out_of_range("site index out of range");
  WaveFunction psi = WaveFunction::Zero(sites);
  psi(site) = 1.0;
  return psi;
}

namespace {

// Caches the current draw so static disorder is sampled once and temporal
// disorder once per refresh epoch.
class DrawCursor {
 public:
  DrawCursor(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec)
      : spec_(spec), sched_(sched), dspec_(dspec) {}

  const DisorderDraw& at_step(int step) {
    const std::uint64_t index = draw_index_for_step(dspec_, sched_, step);
    if (!valid_ || index != index_) {
      draw_ = sample_disorder(dspec_, spec_.n_cells, index);
      index_ = index;
      valid_ = true;
    }
    return draw_;
  }

 private:
  const LatticeSpec& spec_;
  const Schedule& sched_;
  const DisorderSpec& dspec_;
  DisorderDraw draw_;
  std::uint64_t index_ = 0;
  bool valid_ = false;
};

}  // namespace

Eigen::MatrixXcd evolve(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec,
                        Eigen::MatrixXcd states, const StepObserver& observer) {
  spec.validate();
  sched.validate();
  dspec.validate();
  if (states.rows() != spec.sites()) throw std::invalid_argument("state dimension mismatch");
  DrawCursor cursor(spec, sched, dspec);
  const double dt = sched.dt();
  const int l = spec.sites();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l);
  Eigen::MatrixXd basis(l, l);
  Eigen::VectorXcd phases(l);
  Eigen::MatrixXcd rotated(states.rows(), states.cols());
  for (int k = 0; k < sched.n_steps; ++k) {
    const double t = sched.step_midpoint(k);
    const HamiltonianMatrix h = build_hamiltonian(t, spec, sched, dspec, cursor.at_step(k));
    solver.computeFromTridiagonal(h.diagonal, h.bonds, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
      throw NumericalCheckError("eigensolver", "tridiagonal eigensolver did not converge");
    }
    // Renormalizing the columns keeps rounding drift of U^dag U below 1e-10
    // over ~1e5 steps.
    basis = solver.eigenvectors();
    basis.colwise().normalize();
    for (int n = 0; n < l; ++n) phases(n) = std::polar(1.0, -solver.eigenvalues()(n) * dt);
    rotated.noalias() = basis.transpose() * states;
    rotated = phases.asDiagonal() * rotated;
    states.noalias() = basis * rotated;
    if (observer) {
      const EigenSystem es = make_eigen_system(solver.eigenvalues(), basis);
      observer(StepView{k, t, es, states});
    }
  }
  return states;
}

Propagator propagate(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec) {
  const int l = spec.sites();
  Propagator p;
  p.u = evolve(spec, sched, dspec, Eigen::MatrixXcd::Identity(l, l));
  p.t_final = sched.t_final;
  p.n_steps = sched.n_steps;
  return p;
}

double check_convergence(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec,
                         double tolerance) {
  if (dspec.is_temporal() && dspec.is_random()) {
    throw std::invalid_argument("step-halving test is undefined for temporal disorder");
  }
  const int l = spec.sites();
  Eigen::MatrixXcd ends = Eigen::MatrixXcd::Zero(l, 2);
  ends(0, 0) = 1.0;
  ends(l - 1, 1) = 1.0;
  const Eigen::MatrixXcd coarse = evolve(spec, sched, dspec, ends);
  Schedule fine = sched;
  fine.n_steps = 2 * sched.n_steps;
  const Eigen::MatrixXcd refined = evolve(spec, fine, dspec, ends);
  const double change = (coarse.cwiseAbs2() - refined.cwiseAbs2()).cwiseAbs().maxCoeff();
  if (change >= tolerance) {
    // Second-order scheme: the change shrinks like 1/n^2.
    const int suggested =
        static_cast<int>(std::ceil(sched.n_steps * std::sqrt(2.0 * change / tolerance)));
    std::ostringstream msg;
    msg << "doubling n_steps=" << sched.n_steps << " changed a probability by " << change
        << "; try n_steps >= " << suggested;
    throw ConvergenceError(msg.str(), suggested);
  }
  return change;
}

PhaseReport dynamical_phase(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec) {
  spec.validate();
  sched.validate();
  DrawCursor cursor(spec, sched, dspec);
  PhaseReport report;
  report.times.reserve(sched.n_steps + 1);
  report.e_plus.reserve(sched.n_steps + 1);
  const double dt = sched.dt();
  for (int j = 0; j <= sched.n_steps; ++j) {
    const double t = j == sched.n_steps ? sched.t_final : j * dt;
    const DisorderDraw& draw = cursor.at_step(std::min(j, sched.n_steps - 1));
    const EdgePair pair = in_gap_pair(diagonalize(build_hamiltonian(t, spec, sched, dspec, draw)));
    report.times.push_back(t);
    report.e_plus.push_back(0.5 * (pair.e_plus - pair.e_minus));
  }
  double phi = 0.0;
  for (std::size_t j = 1; j < report.times.size(); ++j) {
    phi += 0.5 * (report.e_plus[j] + report.e_plus[j - 1]) * (report.times[j] - report.times[j - 1]);
  }
  report.phi_d = phi;
  return report;
}

double mean_in_gap_energy(const LatticeSpec& spec, int quadrature_nodes) {
  spec.validate();
  // A unit-length schedule turns t into theta/pi.
  const Schedule unit{1.0, quadrature_nodes - 1};
  const DisorderSpec clean;
  const DisorderDraw none;
  double sum = 0.0;
  for (int j = 0; j < quadrature_nodes; ++j) {
    const double t = static_cast<double>(j) / (quadrature_nodes - 1);
    const EdgePair pair = in_gap_pair(diagonalize(build_hamiltonian(t, spec, unit, clean, none)));
    const double e = 0.5 * (pair.e_plus - pair.e_minus);
    sum += (j == 0 || j == quadrature_nodes - 1) ? 0.5 * e : e;
  }
  return sum / (quadrature_nodes - 1);
}

double calibrate_t_final(const LatticeSpec& spec, double target_phase) {
  if (!(target_phase > 0.0)) throw std::invalid_argument("target phase must be positive");
  return target_phase / mean_in_gap_energy(spec);
}

WaveFunction beam_splitter_target(const LatticeSpec& spec, double phi_d, int input_site) {
  const int l = spec.sites();
  if (input_site != 0 && input_site != l - 1) {
    throw std::invalid_argument("beam splitter ports are the end sites");
  }
  const double sign = spec.n_cells % 2 == 0 ? 1.0 : -1.0;
  const Complex cross{0.0, sign * std::sin(phi_d)};
  WaveFunction psi = WaveFunction::Zero(l);
  psi(input_site) = std::cos(phi_d);
  psi(l - 1 - input_site) = cross;
  return psi;
}

std::vector<BeamSplitterRow> beam_splitter_scan(const LatticeSpec& spec,
                                                const std::vector<double>& phase_grid,
                                                int n_steps_override) {
  const int l = spec.sites();
  const double mean_e = mean_in_gap_energy(spec);
  const DisorderSpec clean;
  std::vector<BeamSplitterRow> rows;
  for (double phi : phase_grid) {
    const double t_final = phi / mean_e;
    Schedule sched = Schedule::with_default_steps(t_final);
    if (n_steps_override > 0) sched.n_steps = n_steps_override;
    Eigen::MatrixXcd ends = Eigen::MatrixXcd::Zero(l, 2);
    ends(0, 0) = 1.0;
    ends(l - 1, 1) = 1.0;
    const Eigen::MatrixXcd out = evolve(spec, sched, clean, ends);
    for (int c = 0; c < 2; ++c) {
      BeamSplitterRow row;
      row.phi_target = phi;
      row.t_final = t_final;
      row.phi_d = mean_e * t_final;
      row.input_site = c == 0 ? 0 : l - 1;
      row.p_port1 = std::norm(out(0, c));
      row.p_port2 = std::norm(out(l - 1, c));
      row.leakage = 1.0 - row.p_port1 - row.p_port2;
      row.flagged = row.leakage > kLeakageThreshold;
      rows.push_back(row);
    }
  }
  return rows;
}

Trajectory parity_trajectory(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec,
                             const WaveFunction& psi0, int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  Trajectory traj;
  auto record = [&](double t, const WaveFunction& psi, const DisorderDraw& draw) {
    TrajectorySample s;
    s.t = t;
    s.state = psi;
    s.parity = parity_expectation(psi);
    s.df = distribution_difference(psi);
    const EdgePair pair = in_gap_pair(diagonalize(build_hamiltonian(t, spec, sched, dspec, draw)));
    s.in_gap_population = in_gap_population(pair, psi);
    traj.samples.push_back(std::move(s));
  };
  record(0.0, psi0, sample_disorder(dspec, spec.n_cells, draw_index_for_step(dspec, sched, 0)));
  Eigen::MatrixXcd start = psi0;
  evolve(spec, sched, dspec, start, [&](const StepView& v) {
    if ((v.step + 1) % stride != 0 && v.step + 1 != sched.n_steps) return;
    const double t = v.step + 1 == sched.n_steps ? sched.t_final : (v.step + 1) * sched.dt();
    record(t, v.columns.col(0),
           sample_disorder(dspec, spec.n_cells, draw_index_for_step(dspec, sched, v.step)));
  });
  return traj;
}

double adiabaticity_metric(const Trajectory& trajectory) {
  double worst = 0.0;
  for (const auto& s : trajectory.samples) worst = std::max(worst, 1.0 - s.in_gap_population);
  return worst;
}

}  // namespace sshhom

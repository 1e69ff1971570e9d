#include "sshhom/multiparticle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sshhom/errors.hpp"

namespace sshhom {

std::size_t pair_dimension(int sites) {
  return static_cast<std::size_t>(sites) * (sites + 1) / 2;
}

std::size_t pair_index(int sites, int i, int j) {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= sites) throw std::out_of_range("site index out of range");
  // Rows i = 0..i-1 hold (sites - row) pairs each.
  const std::size_t before = static_cast<std::size_t>(i) * sites - static_cast<std::size_t>(i) * (i - 1) / 2;
  return before + static_cast<std::size_t>(j - i);
}

TwoParticleState TwoParticleState::basis(int sites, int i, int j) {
  TwoParticleState s{sites, Eigen::VectorXcd::Zero(pair_dimension(sites))};
  s.amplitudes(pair_index(sites, i, j)) = 1.0;
  return s;
}

TwoParticleState noon_state(int sites) {
  TwoParticleState s{sites, Eigen::VectorXcd::Zero(pair_dimension(sites))};
  s.amplitudes(pair_index(sites, 0, 0)) = std::numbers::sqrt2 / 2.0;
  s.amplitudes(pair_index(sites, sites - 1, sites - 1)) = std::numbers::sqrt2 / 2.0;
  return s;
}

TwoParticleState two_particle_from_columns(const WaveFunction& col_a, const WaveFunction& col_b,
                                           bool same_input_site) {
  const int l = static_cast<int>(col_a.size());
  TwoParticleState out{l, Eigen::VectorXcd(pair_dimension(l))};
  const double input_norm = same_input_site ? std::numbers::sqrt2 : 1.0;
  std::size_t idx = 0;
  for (int q = 0; q < l; ++q) {
    for (int r = q; r < l; ++r) {
      const Complex perm = col_a(q) * col_b(r) + col_b(q) * col_a(r);
      const double norm = input_norm * (q == r ? std::numbers::sqrt2 : 1.0);
      out.amplitudes(idx++) = perm / norm;
    }
  }
  return out;
}

TwoParticleState hom_output(const Eigen::MatrixXcd& u, int a, int b) {
  const double err = (u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols())).norm();
  if (err > 1e-8) {
    throw NumericalCheckError("unitarity", "propagator is not unitary (error " + std::to_string(err) + ")");
  }
  return two_particle_from_columns(u.col(a), u.col(b), a == b);
}

TwoParticleState hom_output(const Propagator& u, int a, int b) { return hom_output(u.u, a, b); }

Eigen::SparseMatrix<Complex> two_boson_hamiltonian(const HamiltonianMatrix& h) {
  const int l = h.sites();
  const Eigen::Index dim = static_cast<Eigen::Index>(pair_dimension(l));
  const Eigen::Index prod = static_cast<Eigen::Index>(l) * l;
  // Isometry from the symmetric basis into the product space |x1>|x2>.
  std::vector<Eigen::Triplet<double>> iso;
  for (int i = 0; i < l; ++i) {
    for (int j = i; j < l; ++j) {
      const Eigen::Index col = static_cast<Eigen::Index>(pair_index(l, i, j));
      if (i == j) {
        iso.emplace_back(i * l + i, col, 1.0);
      } else {
        iso.emplace_back(i * l + j, col, std::numbers::sqrt2 / 2.0);
        iso.emplace_back(j * l + i, col, std::numbers::sqrt2 / 2.0);
      }
    }
  }
  Eigen::SparseMatrix<double> p(prod, dim);
  p.setFromTriplets(iso.begin(), iso.end());

  // H (x) 1 + 1 (x) H on the product space, index x1 * l + x2.
  std::vector<Eigen::Triplet<double>> entries;
  auto add_single = [&](int x, int y, double value) {
    for (int spectator = 0; spectator < l; ++spectator) {
      entries.emplace_back(x * l + spectator, y * l + spectator, value);
      entries.emplace_back(spectator * l + x, spectator * l + y, value);
    }
  };
  for (int n = 0; n < l; ++n) {
    if (h.diagonal(n) != 0.0) add_single(n, n, h.diagonal(n));
  }
  for (int b = 0; b + 1 < l; ++b) {
    add_single(b, b + 1, h.bonds(b));
    add_single(b + 1, b, h.bonds(b));
  }
  Eigen::SparseMatrix<double> full(prod, prod);
  full.setFromTriplets(entries.begin(), entries.end());
  const Eigen::SparseMatrix<double> reduced = p.transpose() * full * p;
  return reduced.cast<Complex>();
}

namespace {

// exp(-i H dt) psi by Taylor series, summed until the terms drop below
// machine precision.
Eigen::VectorXcd taylor_step(const Eigen::SparseMatrix<Complex>& h, double dt, const Eigen::VectorXcd& psi) {
  const Complex factor{0.0, -dt};
  Eigen::VectorXcd result = psi;
  Eigen::VectorXcd term = psi;
  const double scale = psi.norm();
  for (int k = 1; k < 60; ++k) {
    term = (factor / static_cast<double>(k)) * (h * term);
    result += term;
    if (term.norm() < 1e-17 * scale) return result;
  }
  throw NumericalCheckError("oracle", "Taylor series did not converge; reduce the step");
}

}  // namespace

TwoParticleState fock_evolve_oracle(const LatticeSpec& spec, const Schedule& sched,
                                    const DisorderSpec& dspec, const TwoParticleState& input) {
  spec.validate();
  sched.validate();
  const int l = spec.sites();
  if (input.sites != l) throw std::invalid_argument("input state has wrong number of sites");
  if (pair_dimension(l) > 10000) throw std::length_error("two-boson dimension exceeds oracle limit");
  const double dt = sched.dt();
  Eigen::VectorXcd psi = input.amplitudes;
  DisorderDraw draw;
  std::uint64_t current = 0;
  bool have_draw = false;
  for (int k = 0; k < sched.n_steps; ++k) {
    const std::uint64_t index = draw_index_for_step(dspec, sched, k);
    if (!have_draw || index != current) {
      draw = sample_disorder(dspec, spec.n_cells, index);
      current = index;
      have_draw = true;
    }
    const HamiltonianMatrix h = build_hamiltonian(sched.step_midpoint(k), spec, sched, dspec, draw);
    psi = taylor_step(two_boson_hamiltonian(h), dt, psi);
  }
  return TwoParticleState{l, psi};
}

Eigen::VectorXd density(const TwoParticleState& state) {
  const int l = state.sites;
  Eigen::VectorXd n = Eigen::VectorXd::Zero(l);
  for (int i = 0; i < l; ++i) {
    for (int j = i; j < l; ++j) {
      const double p = std::norm(state.amplitude(i, j));
      if (i == j) {
        n(i) += 2.0 * p;
      } else {
        n(i) += p;
        n(j) += p;
      }
    }
  }
  return n;
}

Eigen::MatrixXd correlation(const TwoParticleState& state) {
  const int l = state.sites;
  Eigen::MatrixXd gamma(l, l);
  for (int q = 0; q < l; ++q) {
    for (int r = q; r < l; ++r) {
      const double p = std::norm(state.amplitude(q, r));
      if (q == r) {
        gamma(q, q) = 2.0 * p;
      } else {
        gamma(q, r) = p;
        gamma(r, q) = p;
      }
    }
  }
  return gamma;
}

double noonity(const Eigen::MatrixXd& gamma) {
  const Eigen::VectorXd d = gamma.diagonal();
  return d.sum() * d.sum() - gamma.squaredNorm();
}

double noon_fidelity(const TwoParticleState& state) {
  return std::abs(noon_state(state.sites).amplitudes.dot(state.amplitudes));
}

double noon_fidelity_phase_optimized(const TwoParticleState& state) {
  const int l = state.sites;
  return (std::abs(state.amplitude(0, 0)) + std::abs(state.amplitude(l - 1, l - 1))) / std::numbers::sqrt2;
}

double state_fidelity(const TwoParticleState& a, const TwoParticleState& b) {
  return std::norm(a.amplitudes.dot(b.amplitudes));
}

}  // namespace sshhom

#pragma once

// Two identical non-interacting bosons on the chain. States live on the
// orthonormal symmetric basis |i,j> = b_i^dag b_j^dag |V> / sqrt(1 + delta_ij),
// i <= j (0-based), of dimension N(2N+1).

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "sshhom/dynamics.hpp"
#include "sshhom/model.hpp"

namespace sshhom {

std::size_t pair_dimension(int sites);
/// Position of |i,j> in the basis; the order of i and j does not matter.
std::size_t pair_index(int sites, int i, int j);

struct TwoParticleState {
  int sites = 0;
  Eigen::VectorXcd amplitudes;

  static TwoParticleState basis(int sites, int i, int j);
  Complex amplitude(int i, int j) const { return amplitudes(pair_index(sites, i, j)); }
  double norm() const { return amplitudes.norm(); }
};

/// (|1,1> + |2N,2N>) / sqrt(2).
TwoParticleState noon_state(int sites);

/// Output of the input pair (a, b) under the single-particle unitary:
///   amp(q, r) = perm[[U_qa, U_qb], [U_ra, U_rb]] / sqrt((1 + d_ab)(1 + d_qr)).
/// Throws NumericalCheckError if ||U^dag U - 1|| > 1e-8.
TwoParticleState hom_output(const Eigen::MatrixXcd& u, int a, int b);
TwoParticleState hom_output(const Propagator& u, int a, int b);

/// Same map from the two relevant columns U e_a, U e_b only.
TwoParticleState two_particle_from_columns(const WaveFunction& col_a, const WaveFunction& col_b,
                                           bool same_input_site);

/// Restriction of H (x) 1 + 1 (x) H to the symmetric basis.
Eigen::SparseMatrix<Complex> two_boson_hamiltonian(const HamiltonianMatrix& h);

/// Independent reference: integrates the two-boson Schrodinger equation in
/// the symmetric basis with the same midpoint-sampled steps, evaluating each
/// step exponential by a Taylor series on the sparse two-boson Hamiltonian.
TwoParticleState fock_evolve_oracle(const LatticeSpec& spec, const Schedule& sched,
                                    const DisorderSpec& dspec, const TwoParticleState& input);

/// <n_r>.
Eigen::VectorXd density(const TwoParticleState& state);
/// Gamma_{q,r} = <b_q^dag b_r^dag b_r b_q>.
Eigen::MatrixXd correlation(const TwoParticleState& state);
/// sum_{q,r} Gamma_qq Gamma_rr - Gamma_qr^2.
double noonity(const Eigen::MatrixXd& gamma);

/// |<NOON|psi>| with the fixed relative phase of the bunching terms.
double noon_fidelity(const TwoParticleState& state);
/// max over chi of |<(|1,1> + e^{i chi}|2N,2N>)/sqrt(2) | psi>|.
double noon_fidelity_phase_optimized(const TwoParticleState& state);

/// Quantum state fidelity |<a|b>|^2.
double state_fidelity(const TwoParticleState& a, const TwoParticleState& b);

}  // namespace sshhom

#pragma once

// Exact diagonalization of the chain, the hybridized in-gap pair, closed-form
// edge states, and the symmetry diagnostics built on them.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "sshhom/model.hpp"

namespace sshhom {

/// Ascending energies, eigenvectors as columns. Each eigenvector has its
/// largest-magnitude component real and positive.
struct EigenSystem {
  Eigen::VectorXd energies;
  Eigen::MatrixXcd states;

  int size() const { return static_cast<int>(energies.size()); }
};

EigenSystem diagonalize(const HamiltonianMatrix& h);

/// Wraps a real orthonormal eigenbasis, applying the phase convention above.
EigenSystem make_eigen_system(const Eigen::VectorXd& energies, const Eigen::MatrixXd& vectors);

/// General Hermitian input. Throws std::invalid_argument if ||H - H^dag|| > 1e-10.
EigenSystem diagonalize(const Eigen::MatrixXcd& h);

/// The two in-gap eigenpairs |0_+>, |0_->.
struct EdgePair {
  WaveFunction plus_state;
  WaveFunction minus_state;
  double e_plus = 0.0;
  double e_minus = 0.0;
  int plus_index = -1;
  int minus_index = -1;
};

inline constexpr double kGapCollapseThreshold = 1e-6;
inline constexpr double kDegeneracyTolerance = 1e-9;

/// Picks the two smallest-|E| eigenpairs. With `previous` the phase of each
/// state is fixed by a real positive overlap with it; otherwise the site-1
/// amplitude is made real nonnegative. A numerically degenerate pair is
/// resolved into inversion-parity eigenvectors, the parity (-1)^(N+1) one
/// being labelled plus. Throws GapCollapseError if the pair is not separated
/// from the bulk by at least kGapCollapseThreshold.
EdgePair in_gap_pair(const EigenSystem& es, const EdgePair* previous = nullptr);

/// Fraction of |psi|^2 inside span{|0_+>, |0_->}.
double in_gap_population(const EdgePair& pair, const WaveFunction& psi);

struct AnalyticEdgeStates {
  WaveFunction left;
  WaveFunction right;
  double eta = 0.0;
};

/// Normalized |L> = |1> + eta|3> + ..., |R> = |2N> + eta|2N-2> + ...,
/// eta = -v/w. Throws std::invalid_argument for |v| >= w.
AnalyticEdgeStates analytic_edge_states(const LatticeSpec& spec, double v);

/// |v eta^(N-1) (eta^2 - 1) / (eta^(2N) - 1)|, the approximate splitting E_+.
double hybrid_energy_formula(const LatticeSpec& spec, double v);

/// Weight on the left half minus weight on the right half.
double distribution_difference(const WaveFunction& psi);

/// <psi|I|psi>.
double parity_expectation(const WaveFunction& psi);

struct EqualSupportViolation {
  int index;
  double energy;
  double imbalance;
};

struct EqualSupportReport {
  bool passed = true;
  int checked = 0;
  std::vector<EqualSupportViolation> violations;
};

/// Every state with |E| > energy_threshold must have equal weight on odd and
/// even sites within tolerance.
EqualSupportReport equal_support_check(const EigenSystem& es, double energy_threshold = 1e-6,
                                       double tolerance = 1e-10);

/// <psi_n| dH/dt S |psi_n>.
Complex transition_element(const EigenSystem& es, const Eigen::MatrixXcd& dh_dt, int n);

/// max_k |E_k + E_{2N-1-k}| over the ascending spectrum.
double chiral_pairing_error(const EigenSystem& es);

}  // namespace sshhom

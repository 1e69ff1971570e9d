#include "sshhom/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "sshhom/errors.hpp"

namespace sshhom {

namespace {

void fix_largest_component_phase(Eigen::MatrixXcd& states) {
  for (int c = 0; c < states.cols(); ++c) {
    Eigen::Index imax = 0;
    states.col(c).cwiseAbs().maxCoeff(&imax);
    const Complex a = states(imax, c);
    if (std::abs(a) > 0.0) states.col(c) *= std::conj(a) / std::abs(a);
  }
}

}  // namespace

EigenSystem diagonalize(const HamiltonianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(h.diagonal, h.bonds, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalCheckError("eigensolver", "tridiagonal eigensolver did not converge");
  }
  return make_eigen_system(solver.eigenvalues(), solver.eigenvectors());
}

EigenSystem make_eigen_system(const Eigen::VectorXd& energies, const Eigen::MatrixXd& vectors) {
  EigenSystem es{energies, vectors.cast<Complex>()};
  fix_largest_component_phase(es.states);
  return es;
}

EigenSystem diagonalize(const Eigen::MatrixXcd& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("Hamiltonian must be square");
  const double asym = (h - h.adjoint()).norm();
  if (asym > 1e-10) {
    throw std::invalid_argument("Hamiltonian is not Hermitian (||H - H^dag|| = " +
                                std::to_string(asym) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw NumericalCheckError("eigensolver", "Hermitian eigensolver did not converge");
  }
  EigenSystem es{solver.eigenvalues(), solver.eigenvectors()};
  fix_largest_component_phase(es.states);
  return es;
}

EdgePair in_gap_pair(const EigenSystem& es, const EdgePair* previous) {
  const int l = es.size();
  if (l < 4) throw std::invalid_argument("in_gap_pair needs at least 4 sites");
  std::vector<int> order(l);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.energies(a)) < std::abs(es.energies(b));
  });
  const double in_gap_max = std::max(std::abs(es.energies(order[0])), std::abs(es.energies(order[1])));
  const double bulk_min = std::abs(es.energies(order[2]));
  if (bulk_min - in_gap_max < kGapCollapseThreshold) {
    throw GapCollapseError("in-gap pair not separated from bulk (separation " +
                           std::to_string(bulk_min - in_gap_max) + ")");
  }

  int lo = order[0];
  int hi = order[1];
  if (es.energies(lo) > es.energies(hi)) std::swap(lo, hi);

  EdgePair pair;
  pair.e_plus = es.energies(hi);
  pair.e_minus = es.energies(lo);
  pair.plus_index = hi;
  pair.minus_index = lo;
  pair.plus_state = es.states.col(hi);
  pair.minus_state = es.states.col(lo);

  // Inversion parity inside the pair subspace. A degenerate pair is resolved
  // by it; a nearly degenerate one is cleaned of the solver's mixing when the
  // rotation moves the energies by less than roundoff.
  const int n_cells = l / 2;
  Eigen::MatrixXcd q(l, 2);
  q.col(0) = pair.plus_state;
  q.col(1) = pair.minus_state;
  Eigen::MatrixXcd iq(l, 2);
  for (int c = 0; c < 2; ++c) iq.col(c) = q.col(c).reverse();
  const Eigen::Matrix2cd projected = q.adjoint() * iq;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> parity(projected);
  const bool invariant = std::abs(parity.eigenvalues()(0) + 1.0) < 1e-6 && std::abs(parity.eigenvalues()(1) - 1.0) < 1e-6;
  const double split = pair.e_plus - pair.e_minus;
  if (split < kDegeneracyTolerance) {
    const double plus_parity = (n_cells % 2 == 1) ? 1.0 : -1.0;  // (-1)^(N+1)
    // Eigenvalues ascending: column 1 has parity closest to +1.
    const int plus_col = plus_parity > 0 ? 1 : 0;
    pair.plus_state = q * parity.eigenvectors().col(plus_col);
    pair.minus_state = q * parity.eigenvectors().col(1 - plus_col);
  } else if (invariant && split * std::abs(projected(0, 1)) < 1e-12) {
    const Eigen::Matrix2cd& v = parity.eigenvectors();
    const int plus_col = std::abs(v(0, 1)) > std::abs(v(0, 0)) ? 1 : 0;
    pair.plus_state = q * v.col(plus_col);
    pair.minus_state = q * v.col(1 - plus_col);
  }

  auto align = [](WaveFunction& psi, const WaveFunction* anchor) {
    Complex ref;
    if (anchor != nullptr) {
      ref = anchor->dot(psi);  // <anchor|psi>
    } else {
      ref = psi(0);
      if (std::abs(ref) < 1e-14) {
        Eigen::Index imax = 0;
        psi.cwiseAbs().maxCoeff(&imax);
        ref = psi(imax);
      }
    }
    if (std::abs(ref) > 0.0) psi *= std::conj(ref) / std::abs(ref);
  };
  align(pair.plus_state, previous ? &previous->plus_state : nullptr);
  align(pair.minus_state, previous ? &previous->minus_state : nullptr);
  return pair;
}

double in_gap_population(const EdgePair& pair, const WaveFunction& psi) {
  return std::norm(pair.plus_state.dot(psi)) + std::norm(pair.minus_state.dot(psi));
}

AnalyticEdgeStates analytic_edge_states(const LatticeSpec& spec, double v) {
  if (std::abs(v) >= spec.w) {
    throw std::invalid_argument("edge states delocalize for |v| >= w");
  }
  const int n = spec.n_cells;
  const int l = spec.sites();
  const double eta = -v / spec.w;
  const double eta2 = eta * eta;
  // Geometric sum 1 + eta^2 + ... + eta^(2(N-1)).
  const double norm2 = eta2 == 0.0 ? 1.0 : (1.0 - std::pow(eta2, n)) / (1.0 - eta2);
  const double scale = 1.0 / std::sqrt(norm2);
  AnalyticEdgeStates out{WaveFunction::Zero(l), WaveFunction::Zero(l), eta};
  double amp = scale;
  for (int m = 0; m < n; ++m) {
    out.left(2 * m) = amp;
    out.right(l - 1 - 2 * m) = amp;
    amp *= eta;
  }
  return out;
}

double hybrid_energy_formula(const LatticeSpec& spec, double v) {
  if (std::abs(v) >= spec.w) {
    throw std::invalid_argument("hybrid_energy_formula requires |v| < w");
  }
  const int n = spec.n_cells;
  const double eta = -v / spec.w;
  if (eta == 0.0) return 0.0;
  return std::abs(v * std::pow(eta, n - 1) * (eta * eta - 1.0) / (std::pow(eta, 2 * n) - 1.0));
}

double distribution_difference(const WaveFunction& psi) {
  const Eigen::Index half = psi.size() / 2;
  return psi.head(half).squaredNorm() - psi.tail(psi.size() - half).squaredNorm();
}

double parity_expectation(const WaveFunction& psi) {
  return psi.dot(psi.reverse()).real();
}

EqualSupportReport equal_support_check(const EigenSystem& es, double energy_threshold,
                                       double tolerance) {
  EqualSupportReport report;
  for (int n = 0; n < es.size(); ++n) {
    if (std::abs(es.energies(n)) <= energy_threshold) continue;
    ++report.checked;
    double odd = 0.0;
    double even = 0.0;
    for (int s = 0; s < es.states.rows(); ++s) {
      (s % 2 == 0 ? odd : even) += std::norm(es.states(s, n));
    }
    const double imbalance = std::abs(odd - even);
    if (imbalance > tolerance) {
      report.passed = false;
      report.violations.push_back({n, es.energies(n), imbalance});
    }
  }
  return report;
}

Complex transition_element(const EigenSystem& es, const Eigen::MatrixXcd& dh_dt, int n) {
  if (n < 0 || n >= es.size()) throw std::out_of_range("eigenstate index out of range");
  const WaveFunction psi = es.states.col(n);
  WaveFunction s_psi = psi;
  for (Eigen::Index s = 1; s < s_psi.size(); s += 2) s_psi(s) = -s_psi(s);
  return psi.dot(dh_dt * s_psi);
}

double chiral_pairing_error(const EigenSystem& es) {
  const int l = es.size();
  double err = 0.0;
  for (int k = 0; k < l; ++k) err = std::max(err, std::abs(es.energies(k) + es.energies(l - 1 - k)));
  return err;
}

}  // namespace sshhom

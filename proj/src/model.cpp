#include "sshhom/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sshhom/errors.hpp"

namespace sshhom {

namespace {

constexpr std::uint64_t mix64(std::uint64_t z) {
  // SplitMix64 finalizer.
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void LatticeSpec::validate() const {
  if (n_cells < 2) throw ConfigError("lattice.n_cells must be >= 2");
  if (!(v0 >= 0.0 && v0 < 1.0)) throw ConfigError("lattice.v0 must lie in [0, 1)");
  if (w != 1.0) throw ConfigError("lattice.w is the energy unit and must equal 1");
}

int Schedule::default_steps(double t_final) {
  return std::max(4096, static_cast<int>(std::ceil(64.0 * t_final)));
}

Schedule Schedule::with_default_steps(double t_final) {
  return Schedule{t_final, default_steps(t_final)};
}

double Schedule::theta(double t) const { return std::numbers::pi * t / t_final; }

void Schedule::validate() const {
  if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
}

double intracell_amplitude(double t, const LatticeSpec& spec, const Schedule& sched) {
  if (t < 0.0 || t > sched.t_final) throw std::out_of_range("time outside [0, t_final]");
  return spec.v0 * std::sin(sched.theta(t));
}

double intracell_rate(double t, const LatticeSpec& spec, const Schedule& sched) {
  if (t < 0.0 || t > sched.t_final) throw std::out_of_range("time outside [0, t_final]");
  return spec.v0 * std::cos(sched.theta(t)) * std::numbers::pi / sched.t_final;
}

std::string to_string(DisorderKind kind) {
  switch (kind) {
    case DisorderKind::none: return "none";
    case DisorderKind::hopping_bdi: return "hopping_bdi";
    case DisorderKind::onsite_generic: return "onsite_generic";
    case DisorderKind::onsite_inversion_symmetric: return "onsite_inversion_symmetric";
  }
  return "none";
}

std::string to_string(TemporalPolicy policy) {
  return policy == TemporalPolicy::static_draw ? "static" : "resample_every_step";
}

DisorderKind parse_disorder_kind(const std::string& name) {
  for (auto k : {DisorderKind::none, DisorderKind::hopping_bdi, DisorderKind::onsite_generic,
                 DisorderKind::onsite_inversion_symmetric}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown disorder kind '" + name + "'");
}

TemporalPolicy parse_temporal_policy(const std::string& name) {
  if (name == "static") return TemporalPolicy::static_draw;
  if (name == "resample_every_step" || name == "temporal") return TemporalPolicy::resample_every_step;
  throw ConfigError("unknown temporal policy '" + name + "'");
}

void DisorderSpec::validate() const {
  if (!(strength >= 0.0)) throw ConfigError("disorder.strength must be nonnegative");
  if (refresh_interval && !(*refresh_interval > 0.0)) {
    throw ConfigError("disorder.refresh_interval must be positive");
  }
}

std::size_t draw_length(DisorderKind kind, int n_cells) {
  switch (kind) {
    case DisorderKind::none: return 0;
    case DisorderKind::hopping_bdi: return static_cast<std::size_t>(2 * n_cells - 1);
    default: return static_cast<std::size_t>(2 * n_cells);
  }
}

double counter_uniform(std::uint64_t seed, std::uint64_t realization, std::uint64_t draw_index,
                       std::uint64_t entry) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(realization ^ 0x5851f42d4c957f2dULL));
  h = mix64(h ^ mix64(draw_index ^ 0x14057b7ef767814fULL));
  h = mix64(h ^ entry);
  // 53 random mantissa bits -> [0, 1).
  return static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5;
}

std::uint64_t draw_index_for_step(const DisorderSpec& dspec, const Schedule& sched, int step) {
  if (!dspec.is_temporal()) return 0;
  if (dspec.refresh_interval) {
    return static_cast<std::uint64_t>(std::floor(sched.step_midpoint(step) / *dspec.refresh_interval));
  }
  return static_cast<std::uint64_t>(step);
}

DisorderDraw sample_disorder(const DisorderSpec& dspec, int n_cells, std::uint64_t draw_index) {
  DisorderDraw draw;
  if (dspec.kind == DisorderKind::none) return draw;
  if (!dspec.is_temporal()) draw_index = 0;
  const std::size_t len = draw_length(dspec.kind, n_cells);
  draw.r.resize(len);
  if (dspec.kind == DisorderKind::onsite_inversion_symmetric) {
    const std::size_t half = len / 2;
    for (std::size_t n = 0; n < half; ++n) {
      const double r = counter_uniform(dspec.seed, dspec.realization, draw_index, n);
      draw.r[n] = r;
      draw.r[len - 1 - n] = r;
    }
    return draw;
  }
  for (std::size_t n = 0; n < len; ++n) {
    draw.r[n] = counter_uniform(dspec.seed, dspec.realization, draw_index, n);
  }
  return draw;
}

Eigen::MatrixXcd HamiltonianMatrix::dense() const {
  const int l = sites();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(l, l);
  for (int i = 0; i < l; ++i) h(i, i) = diagonal(i);
  for (int b = 0; b + 1 < l; ++b) {
    h(b, b + 1) = bonds(b);
    h(b + 1, b) = bonds(b);
  }
  return h;
}

namespace {

void check_draw(const LatticeSpec& spec, const DisorderSpec& dspec, const DisorderDraw& draw) {
  if (dspec.strength < 0.0) throw std::invalid_argument("negative disorder strength");
  if (dspec.kind == DisorderKind::none) return;
  if (draw.r.size() != draw_length(dspec.kind, spec.n_cells)) {
    throw std::invalid_argument("disorder draw length " + std::to_string(draw.r.size()) +
                                " does not match kind " + to_string(dspec.kind));
  }
}

// Bond profile for a given intracell amplitude; shared by H and dH/dt.
HamiltonianMatrix assemble(double intracell, double intercell, const LatticeSpec& spec,
                           const DisorderSpec& dspec, const DisorderDraw& draw, bool onsite) {
  const int l = spec.sites();
  HamiltonianMatrix h{Eigen::VectorXd::Zero(l), Eigen::VectorXd::Zero(l - 1)};
  const bool hopping = dspec.kind == DisorderKind::hopping_bdi;
  for (int b = 0; b + 1 < l; ++b) {
    double amp = (b % 2 == 0) ? intracell : intercell;
    if (hopping) amp *= 1.0 + dspec.strength * draw.r[b];
    h.bonds(b) = amp;
  }
  if (onsite && (dspec.kind == DisorderKind::onsite_generic ||
                 dspec.kind == DisorderKind::onsite_inversion_symmetric)) {
    for (int n = 0; n < l; ++n) h.diagonal(n) = dspec.strength * draw.r[n];
  }
  return h;
}

}  // namespace

HamiltonianMatrix build_hamiltonian(double t, const LatticeSpec& spec, const Schedule& sched,
                                    const DisorderSpec& dspec, const DisorderDraw& draw) {
  check_draw(spec, dspec, draw);
  return assemble(intracell_amplitude(t, spec, sched), spec.w, spec, dspec, draw, true);
}

HamiltonianMatrix hamiltonian_rate(double t, const LatticeSpec& spec, const Schedule& sched,
                                   const DisorderSpec& dspec, const DisorderDraw& draw) {
  check_draw(spec, dspec, draw);
  return assemble(intracell_rate(t, spec, sched), 0.0, spec, dspec, draw, false);
}

Eigen::MatrixXd chiral_operator(int n_cells) {
  const int l = 2 * n_cells;
  Eigen::VectorXd d(l);
  for (int n = 0; n < l; ++n) d(n) = (n % 2 == 0) ? 1.0 : -1.0;
  return d.asDiagonal();
}

Eigen::MatrixXd inversion_operator(int n_cells) {
  const int l = 2 * n_cells;
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(l, l);
  for (int n = 0; n < l; ++n) inv(l - 1 - n, n) = 1.0;
  return inv;
}

Eigen::Matrix2cd bloch_hamiltonian(double k, double v, double w) {
  const Complex dx = v + w * std::cos(k);
  const Complex dy = w * std::sin(k);
  const Complex i{0.0, 1.0};
  Eigen::Matrix2cd h;
  // dx sigma_x + dy sigma_y
  h << 0.0, dx - i * dy, dx + i * dy, 0.0;
  return h;
}

}  // namespace sshhom

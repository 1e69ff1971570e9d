#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include "sshhom/cli.hpp"
#include "sshhom/dynamics.hpp"
#include "sshhom/ensemble.hpp"
#include "sshhom/errors.hpp"
#include "sshhom/multiparticle.hpp"
#include "sshhom/output.hpp"
#include "sshhom/spectral.hpp"

namespace sshhom::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using output::CsvTable;
using output::format_number;
using output::Series;

namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kUnitarityTolerance = 1e-9;

struct Context {
  std::string command;
  RunConfig cfg;
  fs::path dir;
  std::ostream& out;
  std::vector<std::string> files;
  std::optional<std::pair<std::string, std::string>> failure;

  fs::path file(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
  // Outputs are still written; the run exits 3 afterwards.
  void fail(const std::string& invariant, const std::string& what) {
    if (!failure) failure.emplace(invariant, what);
    out << "check failed [" << invariant << "]: " << what << "\n";
  }
};

DisorderSpec resolved_disorder(const RunConfig& cfg) {
  DisorderSpec d = cfg.disorder;
  if (cfg.regime) {
    d = regime_disorder(parse_regime(*cfg.regime));
    d.strength = cfg.disorder.strength;
    if (cfg.disorder.refresh_interval) d.refresh_interval = cfg.disorder.refresh_interval;
  }
  d.seed = cfg.seed;
  d.realization = 0;
  d.validate();
  return d;
}

Schedule schedule(const RunConfig& cfg, double t_final) {
  Schedule s{t_final, cfg.n_steps > 0 ? cfg.n_steps : Schedule::default_steps(t_final)};
  s.validate();
  return s;
}

bool preserves_chiral(DisorderKind k) { return k == DisorderKind::none || k == DisorderKind::hopping_bdi; }
bool preserves_inversion(DisorderKind k) {
  return k == DisorderKind::none || k == DisorderKind::onsite_inversion_symmetric;
}

std::vector<std::string> numbered(const std::string& first, const std::string& stem, int n,
                                  const std::string& unit) {
  std::vector<std::string> h{first};
  for (int i = 1; i <= n; ++i) h.push_back(stem + std::to_string(i) + unit);
  return h;
}

void write_stats(Context& ctx, const std::string& stem, const std::string& param_column,
                 const std::vector<GridPointStats>& points, const std::string& plot_title,
                 const std::string& x_label) {
  CsvTable summary({param_column, "mean", "std", "min", "max", "n_valid", "n_flagged"});
  CsvTable raw({param_column, "realization", "value", "flagged"});
  Series mean{"mean", {}, {}};
  Series lo{"min", {}, {}, "#999999", true};
  for (const auto& p : points) {
    summary.add_row(std::vector<double>{p.parameter, p.mean, p.stddev, p.min, p.max,
                                        static_cast<double>(p.n_valid), static_cast<double>(p.n_flagged)});
    for (std::size_t k = 0; k < p.values.size(); ++k) {
      raw.add_row(std::vector<std::string>{format_number(p.parameter), std::to_string(k),
                                           format_number(p.values[k]), p.flagged[k] ? "1" : "0"});
    }
    mean.x.push_back(p.parameter);
    mean.y.push_back(p.mean);
    lo.x.push_back(p.parameter);
    lo.y.push_back(p.min);
  }
  summary.write(ctx.file(stem + ".csv"));
  raw.write(ctx.file(stem + "_raw.csv"));
  output::write_line_plot(ctx.file(stem + ".svg"), plot_title, x_label, "fidelity", {mean, lo});
}

void cmd_spectrum(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const LatticeSpec& spec = cfg.lattice;
  const Schedule sched = schedule(cfg, *cfg.t_final);
  const DisorderSpec d = resolved_disorder(cfg);
  const DisorderDraw draw = sample_disorder(d, spec.n_cells, 0);
  const int l = spec.sites();
  if (cfg.samples < 2) throw ConfigError("samples must be >= 2");

  CsvTable table(numbered("t[1/w]", "E_", l, "[w]"));
  std::vector<Series> bands(l);
  for (int n = 0; n < l; ++n) {
    bands[n].label = "E_" + std::to_string(n + 1);
    const bool in_gap = n == l / 2 - 1 || n == l / 2;
    bands[n].color = in_gap ? "#d62728" : "#7f7f7f";
  }
  double worst_pairing = 0.0, peak = 0.0, t_peak = 0.0;
  bool gap_ok = true;
  for (int i = 0; i < cfg.samples; ++i) {
    const double t = sched.t_final * i / (cfg.samples - 1);
    const EigenSystem es = diagonalize(build_hamiltonian(t, spec, sched, d, draw));
    std::vector<double> row{t};
    for (int n = 0; n < l; ++n) {
      row.push_back(es.energies(n));
      bands[n].x.push_back(t);
      bands[n].y.push_back(es.energies(n));
    }
    table.add_row(row);
    worst_pairing = std::max(worst_pairing, chiral_pairing_error(es));
    try {
      const EdgePair pair = in_gap_pair(es);
      const double e = std::max(std::abs(pair.e_plus), std::abs(pair.e_minus));
      if (e > peak) {
        peak = e;
        t_peak = t;
      }
    } catch (const GapCollapseError& e) {
      if (gap_ok) ctx.fail("gap", e.what());
      gap_ok = false;
    }
  }
  table.write(ctx.file("spectrum.csv"));
  // In-gap bands last so they are drawn on top.
  std::rotate(bands.begin() + l / 2 - 1, bands.begin() + l / 2 + 1, bands.end());
  output::write_line_plot(ctx.file("spectrum.svg"), "instantaneous spectrum", "t [1/w]", "E [w]", bands);
  ctx.out << "bands: " << l << "\n";
  ctx.out << "max chiral pairing error: " << format_number(worst_pairing) << "\n";
  if (gap_ok) ctx.out << "peak in-gap |E|: " << format_number(peak) << " at t = " << format_number(t_peak) << "\n";
  if (preserves_chiral(d.kind) && worst_pairing > kSymmetryTolerance) {
    ctx.fail("chiral_pairing", "spectrum not +-E paired: " + format_number(worst_pairing));
  }
}

void cmd_bs_scan(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::vector<double> phases = cfg.phase_grid.values();
  const auto rows = beam_splitter_scan(cfg.lattice, phases, cfg.n_steps);
  const int l = cfg.lattice.sites();
  CsvTable table({"phi_target[rad]", "t_final[1/w]", "phi_d[rad]", "input_site", "P_port1", "P_port2",
                  "cos2_phi", "sin2_phi", "leakage", "flagged"});
  Series p1{"|1> -> port 1", {}, {}, "#1f77b4"}, p2{"|1> -> port 2", {}, {}, "#d62728"};
  Series c2{"cos^2", {}, {}, "#1f77b4", true}, s2{"sin^2", {}, {}, "#d62728", true};
  double worst_leak = 0.0;
  for (const auto& r : rows) {
    const double c = std::pow(std::cos(r.phi_target), 2), s = std::pow(std::sin(r.phi_target), 2);
    table.add_row(std::vector<std::string>{
        format_number(r.phi_target), format_number(r.t_final), format_number(r.phi_d),
        std::to_string(r.input_site + 1), format_number(r.p_port1), format_number(r.p_port2), format_number(c),
        format_number(s), format_number(r.leakage), r.flagged ? "1" : "0"});
    if (r.input_site == 0) {
      p1.x.push_back(r.phi_target);
      p1.y.push_back(r.p_port1);
      p2.x.push_back(r.phi_target);
      p2.y.push_back(r.p_port2);
      c2.x.push_back(r.phi_target);
      c2.y.push_back(c);
      s2.x.push_back(r.phi_target);
      s2.y.push_back(s);
    }
    worst_leak = std::max(worst_leak, r.leakage);
  }
  table.write(ctx.file("bs_scan.csv"));
  output::write_line_plot(ctx.file("bs_scan.svg"), "beam splitter output ports", "phi_d [rad]", "probability",
                          {c2, s2, p1, p2});
  ctx.out << "phases: " << phases.size() << ", inputs: 1 and " << l << "\n";
  ctx.out << "max leakage: " << format_number(worst_leak) << "\n";
  if (worst_leak > kLeakageThreshold) {
    ctx.fail("leakage", "output leaves the end sites: " + format_number(worst_leak));
  }
}

void cmd_hom(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const LatticeSpec& spec = cfg.lattice;
  const Schedule sched = schedule(cfg, *cfg.t_final);
  const DisorderSpec d = resolved_disorder(cfg);
  const int l = spec.sites();
  if (cfg.sample_stride < 1) throw ConfigError("sample_stride must be >= 1");

  CsvTable dens(numbered("t[1/w]", "n_", l, ""));
  CsvTable nity_table({"t[1/w]", "nity", "noon_fidelity", "noon_fidelity_phase_optimized"});
  Series nity_series{"Nity", {}, {}, "#1f77b4"}, fid_series{"NOON fidelity", {}, {}, "#d62728"};
  std::vector<std::vector<double>> density_rows;
  Eigen::MatrixXd gamma0, gamma_half, gamma_final;
  double t_half = 0.0;
  const int half = sched.n_steps / 2;

  auto record = [&](double t, const Eigen::MatrixXcd& cols) {
    const TwoParticleState tp = two_particle_from_columns(cols.col(0), cols.col(1), false);
    const Eigen::VectorXd n = density(tp);
    const Eigen::MatrixXd g = correlation(tp);
    const double nity = noonity(g);
    const double fid = noon_fidelity(tp);
    std::vector<double> row{t};
    row.insert(row.end(), n.data(), n.data() + n.size());
    dens.add_row(row);
    density_rows.emplace_back(n.data(), n.data() + n.size());
    nity_table.add_row(std::vector<double>{t, nity, fid, noon_fidelity_phase_optimized(tp)});
    nity_series.x.push_back(t);
    nity_series.y.push_back(nity);
    fid_series.x.push_back(t);
    fid_series.y.push_back(fid);
    return g;
  };

  Eigen::MatrixXcd ends = Eigen::MatrixXcd::Zero(l, 2);
  ends(0, 0) = 1.0;
  ends(l - 1, 1) = 1.0;
  gamma0 = record(0.0, ends);
  const Eigen::MatrixXcd final_cols = evolve(spec, sched, d, ends, [&](const StepView& v) {
    const int done = v.step + 1;
    const bool last = done == sched.n_steps;
    const double t = last ? sched.t_final : done * sched.dt();
    if (done % cfg.sample_stride == 0 || last) {
      const Eigen::MatrixXd g = record(t, v.columns);
      if (last) gamma_final = g;
    }
    if (done == half) {
      t_half = t;
      gamma_half = correlation(two_particle_from_columns(v.columns.col(0), v.columns.col(1), false));
    }
  });

  dens.write(ctx.file("hom_density.csv"));
  nity_table.write(ctx.file("hom_nity.csv"));
  output::write_grid(ctx.file("gamma_t0.csv"), gamma0);
  output::write_grid(ctx.file("gamma_half.csv"), gamma_half);
  output::write_grid(ctx.file("gamma_final.csv"), gamma_final);
  Eigen::MatrixXd dgrid(density_rows.size(), l);
  for (std::size_t i = 0; i < density_rows.size(); ++i) {
    for (int q = 0; q < l; ++q) dgrid(static_cast<Eigen::Index>(i), q) = density_rows[i][q];
  }
  output::write_heatmap(ctx.file("hom_density.svg"), "<n_r>(t), time downwards", dgrid);
  output::write_line_plot(ctx.file("hom_nity.svg"), "Nity and NOON fidelity", "t [1/w]", "", {nity_series, fid_series});
  output::write_heatmap(ctx.file("gamma_t0.svg"), "Gamma at t = 0", gamma0);
  output::write_heatmap(ctx.file("gamma_half.svg"), "Gamma at t = " + format_number(t_half), gamma_half);
  output::write_heatmap(ctx.file("gamma_final.svg"), "Gamma at t = t_final", gamma_final);

  // Single-particle view: parity input (|1> + |2N>)/sqrt(2) and the full propagator.
  WaveFunction psi0 = WaveFunction::Zero(l);
  psi0(0) = psi0(l - 1) = std::numbers::sqrt2 / 2.0;
  const Trajectory traj = parity_trajectory(spec, sched, d, psi0, cfg.sample_stride);
  std::vector<std::string> traj_header = numbered("t[1/w]", "p_", l, "");
  for (const char* c : {"parity", "D_f", "leakage"}) traj_header.emplace_back(c);
  CsvTable traj_table(traj_header);
  for (const auto& smp : traj.samples) {
    std::vector<double> row{smp.t};
    for (int q = 0; q < l; ++q) row.push_back(std::norm(smp.state(q)));
    row.push_back(smp.parity);
    row.push_back(smp.df);
    row.push_back(1.0 - smp.in_gap_population);
    traj_table.add_row(row);
  }
  traj_table.write(ctx.file("trajectory.csv"));
  const Propagator prop = propagate(spec, sched, d);
  std::vector<std::string> prop_header{"row"};
  for (int c = 1; c <= l; ++c) {
    prop_header.push_back("re_" + std::to_string(c));
    prop_header.push_back("im_" + std::to_string(c));
  }
  CsvTable prop_table(prop_header);
  for (int q = 0; q < l; ++q) {
    std::vector<double> row{static_cast<double>(q + 1)};
    for (int c = 0; c < l; ++c) {
      row.push_back(prop.u(q, c).real());
      row.push_back(prop.u(q, c).imag());
    }
    prop_table.add_row(row);
  }
  prop_table.write(ctx.file("propagator.csv"));

  const double nity_final = nity_series.y.back();
  ctx.out << "t_final: " << format_number(sched.t_final) << " (" << sched.n_steps << " steps)\n";
  ctx.out << "final Nity: " << format_number(nity_final) << "\n";
  ctx.out << "final NOON fidelity: " << format_number(fid_series.y.back()) << "\n";
  ctx.out << "Gamma(1,2N) final: " << format_number(gamma_final(0, l - 1)) << "\n";

  const double unit_err = std::max({std::abs(final_cols.col(0).squaredNorm() - 1.0),
                                    std::abs(final_cols.col(1).squaredNorm() - 1.0),
                                    std::abs(final_cols.col(0).dot(final_cols.col(1)))});
  const double prop_err = prop.unitarity_error();
  ctx.out << "propagator unitarity error: " << format_number(prop_err) << "\n";
  if (prop_err > kUnitarityTolerance) ctx.fail("unitarity", "propagator drift " + format_number(prop_err));
  if (unit_err > kUnitarityTolerance) ctx.fail("unitarity", "propagated columns drift by " + format_number(unit_err));
  double leak = 0.0;
  for (int c = 0; c < 2; ++c) {
    leak = std::max(leak, 1.0 - std::norm(final_cols(0, c)) - std::norm(final_cols(l - 1, c)));
  }
  if (leak > kLeakageThreshold) ctx.fail("adiabaticity", "weight left the end sites: " + format_number(leak));
  if (!(d.is_random() && d.is_temporal())) {
    try {
      const double delta = check_convergence(spec, sched, d);
      ctx.out << "step-doubling change: " << format_number(delta) << "\n";
    } catch (const ConvergenceError& e) {
      ctx.fail("convergence", std::string(e.what()) + " (try --steps " + std::to_string(e.suggested_steps()) + ")");
    }
  }
}

void cmd_calibrate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const double phi = parse_phase(*cfg.phase);
  if (!(phi > 0.0)) throw ConfigError("phase must be positive");
  const double mean_e = mean_in_gap_energy(cfg.lattice);
  const double t_final = calibrate_t_final(cfg.lattice, phi);
  const PhaseReport check = dynamical_phase(cfg.lattice, schedule(cfg, t_final), DisorderSpec{});
  CsvTable table({"phi_target[rad]", "mean_in_gap_energy[w]", "t_final[1/w]", "phi_d_check[rad]"});
  table.add_row(std::vector<double>{phi, mean_e, t_final, check.phi_d});
  table.write(ctx.file("calibrate.csv"));
  ctx.out << "t_final = " << format_number(t_final) << "\n";
  ctx.out << "phi_d at that t_final: " << format_number(check.phi_d) << "\n";
  if (std::abs(check.phi_d - phi) > 1e-6 * phi) {
    ctx.fail("calibration", "integrated phase " + format_number(check.phi_d) + " misses target " + format_number(phi));
  }
}

ExperimentConfig experiment_config(const RunConfig& cfg, ExperimentKind kind) {
  ExperimentConfig e;
  e.lattice = cfg.lattice;
  e.t_final = *cfg.t_final;
  e.n_steps = cfg.n_steps;
  e.disorder = resolved_disorder(cfg);
  e.strengths = cfg.strengths;
  e.kind = kind;
  e.n_realizations = cfg.realizations;
  e.base_seed = cfg.seed;
  e.workers = cfg.workers;
  e.sample_stride = cfg.sample_stride;
  return e;
}

// Single-strength study of one regime: trajectories, D_f windows, final Gamma.
void regime_study(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  if (!cfg.regime) throw ConfigError("regime_study needs 'regime'");
  RegimeOptions o;
  o.lattice = cfg.lattice;
  o.t_final = *cfg.t_final;
  o.n_steps = cfg.n_steps;
  o.strength = cfg.strengths.front();
  o.n_realizations = cfg.realizations;
  o.base_seed = cfg.seed;
  o.workers = cfg.workers;
  o.sample_stride = cfg.sample_stride;
  const RegimeReport r = symmetry_regime_study(parse_regime(*cfg.regime), o);

  CsvTable traj({"t[1/w]", "fidelity_first", "nity_first", "parity_plus_first", "parity_minus_first",
                 "fidelity_mean", "nity_mean", "parity_plus_mean", "parity_minus_mean"});
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    traj.add_row(std::vector<double>{r.times[i], r.fidelity_first[i], r.nity_first[i], r.parity_plus_first[i],
                                     r.parity_minus_first[i], r.fidelity_mean[i], r.nity_mean[i],
                                     r.parity_plus_mean[i], r.parity_minus_mean[i]});
  }
  traj.write(ctx.file("regime_trajectories.csv"));
  CsvTable df({"window_center[1/w]", "df_plus_first", "df_minus_first"});
  for (int w = 0; w < kDfWindows; ++w) {
    df.add_row(std::vector<double>{(w + 0.5) * r.t_final / kDfWindows, r.window_df_plus_first[w],
                                   r.window_df_minus_first[w]});
  }
  df.write(ctx.file("regime_df.csv"));
  output::write_grid(ctx.file("regime_gamma_first.csv"), r.final_gamma_first);
  output::write_grid(ctx.file("regime_gamma_mean.csv"), r.final_gamma_mean);
  CsvTable summary({"metric", "mean", "std", "min", "max", "n_valid", "n_flagged"});
  for (const auto& [name, st] : std::vector<std::pair<std::string, const GridPointStats*>>{
           {"final_fidelity", &r.final_fidelity},
           {"final_nity", &r.final_nity},
           {"windowed_abs_df", &r.windowed_abs_df},
           {"parity_drift", &r.parity_drift}}) {
    summary.add_row(std::vector<std::string>{name, format_number(st->mean), format_number(st->stddev),
                                             format_number(st->min), format_number(st->max),
                                             std::to_string(st->n_valid), std::to_string(st->n_flagged)});
    ctx.out << name << ": mean " << format_number(st->mean) << ", std " << format_number(st->stddev) << "\n";
  }
  summary.add_row(std::vector<std::string>{"mean_trajectory_parity_drift", format_number(r.mean_parity_drift), "", "",
                                           "", "", ""});
  summary.write(ctx.file("regime_summary.csv"));
  ctx.out << "mean-trajectory parity drift: " << format_number(r.mean_parity_drift) << "\n";

  Series f1{"F, realization 0", r.times, r.fidelity_first, "#1f77b4"};
  Series fm{"F, mean", r.times, r.fidelity_mean, "#1f77b4", true};
  Series n1{"Nity, realization 0", r.times, r.nity_first, "#d62728"};
  Series nm{"Nity, mean", r.times, r.nity_mean, "#d62728", true};
  output::write_line_plot(ctx.file("regime_trajectories.svg"), *cfg.regime, "t [1/w]", "", {f1, fm, n1, nm});
  Series pp{"P, (|1>+|2N>)/sqrt2", r.times, r.parity_plus_mean, "#1f77b4"};
  Series pm{"P, (|1>-|2N>)/sqrt2", r.times, r.parity_minus_mean, "#d62728"};
  output::write_line_plot(ctx.file("regime_parity.svg"), *cfg.regime + " mean parity", "t [1/w]", "P", {pp, pm});
  output::write_heatmap(ctx.file("regime_gamma_first.svg"), "final Gamma, realization 0", r.final_gamma_first);
}

void cmd_sweep(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  if (*cfg.experiment == "regime_study") {
    regime_study(ctx);
    return;
  }
  const ExperimentKind kind = parse_experiment_kind(*cfg.experiment);
  const ExperimentConfig e = experiment_config(cfg, kind);
  const EnsembleResult result = run_ensemble(e);
  write_stats(ctx, "sweep", "strength", result.points, to_string(kind) + " vs disorder strength", "strength");
  for (const auto& p : result.points) {
    ctx.out << "strength " << format_number(p.parameter) << ": mean " << format_number(p.mean) << ", std "
            << format_number(p.stddev) << ", flagged " << p.n_flagged << "/" << p.values.size() << "\n";
  }
}

void cmd_tf_scan(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  ExperimentConfig e = experiment_config(cfg, ExperimentKind::tf_scan);
  e.tf_measure = parse_experiment_kind(*cfg.experiment);
  e.t_finals = cfg.tf_grid.values();
  const TfScanResult result = tf_scan(e);
  write_stats(ctx, "tf_scan", "t_final[1/w]", result.points, to_string(e.tf_measure) + " vs t_final", "t_final [1/w]");
  CsvTable best({"realization", "best_fidelity", "best_t_final[1/w]"});
  for (std::size_t k = 0; k < result.best_per_realization.size(); ++k) {
    best.add_row(std::vector<double>{static_cast<double>(k), result.best_per_realization[k],
                                     result.best_t_per_realization[k]});
  }
  best.write(ctx.file("tf_scan_best.csv"));
  ctx.out << "best mean: " << format_number(result.max_mean) << " at t_final = "
          << format_number(result.argmax_t_final) << "\n";
  const auto [lo, hi] = std::minmax_element(result.best_per_realization.begin(), result.best_per_realization.end());
  ctx.out << "per-realization best fidelity in [" << format_number(*lo) << ", " << format_number(*hi) << "]\n";
}

void cmd_symmetry_check(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const LatticeSpec& spec = cfg.lattice;
  const Schedule sched = schedule(cfg, *cfg.t_final);
  const DisorderSpec d = resolved_disorder(cfg);
  const double t = cfg.t_probe ? *cfg.t_probe : 0.5 * sched.t_final;
  if (t < 0.0 || t > sched.t_final) throw ConfigError("t_probe must lie in [0, t_final]");
  const DisorderDraw draw = sample_disorder(d, spec.n_cells, 0);
  const HamiltonianMatrix hm = build_hamiltonian(t, spec, sched, d, draw);
  const Eigen::MatrixXcd h = hm.dense();
  const Eigen::MatrixXcd s = chiral_operator(spec.n_cells).cast<Complex>();
  const Eigen::MatrixXcd inv = inversion_operator(spec.n_cells).cast<Complex>();

  const bool chiral = preserves_chiral(d.kind);
  const bool inversion = preserves_inversion(d.kind);
  CsvTable table({"symmetry", "form", "residual", "expected", "status"});
  auto report = [&](const std::string& name, const std::string& form, double residual, bool expected) {
    const bool ok = !expected || residual <= kSymmetryTolerance;
    table.add_row(std::vector<std::string>{name, form, format_number(residual), expected ? "preserved" : "broken",
                                           ok ? "ok" : "violated"});
    ctx.out << name << " (" << form << "): " << format_number(residual) << (expected ? "" : " [not expected]")
            << "\n";
    if (!ok) ctx.fail(name, form + " residual " + format_number(residual));
  };

  report("hermiticity", "real-space", (h - h.adjoint()).norm(), true);
  report("chiral", "real-space", (s * h * s + h).norm(), chiral);
  report("time_reversal", "real-space", (h.conjugate() - h).norm(), true);
  report("particle_hole", "real-space", (s * h.conjugate() * s + h).norm(), chiral);
  report("inversion", "real-space", (inv * h * inv - h).norm(), inversion);

  // The Bloch form describes the clean bulk at the same v.
  const double v = intracell_amplitude(t, spec, sched);
  Eigen::Matrix2cd sz, sx;
  sz << 1, 0, 0, -1;
  sx << 0, 1, 1, 0;
  double b_chiral = 0, b_tr = 0, b_ph = 0, b_inv = 0;
  const int nk = 64;
  for (int i = 0; i < nk; ++i) {
    const double k = -std::numbers::pi + 2.0 * std::numbers::pi * i / nk;
    const Eigen::Matrix2cd hk = bloch_hamiltonian(k, v, spec.w);
    const Eigen::Matrix2cd hmk = bloch_hamiltonian(-k, v, spec.w);
    b_chiral = std::max(b_chiral, (sz * hk * sz + hk).norm());
    b_tr = std::max(b_tr, (hk.conjugate() - hmk).norm());
    b_ph = std::max(b_ph, (sz * hk.conjugate() * sz + hmk).norm());
    b_inv = std::max(b_inv, (sx * hk * sx - hmk).norm());
  }
  report("chiral", "bloch", b_chiral, true);
  report("time_reversal", "bloch", b_tr, true);
  report("particle_hole", "bloch", b_ph, true);
  report("inversion", "bloch", b_inv, true);

  const EigenSystem es = diagonalize(hm);
  report("spectrum_pairing", "real-space", chiral_pairing_error(es), chiral);
  const EqualSupportReport support = equal_support_check(es);
  double worst_support = 0.0;
  for (const auto& viol : support.violations) worst_support = std::max(worst_support, viol.imbalance);
  report("equal_support", "real-space", worst_support, chiral);
  const Eigen::MatrixXcd dh = hamiltonian_rate(t, spec, sched, d, draw).dense();
  double worst_transition = 0.0;
  for (int n = 0; n < es.size(); ++n) worst_transition = std::max(worst_transition, std::abs(transition_element(es, dh, n)));
  report("transition_element", "real-space", worst_transition, chiral);
  table.write(ctx.file("symmetry.csv"));
}

// Fills in per-command defaults so the manifest echoes what actually ran.
void resolve_defaults(const std::string& command, RunConfig& cfg) {
  auto default_t = [&](double t) {
    if (!cfg.t_final) cfg.t_final = t;
  };
  // Single-strength runs take disorder.strength when one is given.
  auto single_strength = [&] { return cfg.disorder.strength > 0.0 ? cfg.disorder.strength : 0.2; };
  if (command == "spectrum" || command == "symmetry-check") {
    default_t(252.0);
  } else if (command == "bs-scan") {
    if (cfg.phase_grid.count == 0) cfg.phase_grid = {std::numbers::pi / 2, 3 * std::numbers::pi / 2, 9};
  } else if (command == "hom") {
    if (!cfg.t_final && cfg.phase) cfg.t_final = calibrate_t_final(cfg.lattice, parse_phase(*cfg.phase));
    default_t(252.0);
  } else if (command == "calibrate") {
    if (!cfg.phase) cfg.phase = "pi/4";
  } else if (command == "sweep") {
    default_t(252.0);
    if (!cfg.experiment) cfg.experiment = "hom_fidelity";
    if (cfg.strengths.empty()) {
      cfg.strengths = *cfg.experiment == "regime_study" ? std::vector<double>{single_strength()}
                                                        : std::vector<double>{0.0, 0.05, 0.1, 0.15, 0.2};
    }
    if (!cfg.regime && cfg.disorder.kind == DisorderKind::none) {
      throw ConfigError("sweep needs 'regime' or 'disorder.kind'");
    }
  } else if (command == "tf-scan") {
    default_t(504.0);
    if (cfg.strengths.empty()) cfg.strengths = {single_strength()};
    if (!cfg.experiment) cfg.experiment = "bs_fidelity";
    if (!cfg.regime && cfg.disorder.kind == DisorderKind::none) cfg.regime = "bdi_static";
    if (cfg.tf_grid.count == 0) cfg.tf_grid = {300.0, 860.0, 15};
  }
  cfg.lattice.validate();
  if (cfg.t_final && !(*cfg.t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (cfg.n_steps < 0) throw ConfigError("n_steps must be >= 0");
  if (cfg.workers < 0) throw ConfigError("workers must be >= 0");
  if (cfg.realizations < 1) throw ConfigError("realizations must be >= 1");
  if (cfg.regime) parse_regime(*cfg.regime);
  if (cfg.experiment && *cfg.experiment != "regime_study") parse_experiment_kind(*cfg.experiment);
  if (cfg.experiment && *cfg.experiment == "regime_study" && command != "sweep") {
    throw ConfigError("experiment 'regime_study' is only available to sweep");
  }
}

void write_manifest(Context& ctx, double seconds) {
  json outputs = json::array();
  for (const auto& name : ctx.files) {
    outputs.push_back({{"file", name}, {"sha256", output::sha256_file(ctx.dir / name)}});
  }
  json m;
  m["tool"] = "sshhom";
  m["version"] = kToolVersion;
  m["command"] = ctx.command;
  m["config"] = to_json(ctx.cfg);
  m["base_seed"] = ctx.cfg.seed;
  m["wall_clock_seconds"] = seconds;
  m["outputs"] = outputs;
  if (ctx.failure) m["failed_check"] = {{"invariant", ctx.failure->first}, {"message", ctx.failure->second}};
  std::ofstream f(ctx.dir / "manifest.json");
  f << m.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write manifest.json");
}

struct Flags {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  int workers = 0;
  int steps = 0;
  std::string phase;
  std::string regime;
  std::string strengths;
  double strength = 0.0;
  double t_final = 0.0;
  int realizations = 0;
  std::string experiment;
  std::string tf_grid;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run config (or a manifest.json to re-run)");
  sub->add_option("--out", f.out, "output directory (SSH_HOM_OUT overrides)");
  sub->add_option("--seed", f.seed, "base seed");
  sub->add_option("--workers", f.workers, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  sub->add_option("--steps", f.steps, "integrator steps, 0 = default rule")->check(CLI::NonNegativeNumber);
  sub->add_option("--t-final", f.t_final, "ramp duration in 1/w");
  sub->add_option("--phase", f.phase, "target dynamical phase, e.g. pi/4");
  sub->add_option("--regime", f.regime, "bdi_static|bdi_temporal|inv_static|generic_static|generic_temporal");
  sub->add_option("--strength", f.strength, "disorder strength");
  sub->add_option("--strengths", f.strengths, "strength grid, lo:step:hi or a,b,c");
  sub->add_option("--realizations", f.realizations, "disorder realizations per grid point");
  sub->add_option("--experiment", f.experiment, "bs_fidelity|hom_fidelity|parity_study|df_study|regime_study");
  sub->add_option("--tf-grid", f.tf_grid, "t_final grid, lo:step:hi or a,b,c");
}

void apply_flags(const CLI::App& sub, const Flags& f, RunConfig& cfg) {
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--workers")) cfg.workers = f.workers;
  if (given("--steps")) cfg.n_steps = f.steps;
  if (given("--t-final")) cfg.t_final = f.t_final;
  if (given("--phase")) {
    parse_phase(f.phase);
    cfg.phase = f.phase;
    if (!given("--t-final")) cfg.t_final.reset();
  }
  if (given("--regime")) cfg.regime = f.regime;
  if (given("--strength")) cfg.disorder.strength = f.strength;
  if (given("--strengths")) cfg.strengths = parse_range(f.strengths);
  if (given("--realizations")) cfg.realizations = f.realizations;
  if (given("--experiment")) cfg.experiment = f.experiment;
  if (given("--tf-grid")) {
    const auto v = parse_range(f.tf_grid);
    // Kept as an evenly spaced grid.
    cfg.tf_grid = {v.front(), v.back(), static_cast<int>(v.size())};
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topological beam splitter and HOM interference on an SSH chain", "sshhom"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"spectrum", "instantaneous spectrum along the ramp"},
      {"bs-scan", "beam-splitter output ports over a phase grid"},
      {"hom", "two-photon HOM run from |1,2N>"},
      {"calibrate", "t_final for a target dynamical phase"},
      {"sweep", "disorder-averaged fidelity vs strength"},
      {"tf-scan", "disorder-averaged fidelity vs t_final"},
      {"symmetry-check", "symmetry residuals of H and H(k)"}};
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  try {
    RunConfig cfg;
    if (!flags.config.empty()) {
      const auto recorded = load_config_file(flags.config, cfg);
      if (recorded && *recorded != command) {
        throw ConfigError("manifest was written by '" + *recorded + "', not '" + command + "'");
      }
    }
    apply_flags(*sub, flags, cfg);
    resolve_defaults(command, cfg);

    fs::path dir = flags.out;
    if (const char* env = std::getenv("SSH_HOM_OUT"); env != nullptr && *env != '\0') dir = env;
    fs::create_directories(dir);

    Context ctx{command, cfg, dir, out, {}, {}};
    const auto start = std::chrono::steady_clock::now();
    if (command == "spectrum") cmd_spectrum(ctx);
    else if (command == "bs-scan") cmd_bs_scan(ctx);
    else if (command == "hom") cmd_hom(ctx);
    else if (command == "calibrate") cmd_calibrate(ctx);
    else if (command == "sweep") cmd_sweep(ctx);
    else if (command == "tf-scan") cmd_tf_scan(ctx);
    else if (command == "symmetry-check") cmd_symmetry_check(ctx);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(ctx, seconds);
    if (ctx.failure) {
      err << "numerical check failed [" << ctx.failure->first << "]: " << ctx.failure->second << "\n";
      return 3;
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalCheckError& e) {
    err << "numerical check failed [" << e.invariant() << "]: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sshhom::cli

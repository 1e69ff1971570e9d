#include "sshhom/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "sshhom/dynamics.hpp"
#include "sshhom/errors.hpp"
#include "sshhom/multiparticle.hpp"
#include "sshhom/spectral.hpp"

namespace sshhom {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::bs_fidelity: return "bs_fidelity";
    case ExperimentKind::hom_fidelity: return "hom_fidelity";
    case ExperimentKind::tf_scan: return "tf_scan";
    case ExperimentKind::parity_study: return "parity_study";
    case ExperimentKind::df_study: return "df_study";
  }
  return "hom_fidelity";
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::bdi_static: return "bdi_static";
    case Regime::bdi_temporal: return "bdi_temporal";
    case Regime::inv_static: return "inv_static";
    case Regime::generic_static: return "generic_static";
    case Regime::generic_temporal: return "generic_temporal";
  }
  return "bdi_static";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::bs_fidelity, ExperimentKind::hom_fidelity, ExperimentKind::tf_scan,
                 ExperimentKind::parity_study, ExperimentKind::df_study}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

Regime parse_regime(const std::string& name) {
  for (auto r : {Regime::bdi_static, Regime::bdi_temporal, Regime::inv_static, Regime::generic_static,
                 Regime::generic_temporal}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown regime '" + name + "'");
}

DisorderSpec regime_disorder(Regime regime) {
  DisorderSpec d;
  switch (regime) {
    case Regime::bdi_static:
      d.kind = DisorderKind::hopping_bdi;
      break;
    case Regime::bdi_temporal:
      d.kind = DisorderKind::hopping_bdi;
      d.policy = TemporalPolicy::resample_every_step;
      break;
    case Regime::inv_static:
      d.kind = DisorderKind::onsite_inversion_symmetric;
      break;
    case Regime::generic_static:
      d.kind = DisorderKind::onsite_generic;
      break;
    case Regime::generic_temporal:
      d.kind = DisorderKind::onsite_generic;
      d.policy = TemporalPolicy::resample_every_step;
      break;
  }
  return d;
}

Schedule ExperimentConfig::schedule_for(double t) const {
  Schedule s = Schedule::with_default_steps(t);
  if (n_steps > 0) s.n_steps = n_steps;
  return s;
}

void ExperimentConfig::validate() const {
  lattice.validate();
  disorder.validate();
  if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (n_realizations < 1) throw ConfigError("n_realizations must be >= 1");
  if (strengths.empty()) throw ConfigError("strength grid must be nonempty");
  if (!std::is_sorted(strengths.begin(), strengths.end())) throw ConfigError("strength grid must be sorted");
  for (double s : strengths) {
    if (!(s >= 0.0)) throw ConfigError("strengths must be nonnegative");
  }
  if (kind == ExperimentKind::tf_scan) {
    if (t_finals.empty()) throw ConfigError("t_final grid must be nonempty");
    if (!std::is_sorted(t_finals.begin(), t_finals.end())) throw ConfigError("t_final grid must be sorted");
    if (tf_measure != ExperimentKind::bs_fidelity && tf_measure != ExperimentKind::hom_fidelity) {
      throw ConfigError("tf_scan measures bs_fidelity or hom_fidelity");
    }
  }
  if (sample_stride < 1) throw ConfigError("sample_stride must be >= 1");
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  int threads = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

GridPointStats summarize(double parameter, std::vector<double> values, std::vector<bool> flagged,
                         std::vector<std::string> reasons) {
  GridPointStats s;
  s.parameter = parameter;
  double sum = 0.0;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  int finite = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (flagged[k]) ++s.n_flagged;
    if (std::isnan(values[k])) continue;
    ++finite;
    sum += values[k];
    s.min = std::min(s.min, values[k]);
    s.max = std::max(s.max, values[k]);
  }
  s.n_valid = static_cast<int>(values.size()) - s.n_flagged;
  if (finite > 0) {
    s.mean = sum / finite;
    double var = 0.0;
    for (double v : values) {
      if (!std::isnan(v)) var += (v - s.mean) * (v - s.mean);
    }
    s.stddev = finite > 1 ? std::sqrt(var / (finite - 1)) : 0.0;
    // Summation order can leave the mean an ulp outside [min, max].
    s.mean = std::clamp(s.mean, s.min, s.max);
  } else {
    s.mean = s.stddev = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
  }
  s.values = std::move(values);
  s.flagged = std::move(flagged);
  s.reasons = std::move(reasons);
  return s;
}

double EndSiteRun::windowed_abs_df() const {
  double acc = 0.0;
  for (int w = 0; w < kDfWindows; ++w) acc += 0.5 * (std::abs(window_df_plus[w]) + std::abs(window_df_minus[w]));
  return acc / kDfWindows;
}

double EndSiteRun::parity_drift() const {
  double drift = 0.0;
  for (double p : parity_plus) drift = std::max(drift, std::abs(p - parity_plus.front()));
  return drift;
}

EndSiteRun run_end_sites(const LatticeSpec& spec, const Schedule& sched, const DisorderSpec& dspec,
                         const EndSiteOptions& options) {
  const int l = spec.sites();
  EndSiteRun run;
  std::array<int, kDfWindows> counts{};
  const double inv_sqrt2 = std::numbers::sqrt2 / 2.0;

  auto record = [&](double t, const Eigen::MatrixXcd& cols) {
    run.times.push_back(t);
    run.parity_plus.push_back(parity_expectation(inv_sqrt2 * (cols.col(0) + cols.col(1))));
    run.parity_minus.push_back(parity_expectation(inv_sqrt2 * (cols.col(0) - cols.col(1))));
    if (options.record_two_particle) {
      const TwoParticleState tp = two_particle_from_columns(cols.col(0), cols.col(1), false);
      run.noon_fidelity.push_back(noon_fidelity(tp));
      run.nity.push_back(noonity(correlation(tp)));
    }
  };

  Eigen::MatrixXcd ends = Eigen::MatrixXcd::Zero(l, 2);
  ends(0, 0) = 1.0;
  ends(l - 1, 1) = 1.0;
  record(0.0, ends);
  const double window = sched.t_final / kDfWindows;
  run.final_columns = evolve(spec, sched, dspec, ends, [&](const StepView& v) {
    if (options.track_in_gap) {
      const EdgePair pair = in_gap_pair(v.eigen);
      const int w = std::min(kDfWindows - 1, static_cast<int>(v.t_mid / window));
      run.window_df_plus[w] += distribution_difference(pair.plus_state);
      run.window_df_minus[w] += distribution_difference(pair.minus_state);
      ++counts[w];
    }
    const int done = v.step + 1;
    if (done % options.sample_stride == 0 || done == sched.n_steps) {
      record(done == sched.n_steps ? sched.t_final : done * sched.dt(), v.columns);
    }
  });
  for (int w = 0; w < kDfWindows; ++w) {
    if (counts[w] > 0) {
      run.window_df_plus[w] /= counts[w];
      run.window_df_minus[w] /= counts[w];
    }
  }
  for (int c = 0; c < 2; ++c) {
    const double leak = 1.0 - std::norm(run.final_columns(0, c)) - std::norm(run.final_columns(l - 1, c));
    run.max_leakage = std::max(run.max_leakage, leak);
  }
  return run;
}

namespace {

struct Outcome {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool flagged = false;
  std::string reason;
};

// Figure of merit of one realization.
Outcome measure(ExperimentKind kind, const LatticeSpec& spec, const Schedule& sched,
                const DisorderSpec& dspec, const WaveFunction& bs_target, int sample_stride) {
  Outcome out;
  try {
    EndSiteOptions opts;
    opts.record_two_particle = false;
    opts.track_in_gap = kind == ExperimentKind::df_study;
    opts.sample_stride = kind == ExperimentKind::parity_study ? sample_stride : sched.n_steps;
    const EndSiteRun run = run_end_sites(spec, sched, dspec, opts);
    switch (kind) {
      case ExperimentKind::bs_fidelity:
        out.value = std::abs(bs_target.dot(run.final_columns.col(0)));
        break;
      case ExperimentKind::hom_fidelity:
        out.value = noon_fidelity(
            two_particle_from_columns(run.final_columns.col(0), run.final_columns.col(1), false));
        break;
      case ExperimentKind::parity_study:
        out.value = run.parity_drift();
        break;
      case ExperimentKind::df_study:
        out.value = run.windowed_abs_df();
        break;
      case ExperimentKind::tf_scan:
        throw std::logic_error("tf_scan is not a per-realization measure");
    }
    if (run.max_leakage > kLeakageThreshold) {
      out.flagged = true;
      out.reason = "leakage " + std::to_string(run.max_leakage);
    }
  } catch (const NumericalCheckError& e) {
    out.flagged = true;
    out.reason = e.what();
  }
  return out;
}

WaveFunction clean_bs_target(const LatticeSpec& spec, double nominal_t_final) {
  return beam_splitter_target(spec, mean_in_gap_energy(spec) * nominal_t_final, 0);
}

// Runs all (grid point, realization) units and returns one stats block per
// grid point.
std::vector<GridPointStats> run_grid(const ExperimentConfig& cfg, ExperimentKind kind,
                                     const std::vector<double>& parameters,
                                     const std::function<std::pair<Schedule, DisorderSpec>(int)>& setup) {
  const int n_points = static_cast<int>(parameters.size());
  const int n_real = cfg.n_realizations;
  WaveFunction target;
  if (kind == ExperimentKind::bs_fidelity) target = clean_bs_target(cfg.lattice, cfg.t_final);

  std::vector<Outcome> outcomes(static_cast<std::size_t>(n_points) * n_real);
  std::vector<std::pair<Schedule, DisorderSpec>> setups;
  for (int p = 0; p < n_points; ++p) setups.push_back(setup(p));

  // Units without randomness are evaluated once and replicated.
  std::vector<int> units;
  for (int p = 0; p < n_points; ++p) {
    const int reps = setups[p].second.is_random() ? n_real : 1;
    for (int k = 0; k < reps; ++k) units.push_back(p * n_real + k);
  }
  parallel_for(static_cast<int>(units.size()), cfg.workers, [&](int u) {
    const int idx = units[u];
    const int p = idx / n_real;
    DisorderSpec d = setups[p].second;
    d.realization = static_cast<std::uint64_t>(idx % n_real);
    outcomes[idx] = measure(kind, cfg.lattice, setups[p].first, d, target, cfg.sample_stride);
  });

  std::vector<GridPointStats> stats;
  for (int p = 0; p < n_points; ++p) {
    std::vector<double> values(n_real);
    std::vector<bool> flagged(n_real);
    std::vector<std::string> reasons(n_real);
    const bool random = setups[p].second.is_random();
    for (int k = 0; k < n_real; ++k) {
      const Outcome& o = outcomes[p * n_real + (random ? k : 0)];
      values[k] = o.value;
      flagged[k] = o.flagged;
      reasons[k] = o.reason;
    }
    stats.push_back(summarize(parameters[p], std::move(values), std::move(flagged), std::move(reasons)));
  }
  return stats;
}

}  // namespace

EnsembleResult run_ensemble(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.kind == ExperimentKind::tf_scan) throw ConfigError("use tf_scan for t_final scans");
  EnsembleResult result;
  result.kind = cfg.kind;
  const Schedule sched = cfg.schedule_for(cfg.t_final);
  result.points = run_grid(cfg, cfg.kind, cfg.strengths, [&](int p) {
    DisorderSpec d = cfg.disorder;
    d.strength = cfg.strengths[p];
    d.seed = cfg.base_seed;
    return std::make_pair(sched, d);
  });
  return result;
}

TfScanResult tf_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.kind != ExperimentKind::tf_scan) throw ConfigError("config kind must be tf_scan");
  TfScanResult result;
  result.points = run_grid(cfg, cfg.tf_measure, cfg.t_finals, [&](int p) {
    DisorderSpec d = cfg.disorder;
    d.strength = cfg.strengths.front();
    d.seed = cfg.base_seed;
    return std::make_pair(cfg.schedule_for(cfg.t_finals[p]), d);
  });
  result.max_mean = -1.0;
  for (const auto& pt : result.points) {
    if (pt.mean > result.max_mean) {
      result.max_mean = pt.mean;
      result.argmax_t_final = pt.parameter;
    }
  }
  result.best_per_realization.assign(cfg.n_realizations, -1.0);
  result.best_t_per_realization.assign(cfg.n_realizations, 0.0);
  for (const auto& pt : result.points) {
    for (int k = 0; k < cfg.n_realizations; ++k) {
      if (pt.values[k] > result.best_per_realization[k]) {
        result.best_per_realization[k] = pt.values[k];
        result.best_t_per_realization[k] = pt.parameter;
      }
    }
  }
  return result;
}

RegimeReport symmetry_regime_study(Regime regime, const RegimeOptions& options) {
  options.lattice.validate();
  if (options.n_realizations < 1) throw ConfigError("n_realizations must be >= 1");
  RegimeReport report;
  report.regime = regime;
  report.disorder = regime_disorder(regime);
  report.disorder.strength = options.strength;
  report.disorder.seed = options.base_seed;
  report.t_final = options.t_final;
  Schedule sched = Schedule::with_default_steps(options.t_final);
  if (options.n_steps > 0) sched.n_steps = options.n_steps;

  const int n_real = options.n_realizations;
  std::vector<EndSiteRun> runs(n_real);
  std::vector<std::string> failures(n_real);
  EndSiteOptions opts;
  opts.sample_stride = options.sample_stride;
  parallel_for(n_real, options.workers, [&](int k) {
    DisorderSpec d = report.disorder;
    d.realization = static_cast<std::uint64_t>(k);
    try {
      runs[k] = run_end_sites(options.lattice, sched, d, opts);
    } catch (const NumericalCheckError& e) {
      failures[k] = e.what();
    }
  });

  const EndSiteRun* first = nullptr;
  for (int k = 0; k < n_real && first == nullptr; ++k) {
    if (failures[k].empty()) first = &runs[k];
  }
  if (first == nullptr) throw NumericalCheckError("regime", "every realization failed: " + failures[0]);
  report.times = first->times;
  report.fidelity_first = first->noon_fidelity;
  report.nity_first = first->nity;
  report.parity_plus_first = first->parity_plus;
  report.parity_minus_first = first->parity_minus;
  report.window_df_plus_first = first->window_df_plus;
  report.window_df_minus_first = first->window_df_minus;
  auto final_gamma = [](const EndSiteRun& r) {
    return correlation(two_particle_from_columns(r.final_columns.col(0), r.final_columns.col(1), false));
  };
  report.final_gamma_first = final_gamma(*first);

  const std::size_t n_samples = report.times.size();
  report.fidelity_mean.assign(n_samples, 0.0);
  report.nity_mean.assign(n_samples, 0.0);
  report.parity_plus_mean.assign(n_samples, 0.0);
  report.parity_minus_mean.assign(n_samples, 0.0);
  report.final_gamma_mean = Eigen::MatrixXd::Zero(options.lattice.sites(), options.lattice.sites());
  std::vector<double> fid(n_real), nity(n_real), df(n_real), drift(n_real);
  std::vector<bool> flagged(n_real);
  int n_ok = 0;
  for (int k = 0; k < n_real; ++k) {
    if (!failures[k].empty()) {
      fid[k] = nity[k] = df[k] = drift[k] = std::numeric_limits<double>::quiet_NaN();
      flagged[k] = true;
      continue;
    }
    const EndSiteRun& r = runs[k];
    ++n_ok;
    for (std::size_t i = 0; i < n_samples; ++i) {
      report.fidelity_mean[i] += r.noon_fidelity[i];
      report.nity_mean[i] += r.nity[i];
      report.parity_plus_mean[i] += r.parity_plus[i];
      report.parity_minus_mean[i] += r.parity_minus[i];
    }
    report.final_gamma_mean += final_gamma(r);
    fid[k] = r.noon_fidelity.back();
    nity[k] = r.nity.back();
    df[k] = r.windowed_abs_df();
    drift[k] = r.parity_drift();
    flagged[k] = r.max_leakage > kLeakageThreshold;
    if (flagged[k]) failures[k] = "leakage " + std::to_string(r.max_leakage);
  }
  for (std::size_t i = 0; i < n_samples; ++i) {
    report.fidelity_mean[i] /= n_ok;
    report.nity_mean[i] /= n_ok;
    report.parity_plus_mean[i] /= n_ok;
    report.parity_minus_mean[i] /= n_ok;
  }
  report.final_gamma_mean /= n_ok;
  for (double p : report.parity_plus_mean) {
    report.mean_parity_drift = std::max(report.mean_parity_drift, std::abs(p - report.parity_plus_mean.front()));
  }
  report.final_fidelity = summarize(options.strength, fid, flagged, failures);
  report.final_nity = summarize(options.strength, nity, flagged, failures);
  report.windowed_abs_df = summarize(options.strength, df, flagged, failures);
  report.parity_drift = summarize(options.strength, drift, flagged, failures);
  return report;
}

}  // namespace sshhom

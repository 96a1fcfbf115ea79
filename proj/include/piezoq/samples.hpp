#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "piezoq/dynamics.hpp"
#include "piezoq/errors.hpp"
#include "piezoq/experiment_sim.hpp"
#include "piezoq/io.hpp"
#include "piezoq/quantization.hpp"
#include "piezoq/rng.hpp"
#include "piezoq/spectrum_fit.hpp"

// Bundled device datasets (samples A, B, C): measured qubit parameters and
// per-mode electromechanical couplings/linewidths, plus the comb geometry
// used to synthesize relaxation spectra from them.

namespace piezoq {

struct SampleRecord {
  std::string name;
  // qubit parameters
  double charging_energy_hz = 0.0;
  double max_josephson_energy_hz = 0.0;
  double fq_max_hz = 0.0;  // measured maximum qubit frequency, cross-check only
  // spectrum synthesis configuration
  double comb_center_hz = 0.0;
  double fsr_hz = 0.0;
  double background_t1_s = 0.0;
  double t2_star_s = 0.0;
  // per-mode couplings and linewidths
  std::vector<double> g_hz;
  std::vector<double> kappa_hz;

  std::size_t mode_count() const { return g_hz.size(); }

  double gamma2q_per_s() const { return 1.0 / t2_star_s; }

  QubitParams qubit() const {
    QubitParams q;
    q.charging_energy_hz = charging_energy_hz;
    q.max_josephson_energy_hz = max_josephson_energy_hz;
    q.flux_quanta = 0.0;
    q.shunt_capacitance_f = capacitance_from_charging_energy(charging_energy_hz);
    q.nominal_decay_per_s = 1.0 / background_t1_s;
    q.pure_dephasing_per_s = std::max(gamma2q_per_s() - 0.5 * q.nominal_decay_per_s, 0.0);
    return q;
  }

  CouplingSet coupling_set() const {
    return make_mode_comb(comb_center_hz, fsr_hz, mode_count(), g_hz, kappa_hz);
  }

  std::vector<double> mode_frequencies_hz() const {
    const CouplingSet set = coupling_set();
    std::vector<double> out(set.modes.size());
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = rad_to_hz(set.modes[k].mode_frequency_rad);
    return out;
  }
};

inline SampleRecord load_sample(const std::filesystem::path& fixtures_dir,
                                const std::string& name) {
  const std::filesystem::path meta_path = fixtures_dir / "samples_meta.json";
  if (!std::filesystem::exists(meta_path)) throw FixtureNotFoundError(meta_path.string());
  const json meta = json::parse(read_text_file(meta_path));
  std::string key = name;
  for (auto& c : key) c = static_cast<char>(std::tolower(c));
  if (!meta.contains(key)) throw DomainError("unknown sample '" + name + "'");
  const json& m = meta.at(key);

  SampleRecord record;
  record.name = name;
  record.charging_energy_hz = m.at("charging_energy_hz").get<double>();
  record.max_josephson_energy_hz = m.at("max_josephson_energy_hz").get<double>();
  record.fq_max_hz = m.at("fq_max_hz").get<double>();
  record.comb_center_hz = m.at("comb_center_hz").get<double>();
  record.fsr_hz = m.at("fsr_hz").get<double>();
  record.background_t1_s = m.at("background_t1_s").get<double>();
  record.t2_star_s = m.at("t2_star_s").get<double>();

  const std::filesystem::path table_path = fixtures_dir / ("sample_" + key + ".csv");
  if (!std::filesystem::exists(table_path)) throw FixtureNotFoundError(table_path.string());
  std::istringstream in(read_text_file(table_path));
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#' || line.find("mode_index") != std::string::npos)
      continue;
    double idx = 0, g = 0, kappa = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &idx, &g, &kappa) != 3)
      throw ParseError("expected mode_index,g_hz,kappa_hz", line_no);
    record.g_hz.push_back(g);
    record.kappa_hz.push_back(kappa);
  }
  if (record.g_hz.empty()) throw ParseError("no mode rows", line_no);
  return record;
}

/// Noise-free relaxation spectrum over the comb band. The grid is a coarse
/// base sweep plus dense refinement around each mode, the way measured
/// spectra concentrate points on the dips.
inline SpectrumData sample_spectrum_grid(const SampleRecord& record) {
  const std::vector<double> f_m = record.mode_frequencies_hz();
  const double lo = f_m.front() - 0.75 * record.fsr_hz;
  const double hi = f_m.back() + 0.75 * record.fsr_hz;

  std::vector<double> grid;
  const double base_step = record.fsr_hz / 24.0;
  for (double f = lo; f <= hi; f += base_step) grid.push_back(f);
  for (std::size_t k = 0; k < record.mode_count(); ++k) {
    const double hwhm =
        (record.gamma2q_per_s() + 0.5 * hz_to_rad(record.kappa_hz[k])) / two_pi;
    const double local_step = hwhm / 30.0;
    const double span = 10.0 * hwhm;
    for (double f = f_m[k] - span; f <= f_m[k] + span; f += local_step) {
      if (f > lo && f < hi) grid.push_back(f);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) < 1.0; }),
             grid.end());

  SpectrumData data;
  data.qubit_frequency_hz = grid;
  std::vector<double> omega(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) omega[i] = hz_to_rad(grid[i]);
  const std::vector<double> gamma = gamma1_spectrum(record.coupling_set(), record.qubit(), omega);
  data.t1_s.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) data.t1_s[i] = 1.0 / gamma[i];
  return data;
}

/// Applies multiplicative log-normal noise, T1 -> T1 exp(sigma z).
inline SpectrumData add_t1_noise(SpectrumData data, double sigma, std::uint64_t seed) {
  SeedStream rng(seed);
  for (double& t1 : data.t1_s) t1 *= rng.lognormal(sigma);
  return data;
}

struct ModeRecovery {
  double f_true_hz = 0.0, g_true_hz = 0.0, kappa_true_hz = 0.0;
  double f_fit_hz = 0.0, g_fit_hz = 0.0, kappa_fit_hz = 0.0;
  double g_rel_err = 0.0, kappa_rel_err = 0.0;
  bool matched = false;
};

struct RecoveryReport {
  std::uint64_t seed = 0;
  bool converged = false;
  std::size_t detected_peaks = 0;
  std::vector<ModeRecovery> modes;
  double background_t1_s = 0.0;

  bool all_matched() const {
    for (const auto& m : modes)
      if (!m.matched) return false;
    return !modes.empty();
  }
};

/// One synthetic round trip: synthesize with noise, detect peaks (reported
/// as a diagnostic), fit from the designed comb seeds, match fitted modes to
/// injected ones by nearest frequency within FSR/2.
inline RecoveryReport run_recovery(const SampleRecord& record, double noise_sigma,
                                   std::uint64_t seed) {
  const SpectrumData data = add_t1_noise(sample_spectrum_grid(record), noise_sigma, seed);

  const double avg_step = (data.qubit_frequency_hz.back() - data.qubit_frequency_hz.front()) /
                          static_cast<double>(data.size() - 1);
  const std::size_t smoothing =
      std::max<std::size_t>(static_cast<std::size_t>(record.fsr_hz / 2.0 / avg_step) | 1u, 3);

  RecoveryReport report;
  report.seed = seed;
  report.detected_peaks = detect_modes(data, 0.04, smoothing).size();

  SpectrumData weighted = data;
  weighted.t1_uncertainty_s.resize(weighted.size());
  for (std::size_t i = 0; i < weighted.size(); ++i)
    weighted.t1_uncertainty_s[i] = noise_sigma * weighted.t1_s[i];

  FitOptions opt;
  opt.seed_merge_linewidths = 0.0;  // designed seeds are already distinct
  opt.use_uncertainty_weights = true;
  const std::vector<double> seeds = record.mode_frequencies_hz();
  const SpectrumFitResult fit = fit_spectrum(weighted, seeds, record.gamma2q_per_s(), opt);
  report.converged = fit.converged;
  report.background_t1_s = fit.background_t1_s;

  std::vector<bool> used(fit.modes.size(), false);
  for (std::size_t k = 0; k < record.mode_count(); ++k) {
    ModeRecovery rec;
    rec.f_true_hz = seeds[k];
    rec.g_true_hz = record.g_hz[k];
    rec.kappa_true_hz = record.kappa_hz[k];
    std::size_t best = fit.modes.size();
    double best_dist = 0.5 * record.fsr_hz;
    for (std::size_t j = 0; j < fit.modes.size(); ++j) {
      if (used[j]) continue;
      const double dist = std::abs(fit.modes[j].f_m_hz - rec.f_true_hz);
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best < fit.modes.size()) {
      used[best] = true;
      rec.matched = true;
      rec.f_fit_hz = fit.modes[best].f_m_hz;
      rec.g_fit_hz = fit.modes[best].g_hz;
      rec.kappa_fit_hz = fit.modes[best].kappa_hz;
      rec.g_rel_err = std::abs(rec.g_fit_hz - rec.g_true_hz) / rec.g_true_hz;
      rec.kappa_rel_err = std::abs(rec.kappa_fit_hz - rec.kappa_true_hz) / rec.kappa_true_hz;
    }
    report.modes.push_back(rec);
  }
  return report;
}

struct RecoveryStats {
  double median_rel_err = 0.0;
  double worst_rel_err = 0.0;
  std::size_t trials = 0;
  bool all_converged = true;
  bool all_matched = true;
};

inline RecoveryStats recovery_stats(const SampleRecord& record, double noise_sigma,
                                    std::size_t n_trials, std::uint64_t base_seed = 1) {
  RecoveryStats stats;
  stats.trials = n_trials;
  std::vector<double> errors;
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    const RecoveryReport report = run_recovery(record, noise_sigma, base_seed + trial);
    stats.all_converged = stats.all_converged && report.converged;
    stats.all_matched = stats.all_matched && report.all_matched();
    for (const auto& m : report.modes) {
      if (!m.matched) continue;
      errors.push_back(m.g_rel_err);
      errors.push_back(m.kappa_rel_err);
    }
  }
  if (errors.empty()) {
    stats.median_rel_err = stats.worst_rel_err = std::numeric_limits<double>::infinity();
    stats.all_matched = false;
    return stats;
  }
  std::sort(errors.begin(), errors.end());
  stats.median_rel_err = errors[errors.size() / 2];
  stats.worst_rel_err = errors.back();
  return stats;
}

}  // namespace piezoq

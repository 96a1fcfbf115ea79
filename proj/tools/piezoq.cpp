// piezoq command line: synthesize electromechanical circuits, sweep
// admittance, quantize to qubit-phonon couplings, integrate decays, build
// synthetic p_e maps, fit relaxation spectra and emit loss budgets.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "piezoq/io.hpp"
#include "piezoq/samples.hpp"

namespace fs = std::filesystem;
using namespace piezoq;

namespace {

struct GlobalArgs {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string format = "csv";
  std::string command_line;
};

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const GlobalArgs& args, const std::string& command,
                    const std::vector<std::string>& input_paths) {
  json manifest{{"command", command},
                {"input_paths", input_paths},
                {"output_dir", args.out_dir},
                {"seed", args.seed},
                {"tool_version", version_string},
                {"command_line", args.command_line},
                {"timestamp_utc", iso_timestamp()}};
  write_text_file(fs::path(args.out_dir) / "run_manifest.json", manifest.dump(2) + "\n");
}

OutputHeader header_for(const GlobalArgs& args) {
  return OutputHeader{args.command_line, args.seed};
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (!(lo < hi) || n < 2) throw DomainError("grid requires lo < hi and at least 2 points");
  std::vector<double> grid(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + step * static_cast<double>(i);
  return grid;
}

std::vector<TlsDefect> load_tls_file(const fs::path& path) {
  const json j = json::parse(read_text_file(path));
  std::vector<TlsDefect> out;
  for (const auto& jt : j) {
    TlsDefect d;
    d.tunneling_amplitude_hz = jt.at("tunneling_hz").get<double>();
    d.asymmetry_at_zero_bias_hz = jt.value("asymmetry0_hz", 0.0);
    d.bias_sensitivity_hz_per_v = jt.value("bias_slope_hz_per_v", 0.0);
    d.qubit_coupling_hz = jt.at("g_hz").get<double>();
    d.linewidth_hz = jt.at("gamma_hz").get<double>();
    d.validate();
    out.push_back(d);
  }
  return out;
}

int cmd_sweep(const GlobalArgs& args, const std::string& circuit_path, double fmin_hz,
              double fmax_hz, std::size_t points) {
  const BvdCircuit circuit = circuit_from_json(json::parse(read_text_file(circuit_path)));
  std::vector<double> grid = linear_grid(hz_to_rad(fmin_hz), hz_to_rad(fmax_hz), points);
  const std::vector<Admittance> sweep = sweep_admittance(circuit, grid);
  const fs::path out(args.out_dir);
  if (args.format == "json") {
    write_text_file(out / "admittance.json", admittance_json(sweep).dump(2) + "\n");
  } else {
    write_text_file(out / "admittance.csv", admittance_csv(sweep, header_for(args)));
  }
  write_manifest(args, "sweep", {circuit_path});
  std::cout << "swept " << sweep.size() << " points over ["
            << fmin_hz << ", " << fmax_hz << "] Hz\n";
  return 0;
}

int cmd_quantize(const GlobalArgs& args, const std::string& circuit_path, double ec_hz,
                 double ejmax_hz, double flux, double gamma1_0, double gamma_phi,
                 double cj_f) {
  const BvdCircuit circuit = circuit_from_json(json::parse(read_text_file(circuit_path)));
  QubitParams qubit;
  qubit.charging_energy_hz = ec_hz;
  qubit.max_josephson_energy_hz = ejmax_hz;
  qubit.flux_quanta = flux;
  qubit.shunt_capacitance_f = circuit.static_capacitance_f();
  qubit.junction_capacitance_f = cj_f;
  qubit.nominal_decay_per_s = gamma1_0;
  qubit.pure_dephasing_per_s = gamma_phi;

  CouplingSet set;
  std::vector<std::string> warnings;
  for (const auto& warning : transmon_frequency(qubit).warnings) warnings.push_back(warning.message);
  for (const auto& branch : circuit.branches()) {
    const QuantizedBranch q = quantize_branch(branch, qubit);
    set.modes.push_back(q.mode);
    for (const auto& warning : q.warnings) warnings.push_back(warning.message);
  }
  set.validate();

  json out_json = coupling_set_to_json(set);
  out_json["qubit_frequency_hz"] = rad_to_hz(transmon_frequency(qubit).omega_rad);
  out_json["warnings"] = warnings;
  write_text_file(fs::path(args.out_dir) / "couplings.json", out_json.dump(2) + "\n");
  write_manifest(args, "quantize", {circuit_path});
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "quantized " << set.modes.size() << " modes\n";
  return 0;
}

int cmd_decay(const GlobalArgs& args, const DynamicsConfig& cfg) {
  const Trajectory traj = evolve(DensityMatrix3::pure(2), cfg);
  const DecayFit fit = effective_decay_rate(traj.times_s, traj.population_series(2));
  const double gamma2 = cfg.pure_dephasing_per_s + 0.5 * cfg.nominal_decay_per_s +
                        0.5 * cfg.mode_linewidth_per_s;
  const double analytic = cfg.nominal_decay_per_s +
                          lorentzian_rate(cfg.coupling_rad, gamma2, cfg.detuning_rad);
  const fs::path out(args.out_dir);
  write_text_file(out / "trajectory.csv", trajectory_csv(traj, header_for(args)));
  json result{{"fitted_gamma1_per_s", fit.rate_per_s},
              {"fit_residual_rms", fit.residual_rms},
              {"analytic_gamma1_per_s", analytic},
              {"samples", traj.times_s.size()}};
  write_text_file(out / "decay.json", result.dump(2) + "\n");
  write_manifest(args, "decay", {});
  std::cout << "fitted decay rate " << fit.rate_per_s << " 1/s (rate-model value " << analytic
            << " 1/s)\n";
  return 0;
}

struct PemapArgs {
  double fq_min_hz = 3.1e9, fq_max_hz = 3.3e9;
  std::size_t fq_points = 201;
  double bias_min_v = -1.0, bias_max_v = 1.0;
  std::size_t bias_points = 21;
  double delay_s = 3e-6;
  long shots = 0;
  double comb_center_hz = 3.19e9, comb_fsr_hz = 12.8e6;
  std::size_t comb_modes = 11;
  double comb_g_hz = 150e3, comb_kappa_hz = 2e6;
  double gamma1_0 = 1e5, gamma_phi = 1e5;
  std::string tls_path;
};

int cmd_pemap(const GlobalArgs& args, const PemapArgs& p) {
  ExperimentPlan plan;
  plan.qubit_frequency_grid_hz = linear_grid(p.fq_min_hz, p.fq_max_hz, p.fq_points);
  plan.bias_grid_v = linear_grid(p.bias_min_v, p.bias_max_v, p.bias_points);
  plan.delay_s = p.delay_s;
  plan.shots = p.shots;

  const CouplingSet comb = make_mode_comb(p.comb_center_hz, p.comb_fsr_hz, p.comb_modes,
                                          std::vector<double>{p.comb_g_hz},
                                          std::vector<double>{p.comb_kappa_hz});
  std::vector<TlsDefect> tls;
  std::vector<std::string> inputs;
  if (!p.tls_path.empty()) {
    tls = load_tls_file(p.tls_path);
    inputs.push_back(p.tls_path);
  }
  QubitParams qubit;
  qubit.charging_energy_hz = 68e6;
  qubit.max_josephson_energy_hz = 20e9;
  qubit.shunt_capacitance_f = capacitance_from_charging_energy(qubit.charging_energy_hz);
  qubit.nominal_decay_per_s = p.gamma1_0;
  qubit.pure_dephasing_per_s = p.gamma_phi;

  const PeMap map = pe_map(plan, comb, tls, qubit, args.seed);
  const std::vector<double> profile = bias_average(map);

  const fs::path out(args.out_dir);
  write_text_file(out / "pe_map.csv", pe_map_csv(map, header_for(args)));
  write_text_file(out / "pe_map_meta.json", pe_plan_to_json(plan, args.seed).dump(2) + "\n");
  write_text_file(out / "profile.csv",
                  profile_csv(map.qubit_frequency_hz, profile, header_for(args)));
  write_manifest(args, "pemap", inputs);
  std::cout << "map " << map.qubit_frequency_hz.size() << " x " << map.bias_v.size()
            << " written\n";
  return 0;
}

int cmd_fit(const GlobalArgs& args, const std::string& spectrum_path, double gamma2q,
            double t2star_s, double min_prominence, std::size_t smoothing, bool weighted,
            double merge_linewidths) {
  const SpectrumData data = read_spectrum_csv_file(spectrum_path);
  if (t2star_s > 0.0) gamma2q = 1.0 / t2star_s;
  if (!(gamma2q >= 0.0)) throw DomainError("fit: gamma2q must be >= 0");

  const std::vector<double> seeds = detect_modes(data, min_prominence, smoothing);

  SpectrumFitResult fit;
  if (seeds.empty()) {
    // No detectable modes: background-only model.
    double acc = 0.0;
    for (double t1 : data.t1_s) acc += 1.0 / t1;
    fit.background_gamma1_per_s = acc / static_cast<double>(data.size());
    fit.background_t1_s = 1.0 / fit.background_gamma1_per_s;
    fit.converged = true;
  } else {
    FitOptions opt;
    opt.use_uncertainty_weights = weighted;
    opt.seed_merge_linewidths = merge_linewidths;
    fit = fit_spectrum(data, seeds, gamma2q, opt);
  }

  const fs::path out(args.out_dir);
  json fit_json = fit_result_to_json(fit);
  fit_json["gamma2q_per_s"] = gamma2q;
  fit_json["detected_seeds"] = seeds.size();
  write_text_file(out / "fit.json", fit_json.dump(2) + "\n");

  const std::vector<double> curve = evaluate_fit(fit, data.qubit_frequency_hz, gamma2q);
  write_text_file(out / "fitted_curve.csv",
                  spectrum_csv(data.qubit_frequency_hz, curve, header_for(args)));
  write_manifest(args, "fit", {spectrum_path});
  std::cout << (fit.converged ? "converged" : "did not converge") << ", " << fit.modes.size()
            << " modes, background T1 = " << fit.background_t1_s << " s\n";
  return fit.converged ? 0 : 2;
}

int cmd_budget(const GlobalArgs& args, const std::string& config_path, double fmin_hz,
               double fmax_hz, std::size_t points) {
  LossModel model;
  std::vector<std::string> inputs;
  if (!config_path.empty()) {
    model = loss_model_from_config(read_text_file(config_path));
    inputs.push_back(config_path);
  }
  if (!(fmin_hz > 0.0) || !(fmin_hz < fmax_hz))
    throw DomainError("budget: need 0 < fmin < fmax");
  const std::vector<LossBudgetRow> rows = loss_budget_table(model, fmin_hz, fmax_hz, points);

  json out_json;
  out_json["table"] = budget_to_json(rows);
  std::string crossover_note;
  try {
    const double crossover = crossover_frequency_hz(model);
    out_json["crossover_hz"] = crossover;
    crossover_note = "piezo/TLS crossover at " + format_double(crossover / 1e9) + " GHz";
  } catch (const NoCrossoverError& e) {
    out_json["crossover_error"] = e.what();
    crossover_note = e.what();
  }
  const fs::path out(args.out_dir);
  write_text_file(out / "budget.csv", budget_csv(rows, header_for(args)));
  write_text_file(out / "budget.json", out_json.dump(2) + "\n");
  write_manifest(args, "budget", inputs);
  std::cout << crossover_note << "\n";
  return 0;
}

int cmd_reproduce(const GlobalArgs& args, const std::string& sample, double noise,
                  std::size_t trials, const std::string& fixtures_dir) {
  const SampleRecord record = load_sample(fixtures_dir, sample);
  std::cout << "sample " << record.name << ": " << record.mode_count() << " modes\n";

  const RecoveryReport first = run_recovery(record, noise, args.seed + 1);
  const RecoveryStats stats = recovery_stats(record, noise, trials, args.seed + 1);
  const bool pass = stats.median_rel_err <= 0.05 && stats.worst_rel_err <= 0.15 &&
                    stats.all_matched;

  // Side-by-side table for the first trial plus aggregate statistics.
  std::ostringstream table;
  table << header_for(args).render()
        << "mode,f_true_hz,g_true_hz,kappa_true_hz,f_fit_hz,g_fit_hz,kappa_fit_hz,"
           "g_rel_err,kappa_rel_err\n";
  for (std::size_t k = 0; k < first.modes.size(); ++k) {
    const auto& m = first.modes[k];
    table << (k + 1) << ',' << format_double(m.f_true_hz) << ',' << format_double(m.g_true_hz)
          << ',' << format_double(m.kappa_true_hz) << ',' << format_double(m.f_fit_hz) << ','
          << format_double(m.g_fit_hz) << ',' << format_double(m.kappa_fit_hz) << ','
          << format_double(m.g_rel_err) << ',' << format_double(m.kappa_rel_err) << "\n";
  }
  std::string key = sample;
  for (auto& c : key) c = static_cast<char>(std::tolower(c));
  const fs::path out(args.out_dir);
  write_text_file(out / ("reproduce_" + key + ".csv"), table.str());

  json report{{"sample", record.name},
              {"modes", record.mode_count()},
              {"trials", stats.trials},
              {"noise_sigma", noise},
              {"median_rel_err", stats.median_rel_err},
              {"worst_rel_err", stats.worst_rel_err},
              {"all_converged", stats.all_converged},
              {"all_matched", stats.all_matched},
              {"median_tolerance", 0.05},
              {"worst_tolerance", 0.15},
              {"pass", pass},
              {"detected_peaks_first_trial", first.detected_peaks}};
  write_text_file(out / ("reproduce_" + key + ".json"), report.dump(2) + "\n");
  write_manifest(args, "reproduce", {fixtures_dir});

  std::cout << "median rel err " << stats.median_rel_err << " (tol 0.05), worst "
            << stats.worst_rel_err << " (tol 0.15): " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalArgs g;
  for (int i = 0; i < argc; ++i) {
    if (i) g.command_line += ' ';
    g.command_line += argv[i];
  }

  CLI::App app{"interface-piezoelectricity loss modeling for superconducting qubits"};
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "random seed recorded in all outputs");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--format", g.format, "primary output format")
      ->check(CLI::IsMember({"csv", "json"}));

  // sweep
  auto* sweep = app.add_subcommand("sweep", "sweep BVD circuit admittance over frequency");
  std::string circuit_path;
  double fmin_hz = 3.0e9, fmax_hz = 3.4e9;
  std::size_t points = 1001;
  sweep->add_option("--circuit", circuit_path, "circuit JSON file")->required();
  sweep->add_option("--fmin-hz", fmin_hz, "sweep start (Hz)");
  sweep->add_option("--fmax-hz", fmax_hz, "sweep end (Hz)");
  sweep->add_option("--points", points, "number of grid points");

  // quantize
  auto* quantize = app.add_subcommand("quantize", "map a circuit to qubit-phonon couplings");
  double ec_hz = 68e6, ejmax_hz = 20e9, flux = 0.0, gamma1_0 = 0.0, gamma_phi = 0.0, cj_f = 0.0;
  quantize->add_option("--circuit", circuit_path, "circuit JSON file")->required();
  quantize->add_option("--ec-hz", ec_hz, "charging energy E_C/h (Hz)");
  quantize->add_option("--ejmax-hz", ejmax_hz, "maximum Josephson energy E_J,max/h (Hz)");
  quantize->add_option("--flux", flux, "flux bias in flux quanta");
  quantize->add_option("--gamma1-0-per-s", gamma1_0, "nominal qubit decay rate (1/s)");
  quantize->add_option("--gamma-phi-per-s", gamma_phi, "pure dephasing rate (1/s)");
  quantize->add_option("--cj-f", cj_f, "junction capacitance (F)");

  // decay
  auto* decay = app.add_subcommand("decay", "integrate a single-mode decay and fit its rate");
  DynamicsConfig cfg;
  double g_hz = 100e3, kappa_hz = 2.25e6, detuning_hz = 0.0;
  cfg.total_time_s = 20e-6;
  decay->add_option("--g-hz", g_hz, "coupling g/2pi (Hz)");
  decay->add_option("--kappa-hz", kappa_hz, "mode linewidth kappa/2pi (Hz)");
  decay->add_option("--detuning-hz", detuning_hz, "detuning (omega_m - omega_q)/2pi (Hz)");
  decay->add_option("--gamma1-0-per-s", cfg.nominal_decay_per_s, "nominal decay (1/s)");
  decay->add_option("--gamma-phi-per-s", cfg.pure_dephasing_per_s, "pure dephasing (1/s)");
  decay->add_option("--total-time-s", cfg.total_time_s, "integration time (s)");
  decay->add_option("--time-step-s", cfg.time_step_s, "step size (s), 0 = automatic");

  // pemap
  auto* pemap = app.add_subcommand("pemap", "synthetic p_e(f_q, V_bias) map");
  PemapArgs pe;
  pemap->add_option("--fq-min-hz", pe.fq_min_hz, "");
  pemap->add_option("--fq-max-hz", pe.fq_max_hz, "");
  pemap->add_option("--fq-points", pe.fq_points, "");
  pemap->add_option("--bias-min-v", pe.bias_min_v, "");
  pemap->add_option("--bias-max-v", pe.bias_max_v, "");
  pemap->add_option("--bias-points", pe.bias_points, "");
  pemap->add_option("--delay-s", pe.delay_s, "fixed delay tau_0 (s)");
  pemap->add_option("--shots", pe.shots, "shots per point, 0 = noise-free");
  pemap->add_option("--comb-center-hz", pe.comb_center_hz, "");
  pemap->add_option("--comb-fsr-hz", pe.comb_fsr_hz, "");
  pemap->add_option("--comb-modes", pe.comb_modes, "");
  pemap->add_option("--comb-g-hz", pe.comb_g_hz, "");
  pemap->add_option("--comb-kappa-hz", pe.comb_kappa_hz, "");
  pemap->add_option("--gamma1-0-per-s", pe.gamma1_0, "");
  pemap->add_option("--gamma-phi-per-s", pe.gamma_phi, "");
  pemap->add_option("--tls-json", pe.tls_path, "TLS ensemble JSON file");

  // fit
  auto* fitcmd = app.add_subcommand("fit", "fit a T1 spectrum to the rate model");
  std::string spectrum_path;
  double gamma2q = 0.0, t2star_s = 0.0, min_prominence = 0.05, merge_linewidths = 3.0;
  std::size_t smoothing = 1;
  bool weighted = false;
  fitcmd->add_option("--spectrum", spectrum_path, "CSV fq_hz,t1_s[,t1_err_s]")->required();
  fitcmd->add_option("--gamma2q-per-s", gamma2q, "qubit dephasing rate (1/s)");
  fitcmd->add_option("--t2star-s", t2star_s, "alternative: T2* (s), gamma2q = 1/T2*");
  fitcmd->add_option("--min-prominence", min_prominence, "peak detection threshold");
  fitcmd->add_option("--smoothing", smoothing, "detection smoothing window (points)");
  fitcmd->add_flag("--weighted", weighted, "use t1_err_s column as fit weights");
  fitcmd->add_option("--merge-linewidths", merge_linewidths, "seed merge radius");

  // budget
  auto* budget = app.add_subcommand("budget", "piezo vs TLS loss budget over frequency");
  std::string config_path;
  double bmin_hz = 1e9, bmax_hz = 30e9;
  std::size_t bpoints = 61;
  budget->add_option("--config", config_path, "key = value loss model configuration");
  budget->add_option("--fmin-hz", bmin_hz, "");
  budget->add_option("--fmax-hz", bmax_hz, "");
  budget->add_option("--points", bpoints, "");

  // reproduce
  auto* reproduce = app.add_subcommand("reproduce", "round-trip recovery on a bundled sample");
  std::string sample = "A", fixtures_dir;
  double noise = 0.05;
  std::size_t trials = 20;
  reproduce->add_option("--sample", sample, "A, B or C")
      ->check(CLI::IsMember({"A", "B", "C", "a", "b", "c"}));
  reproduce->add_option("--noise", noise, "multiplicative T1 noise sigma");
  reproduce->add_option("--trials", trials, "number of noise seeds");
  reproduce->add_option("--fixtures", fixtures_dir, "fixtures directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (fixtures_dir.empty()) {
    const char* env = std::getenv("PIEZOQ_FIXTURES");
    fixtures_dir = env ? env : "fixtures";
  }

  try {
    fs::create_directories(g.out_dir);
    if (sweep->parsed()) return cmd_sweep(g, circuit_path, fmin_hz, fmax_hz, points);
    if (quantize->parsed())
      return cmd_quantize(g, circuit_path, ec_hz, ejmax_hz, flux, gamma1_0, gamma_phi, cj_f);
    if (decay->parsed()) {
      cfg.coupling_rad = hz_to_rad(g_hz);
      cfg.mode_linewidth_per_s = hz_to_rad(kappa_hz);
      cfg.detuning_rad = hz_to_rad(detuning_hz);
      return cmd_decay(g, cfg);
    }
    if (pemap->parsed()) return cmd_pemap(g, pe);
    if (fitcmd->parsed())
      return cmd_fit(g, spectrum_path, gamma2q, t2star_s, min_prominence, smoothing, weighted,
                     merge_linewidths);
    if (budget->parsed()) return cmd_budget(g, config_path, bmin_hz, bmax_hz, bpoints);
    if (reproduce->parsed()) return cmd_reproduce(g, sample, noise, trials, fixtures_dir);
  } catch (const FitFailedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IntegrationDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

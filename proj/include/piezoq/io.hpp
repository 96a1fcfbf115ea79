#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "piezoq/circuit.hpp"
#include "piezoq/dynamics.hpp"
#include "piezoq/errors.hpp"
#include "piezoq/experiment_sim.hpp"
#include "piezoq/loss_budget.hpp"
#include "piezoq/quantization.hpp"
#include "piezoq/spectrum_fit.hpp"
#include "piezoq/units.hpp"
#include "piezoq/version.hpp"

namespace piezoq {

using nlohmann::json;

/// Comment header stamped on every output file. No timestamps here;
/// timestamps live only in the run manifest so reruns are byte-identical.
struct OutputHeader {
  std::string command_line;
  std::uint64_t seed = 0;

  std::string render() const {
    std::ostringstream os;
    os << "# piezoq " << version_string << "\n";
    if (!command_line.empty()) os << "# command: " << command_line << "\n";
    os << "# seed: " << seed << "\n";
    return os.str();
  }
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << content;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---- circuit ----

inline json circuit_to_json(const BvdCircuit& circuit) {
  json branches = json::array();
  for (const auto& b : circuit.branches()) {
    branches.push_back(
        {{"r_ohm", b.resistance_ohm}, {"l_h", b.inductance_h}, {"c_f", b.capacitance_f}});
  }
  return json{{"c_idt_f", circuit.static_capacitance_f()}, {"branches", branches}};
}

inline BvdCircuit circuit_from_json(const json& j) {
  std::vector<RlcBranch> branches;
  for (const auto& jb : j.at("branches")) {
    branches.emplace_back(jb.at("r_ohm").get<double>(), jb.at("l_h").get<double>(),
                          jb.at("c_f").get<double>());
  }
  return BvdCircuit(j.at("c_idt_f").get<double>(), std::move(branches));
}

inline std::string admittance_csv(std::span<const Admittance> sweep, const OutputHeader& header) {
  std::ostringstream os;
  os << header.render() << "freq_hz,G_S,B_S\n";
  for (const auto& y : sweep) {
    os << format_double(rad_to_hz(y.frequency_rad)) << ',' << format_double(y.conductance_s)
       << ',' << format_double(y.susceptance_s) << "\n";
  }
  return os.str();
}

inline json admittance_json(std::span<const Admittance> sweep) {
  json arr = json::array();
  for (const auto& y : sweep) {
    arr.push_back({{"freq_hz", rad_to_hz(y.frequency_rad)},
                   {"G_S", y.conductance_s},
                   {"B_S", y.susceptance_s}});
  }
  return arr;
}

// ---- coupling sets ----

inline json coupling_set_to_json(const CouplingSet& set) {
  json modes = json::array();
  for (const auto& m : set.modes) {
    modes.push_back({{"f_m_hz", rad_to_hz(m.mode_frequency_rad)},
                     {"g_hz", rad_to_hz(m.coupling_rad)},
                     {"kappa_hz", rad_to_hz(m.linewidth_per_s)},
                     {"K2", m.em_coupling_coefficient}});
  }
  return json{{"modes", modes}};
}

inline CouplingSet coupling_set_from_json(const json& j) {
  CouplingSet set;
  for (const auto& jm : j.at("modes")) {
    ModeCoupling m;
    m.mode_frequency_rad = hz_to_rad(jm.at("f_m_hz").get<double>());
    m.coupling_rad = hz_to_rad(jm.at("g_hz").get<double>());
    m.linewidth_per_s = hz_to_rad(jm.at("kappa_hz").get<double>());
    m.em_coupling_coefficient = jm.value("K2", 0.0);
    set.modes.push_back(m);
  }
  set.validate();
  return set;
}

// ---- dynamics ----

inline std::string trajectory_csv(const Trajectory& traj, const OutputHeader& header) {
  std::ostringstream os;
  os << header.render() << "t_s,rho22,rho33,rho11\n";
  for (std::size_t i = 0; i < traj.times_s.size(); ++i) {
    os << format_double(traj.times_s[i]) << ',' << format_double(traj.states[i].population(2))
       << ',' << format_double(traj.states[i].population(3)) << ','
       << format_double(traj.states[i].population(1)) << "\n";
  }
  return os.str();
}

inline std::string spectrum_csv(std::span<const double> fq_hz,
                                std::span<const double> gamma1_per_s,
                                const OutputHeader& header) {
  std::ostringstream os;
  os << header.render() << "fq_hz,gamma1_per_s,t1_s\n";
  for (std::size_t i = 0; i < fq_hz.size(); ++i) {
    os << format_double(fq_hz[i]) << ',' << format_double(gamma1_per_s[i]) << ','
       << format_double(1.0 / gamma1_per_s[i]) << "\n";
  }
  return os.str();
}

// ---- spectrum data and fit results ----

/// Parses `fq_hz,t1_s[,t1_err_s]` CSV. '#' lines and the header row are
/// skipped; malformed rows raise ParseError with the 1-based line number.
inline SpectrumData read_spectrum_csv(const std::string& content) {
  SpectrumData data;
  std::istringstream in(content);
  std::string line;
  long line_no = 0;
  bool saw_any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!saw_any && line.find("fq_hz") != std::string::npos) {
      saw_any = true;
      continue;
    }
    saw_any = true;
    std::vector<double> fields;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = line.find(',', pos);
      const std::string token =
          line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        fields.push_back(v);
      } catch (const std::exception&) {
        throw ParseError("malformed numeric field '" + token + "'", line_no);
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields.size() < 2 || fields.size() > 3)
      throw ParseError("expected 2 or 3 columns", line_no);
    data.qubit_frequency_hz.push_back(fields[0]);
    data.t1_s.push_back(fields[1]);
    if (fields.size() == 3) data.t1_uncertainty_s.push_back(fields[2]);
  }
  if (data.qubit_frequency_hz.empty()) throw ParseError("no data rows", line_no);
  if (!data.t1_uncertainty_s.empty() && data.t1_uncertainty_s.size() != data.size())
    throw ParseError("uncertainty column present only on some rows", line_no);
  data.validate();
  return data;
}

inline SpectrumData read_spectrum_csv_file(const std::filesystem::path& path) {
  return read_spectrum_csv(read_text_file(path));
}

inline json fit_result_to_json(const SpectrumFitResult& fit) {
  json modes = json::array();
  for (const auto& m : fit.modes) {
    modes.push_back({{"f_m_hz", m.f_m_hz},
                     {"g_hz", m.g_hz},
                     {"kappa_hz", m.kappa_hz},
                     {"g_stderr_hz", m.g_stderr_hz},
                     {"kappa_stderr_hz", m.kappa_stderr_hz}});
  }
  return json{{"background_t1_s", fit.background_t1_s},
              {"background_gamma1_per_s", fit.background_gamma1_per_s},
              {"modes", modes},
              {"residual_norm", fit.residual_norm},
              {"converged", fit.converged},
              {"iterations", fit.iterations}};
}

// ---- pe maps ----

inline std::string pe_map_csv(const PeMap& map, const OutputHeader& header) {
  std::ostringstream os;
  os << header.render() << "fq_hz,v_bias,pe\n";
  for (std::size_t i = 0; i < map.qubit_frequency_hz.size(); ++i) {
    for (std::size_t j = 0; j < map.bias_v.size(); ++j) {
      os << format_double(map.qubit_frequency_hz[i]) << ',' << format_double(map.bias_v[j])
         << ',' << format_double(map.at(i, j)) << "\n";
    }
  }
  return os.str();
}

inline json pe_plan_to_json(const ExperimentPlan& plan, std::uint64_t seed) {
  return json{{"n_frequencies", plan.qubit_frequency_grid_hz.size()},
              {"n_bias", plan.bias_grid_v.size()},
              {"fq_min_hz", plan.qubit_frequency_grid_hz.front()},
              {"fq_max_hz", plan.qubit_frequency_grid_hz.back()},
              {"bias_min_v", plan.bias_grid_v.front()},
              {"bias_max_v", plan.bias_grid_v.back()},
              {"delay_s", plan.delay_s},
              {"shots", plan.shots},
              {"seed", seed}};
}

inline std::string profile_csv(std::span<const double> fq_hz, std::span<const double> pe_avg,
                               const OutputHeader& header) {
  std::ostringstream os;
  os << header.render() << "fq_hz,pe_avg\n";
  for (std::size_t i = 0; i < fq_hz.size(); ++i) {
    os << format_double(fq_hz[i]) << ',' << format_double(pe_avg[i]) << "\n";
  }
  return os.str();
}

// ---- loss budgets ----

inline json budget_to_json(std::span<const LossBudgetRow> rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"fq_hz", r.fq_hz},
                   {"q_piezo", r.q_piezo},
                   {"q_tls", r.q_tls},
                   {"q_total", r.q_total}});
  }
  return arr;
}

inline std::string budget_csv(std::span<const LossBudgetRow> rows, const OutputHeader& header) {
  std::ostringstream os;
  os << header.render() << "fq_hz,q_piezo,q_tls,q_total\n";
  for (const auto& r : rows) {
    os << format_double(r.fq_hz) << ',' << format_double(r.q_piezo) << ','
       << format_double(r.q_tls) << ',' << format_double(r.q_total) << "\n";
  }
  return os.str();
}

/// Plain-text `key = value` configuration, '#' comments allowed.
inline LossModel loss_model_from_config(const std::string& content) {
  LossModel model;
  std::istringstream in(content);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ParseError("expected key = value", line_no);
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value_str = trim(line.substr(eq + 1));
    double value = 0.0;
    try {
      value = std::stod(value_str);
    } catch (const std::exception&) {
      throw ParseError("malformed value '" + value_str + "'", line_no);
    }
    if (key == "epr") model.epr = value;
    else if (key == "piezo_tan_delta_ref") model.piezo_tan_delta_ref = value;
    else if (key == "piezo_reference_frequency_hz") model.piezo_reference_frequency_hz = value;
    else if (key == "piezo_exponent") model.piezo_exponent = value;
    else if (key == "tls_tan_delta0") model.tls_tan_delta0 = value;
    else if (key == "tls_reference_frequency_hz") model.tls_reference_frequency_hz = value;
    else if (key == "tls_exponent") model.tls_exponent = value;
    else throw ParseError("unknown key '" + key + "'", line_no);
  }
  model.validate();
  return model;
}

}  // namespace piezoq

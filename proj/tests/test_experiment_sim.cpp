#include <catch2/catch_amalgamated.hpp>

#include "piezoq/experiment_sim.hpp"
#include "piezoq/rng.hpp"

using namespace piezoq;
using Catch::Approx;

namespace {

QubitParams test_qubit(double gamma1_0 = 1e5, double gamma_phi = 1e5) {
  QubitParams q;
  q.charging_energy_hz = 68e6;
  q.max_josephson_energy_hz = 20e9;
  q.shunt_capacitance_f = capacitance_from_charging_energy(68e6);
  q.nominal_decay_per_s = gamma1_0;
  q.pure_dephasing_per_s = gamma_phi;
  return q;
}

TlsDefect linear_tls(double f_center_hz, double slope_hz_per_v, double g_hz, double gamma_hz) {
  // Asymmetry-dominated defect: f_TLS(V) ~ eps0 + slope V, linear over the
  // bias range.
  TlsDefect d;
  d.tunneling_amplitude_hz = 20e6;
  d.asymmetry_at_zero_bias_hz = std::sqrt(f_center_hz * f_center_hz - 20e6 * 20e6);
  d.bias_sensitivity_hz_per_v = slope_hz_per_v;
  d.qubit_coupling_hz = g_hz;
  d.linewidth_hz = gamma_hz;
  return d;
}

}  // namespace

TEST_CASE("TLS frequency at the symmetric point equals the tunneling amplitude") {
  TlsDefect d;
  d.tunneling_amplitude_hz = 3.1e9;
  d.asymmetry_at_zero_bias_hz = 0.0;
  d.bias_sensitivity_hz_per_v = 50e6;
  d.qubit_coupling_hz = 1e5;
  d.linewidth_hz = 1e5;
  CHECK(tls_frequency_hz(d, 0.0) == Approx(3.1e9));
}

TEST_CASE("TLS frequency approaches the asymmetry asymptote") {
  TlsDefect d;
  d.tunneling_amplitude_hz = 1e8;
  d.asymmetry_at_zero_bias_hz = 0.0;
  d.bias_sensitivity_hz_per_v = 1e9;
  d.qubit_coupling_hz = 1e5;
  d.linewidth_hz = 1e5;
  for (double v : {1.5, 3.0, 10.0}) {
    const double eps = d.bias_sensitivity_hz_per_v * v;
    REQUIRE(eps / d.tunneling_amplitude_hz > 10.0);
    CHECK(tls_frequency_hz(d, v) == Approx(eps).epsilon(0.005));
  }
}

TEST_CASE("TLS hyperbola minimum sits at the bias cancelling the asymmetry") {
  TlsDefect d;
  d.tunneling_amplitude_hz = 3.1e9;
  d.asymmetry_at_zero_bias_hz = 40e6;
  d.bias_sensitivity_hz_per_v = 80e6;
  d.qubit_coupling_hz = 1e5;
  d.linewidth_hz = 1e5;
  double best_v = 0.0, best_f = 1e18;
  for (double v = -2.0; v <= 2.0; v += 1e-4) {
    const double f = tls_frequency_hz(d, v);
    if (f < best_f) {
      best_f = f;
      best_v = v;
    }
  }
  CHECK(best_v == Approx(-d.asymmetry_at_zero_bias_hz / d.bias_sensitivity_hz_per_v)
                      .margin(2e-4));
  CHECK(best_f == Approx(d.tunneling_amplitude_hz).epsilon(1e-9));
}

TEST_CASE("total rate with no channels is the background") {
  const QubitParams qubit = test_qubit(1.7e5, 0.0);
  CHECK(total_gamma1(3.2e9, 0.3, CouplingSet{}, {}, qubit) == Approx(1.7e5));
}

TEST_CASE("a TLS detuned by ten linewidths loses 99% of its contribution") {
  const QubitParams qubit = test_qubit(0.0, 1e5);
  const double fq = 3.2e9;
  TlsDefect d = linear_tls(fq, 2e6, 1e5, 0.2e6);  // on resonance at V = 0
  const double on = total_gamma1(fq, 0.0, CouplingSet{}, std::vector<TlsDefect>{d}, qubit);
  const double off = total_gamma1(fq, 1.0, CouplingSet{}, std::vector<TlsDefect>{d}, qubit);
  // V = 1 detunes by 2 MHz = 10 linewidths
  CHECK(off < 0.01 * on * 1.02);
}

TEST_CASE("SAW contribution does not depend on bias") {
  const QubitParams qubit = test_qubit();
  const CouplingSet comb =
      make_mode_comb(3.19e9, 12.8e6, 11, std::vector<double>{150e3}, std::vector<double>{2e6});
  for (double fq : {3.16e9, 3.19e9, 3.21e9}) {
    CHECK(total_gamma1(fq, 0.0, comb, {}, qubit) ==
          Approx(total_gamma1(fq, 1.0, comb, {}, qubit)).epsilon(1e-15));
  }
}

TEST_CASE("noise-free map with no decay channels is identically one") {
  ExperimentPlan plan;
  plan.qubit_frequency_grid_hz = {3.1e9, 3.2e9, 3.3e9};
  plan.bias_grid_v = {-1.0, 0.0, 1.0};
  plan.shots = 0;
  const QubitParams qubit = test_qubit(0.0, 0.0);
  const PeMap map = pe_map(plan, CouplingSet{}, {}, qubit, 1);
  for (double v : map.values) CHECK(v == Approx(1.0));
}

TEST_CASE("SAW dips are bias-independent columns, TLS dips are not") {
  ExperimentPlan plan;
  for (int i = 0; i < 161; ++i) plan.qubit_frequency_grid_hz.push_back(3.15e9 + i * 0.5e6);
  for (int j = 0; j < 41; ++j) plan.bias_grid_v.push_back(-1.0 + j * 0.05);
  plan.delay_s = 3e-6;
  plan.shots = 0;
  const QubitParams qubit = test_qubit(1e5, 1e5);
  const CouplingSet comb =
      make_mode_comb(3.19e9, 25e6, 3, std::vector<double>{150e3}, std::vector<double>{2e6});
  const std::vector<TlsDefect> tls{linear_tls(3.175e9, 30e6, 150e3, 0.2e6)};
  const PeMap map = pe_map(plan, comb, tls, qubit, 3);

  // column-wise variance over bias at the SAW dip vs at the TLS trace center
  auto column_variance = [&](double f_hz) {
    std::size_t i_best = 0;
    for (std::size_t i = 0; i < map.qubit_frequency_hz.size(); ++i) {
      if (std::abs(map.qubit_frequency_hz[i] - f_hz) <
          std::abs(map.qubit_frequency_hz[i_best] - f_hz))
        i_best = i;
    }
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < map.bias_v.size(); ++j) mean += map.at(i_best, j);
    mean /= static_cast<double>(map.bias_v.size());
    for (std::size_t j = 0; j < map.bias_v.size(); ++j) {
      const double d = map.at(i_best, j) - mean;
      var += d * d;
    }
    return var / static_cast<double>(map.bias_v.size());
  };
  // TLS sweeps [3.145, 3.205] GHz: its trace center varies strongly with
  // bias, while the SAW mode outside its reach stays flat up to far tails.
  const double var_tls = column_variance(3.175e9);
  const double var_saw = column_variance(3.22e9);
  CHECK(var_tls > 1e-6);
  CHECK(var_saw < 1e-4 * var_tls);

  // with no TLS, every column is identical exactly
  const PeMap tls_free = pe_map(plan, comb, {}, qubit, 3);
  for (std::size_t i = 0; i < tls_free.qubit_frequency_hz.size(); ++i) {
    for (std::size_t j = 1; j < tls_free.bias_v.size(); ++j) {
      CHECK(tls_free.at(i, j) == tls_free.at(i, 0));
    }
  }
}

TEST_CASE("a mode that doubles the rate halves the log population at fixed delay") {
  ExperimentPlan plan;
  plan.qubit_frequency_grid_hz = {3.19e9};
  plan.bias_grid_v = {0.0};
  plan.delay_s = 3e-6;
  plan.shots = 0;
  const double gamma0 = 1.0 / 6e-6;
  const QubitParams qubit = test_qubit(gamma0, 0.0);

  // one mode tuned so its on-resonance term equals the background
  const double gamma2 = qubit.qubit_dephasing_rate_per_s() + 0.5 * hz_to_rad(2e6);
  const double g = std::sqrt(0.5 * gamma0 * gamma2);
  CouplingSet set;
  set.modes.push_back({hz_to_rad(3.19e9), g, hz_to_rad(2e6), 0.0});

  const PeMap with_mode = pe_map(plan, set, {}, qubit, 1);
  const PeMap background = pe_map(plan, CouplingSet{}, {}, qubit, 1);
  CHECK(background.values[0] == Approx(std::exp(-gamma0 * plan.delay_s)).epsilon(1e-12));
  CHECK(with_mode.values[0] == Approx(std::exp(-2.0 * gamma0 * plan.delay_s)).epsilon(1e-12));
}

TEST_CASE("bias averaging of a bias-independent map returns any column") {
  ExperimentPlan plan;
  for (int i = 0; i < 31; ++i) plan.qubit_frequency_grid_hz.push_back(3.15e9 + i * 2e6);
  plan.bias_grid_v = {-1.0, 0.0, 1.0};
  plan.shots = 0;
  const QubitParams qubit = test_qubit();
  const CouplingSet comb =
      make_mode_comb(3.18e9, 20e6, 2, std::vector<double>{100e3}, std::vector<double>{1e6});
  const PeMap map = pe_map(plan, comb, {}, qubit, 5);
  const auto profile = bias_average(map);
  for (std::size_t i = 0; i < profile.size(); ++i) {
    CHECK(profile[i] == Approx(map.at(i, 0)).epsilon(1e-14));
  }
}

TEST_CASE("bias averaging rejects an empty map") {
  CHECK_THROWS_AS(bias_average(PeMap{}), DomainError);
}

TEST_CASE("averaged dip suppression scales like linewidth over half-excursion") {
  // One TLS swept linearly across +-W around resonance; the averaged dip is
  // (gamma/W) atan(W/gamma) of the on-resonance one -> within a factor of 2
  // of gamma/W.
  const double gamma_tls = 0.2e6;
  const double slope = 30e6;  // half-excursion W = 30 MHz = 150 linewidths
  const double fq = 3.2e9;
  const QubitParams qubit = test_qubit(1e5, 1e5);
  const TlsDefect d = linear_tls(fq, slope, 100e3, gamma_tls);

  double peak_rate = 0.0, mean_rate = 0.0;
  const int n_bias = 1201;
  for (int j = 0; j < n_bias; ++j) {
    const double v = -1.0 + 2.0 * j / (n_bias - 1.0);
    const double rate =
        total_gamma1(fq, v, CouplingSet{}, std::vector<TlsDefect>{d}, qubit) -
        qubit.nominal_decay_per_s;
    peak_rate = std::max(peak_rate, rate);
    mean_rate += rate;
  }
  mean_rate /= n_bias;
  const double suppression = mean_rate / peak_rate;
  const double predicted = gamma_tls / slope;  // gamma / half-excursion
  CHECK(suppression / predicted > 0.5);
  CHECK(suppression / predicted < 2.0);
}

TEST_CASE("identical seeds give bit-identical maps, point order independent") {
  ExperimentPlan plan;
  for (int i = 0; i < 21; ++i) plan.qubit_frequency_grid_hz.push_back(3.15e9 + i * 2e6);
  for (int j = 0; j < 7; ++j) plan.bias_grid_v.push_back(-1.0 + j / 3.0);
  plan.shots = 200;
  const QubitParams qubit = test_qubit();
  const CouplingSet comb =
      make_mode_comb(3.18e9, 20e6, 2, std::vector<double>{100e3}, std::vector<double>{1e6});
  const std::vector<TlsDefect> tls{linear_tls(3.17e9, 25e6, 120e3, 0.3e6)};

  const PeMap a = pe_map(plan, comb, tls, qubit, 42);
  const PeMap b = pe_map(plan, comb, tls, qubit, 42);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);

  const PeMap c = pe_map(plan, comb, tls, qubit, 43);
  bool any_different = false;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] != c.values[i]) any_different = true;
  }
  CHECK(any_different);
}

TEST_CASE("shot noise follows the binomial scale") {
  ExperimentPlan plan;
  plan.qubit_frequency_grid_hz = {3.2e9};
  for (int j = 0; j < 2000; ++j) plan.bias_grid_v.push_back(-1.0 + j * 1e-3);
  plan.shots = 400;
  const double gamma0 = 1e5;
  const QubitParams qubit = test_qubit(gamma0, 0.0);
  const PeMap map = pe_map(plan, CouplingSet{}, {}, qubit, 11);
  const double p = std::exp(-gamma0 * plan.delay_s);
  double mean = 0.0, var = 0.0;
  for (double v : map.values) mean += v;
  mean /= static_cast<double>(map.values.size());
  for (double v : map.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(map.values.size());
  CHECK(mean == Approx(p).margin(4.0 * std::sqrt(p * (1 - p) / 400.0 / 2000.0)));
  CHECK(var == Approx(p * (1 - p) / 400.0).epsilon(0.15));
}

TEST_CASE("mode comb constructor validates inputs") {
  CHECK_THROWS_AS(make_mode_comb(0.0, 1e6, 3, std::vector<double>{1e5},
                                 std::vector<double>{1e6}),
                  DomainError);
  CHECK_THROWS_AS(make_mode_comb(3e9, 1e6, 3, std::vector<double>{1e5, 2e5},
                                 std::vector<double>{1e6}),
                  DomainError);
  const CouplingSet comb = make_mode_comb(3.19e9, 12.8e6, 11, std::vector<double>{150e3},
                                          std::vector<double>{2e6});
  CHECK(comb.modes.size() == 11);
  // centered comb: mean of mode frequencies equals the center
  double mean = 0.0;
  for (const auto& m : comb.modes) mean += rad_to_hz(m.mode_frequency_rad);
  CHECK(mean / 11.0 == Approx(3.19e9).epsilon(1e-12));
}

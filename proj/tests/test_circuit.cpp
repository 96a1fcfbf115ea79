#include <catch2/catch_amalgamated.hpp>

#include "piezoq/circuit.hpp"
#include "piezoq/io.hpp"
#include "piezoq/rng.hpp"

using namespace piezoq;
using Catch::Approx;

namespace {

// Branch with given mode frequency and linewidth (Hz), motional capacitance
// fixed; R = kappa L, L = 1/(omega^2 C).
RlcBranch branch_from_mode(double f_m_hz, double kappa_hz, double c_f = 1e-15) {
  const double omega = hz_to_rad(f_m_hz);
  const double l = 1.0 / (omega * omega * c_f);
  return RlcBranch{hz_to_rad(kappa_hz) * l, l, c_f};
}

}  // namespace

TEST_CASE("series RLC at resonance has Y = 1/R") {
  const RlcBranch branch{1.0, 1.0, 1.0};
  const Admittance y = series_rlc_admittance(branch, 1.0);
  CHECK(y.conductance_s == Approx(1.0));
  CHECK(y.susceptance_s == Approx(0.0).margin(1e-15));
}

TEST_CASE("lossless branch off resonance is purely imaginary") {
  const RlcBranch branch{0.0, 1.0, 1.0};
  const Admittance y = series_rlc_admittance(branch, 0.999);
  CHECK(y.conductance_s == 0.0);
  CHECK(y.susceptance_s != 0.0);
}

TEST_CASE("lossless branch exactly at resonance is singular") {
  const RlcBranch branch{0.0, 1.0, 1.0};
  CHECK_THROWS_AS(series_rlc_admittance(branch, 1.0), SingularAdmittanceError);
}

TEST_CASE("non-positive frequency is a domain error") {
  const RlcBranch branch{1.0, 1.0, 1.0};
  CHECK_THROWS_AS(series_rlc_admittance(branch, 0.0), DomainError);
  CHECK_THROWS_AS(series_rlc_admittance(branch, -1.0), DomainError);
}

TEST_CASE("sample-A-mode-1-like branch has G(omega_m) = 1/R") {
  // f_m = 3.2 GHz, kappa/2pi = 2.25 MHz
  const RlcBranch branch = branch_from_mode(3.2e9, 2.25e6);
  CHECK(branch.linewidth_per_s() == Approx(hz_to_rad(2.25e6)).epsilon(1e-12));
  const Admittance y = series_rlc_admittance(branch, branch.mode_frequency_rad());
  CHECK(y.conductance_s == Approx(1.0 / branch.resistance_ohm).epsilon(1e-9));
}

TEST_CASE("branch validation rejects bad element values") {
  CHECK_THROWS_AS(RlcBranch(-1.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(RlcBranch(1.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(RlcBranch(1.0, 1.0, -2.0), DomainError);
}

TEST_CASE("empty BVD circuit is a pure capacitor") {
  const BvdCircuit circuit(100e-15, {});
  const double omega = hz_to_rad(3e9);
  const Admittance y = bvd_admittance(circuit, omega);
  CHECK(y.conductance_s == 0.0);
  CHECK(y.susceptance_s == Approx(omega * 100e-15));
}

TEST_CASE("far-detuned conductance obeys the Lorentzian tail bound") {
  const double kappa_hz = 2.25e6;
  const RlcBranch branch = branch_from_mode(3.2e9, kappa_hz);
  const BvdCircuit circuit(100e-15, {branch});
  const double omega_m = branch.mode_frequency_rad();
  const double g_peak = bvd_admittance(circuit, omega_m).conductance_s;
  const double kappa = hz_to_rad(kappa_hz);
  for (double n_widths : {10.0, 20.0, 50.0}) {
    for (double sign : {-1.0, 1.0}) {
      const double delta = sign * n_widths * kappa;
      const double g = bvd_admittance(circuit, omega_m + delta).conductance_s;
      CHECK(g <= g_peak * kappa * kappa / (4.0 * delta * delta) * 1.1);
    }
  }
}

TEST_CASE("parallel branches add conductances") {
  const RlcBranch a = branch_from_mode(3.18e9, 1.5e6);
  const RlcBranch b = branch_from_mode(3.22e9, 3.0e6);
  const BvdCircuit both(100e-15, {a, b});
  const double omega = hz_to_rad(3.2e9);
  const double g_a = series_rlc_admittance(a, omega).conductance_s;
  const double g_b = series_rlc_admittance(b, omega).conductance_s;
  const Admittance y = bvd_admittance(both, omega);
  CHECK(y.conductance_s == Approx(g_a + g_b).epsilon(1e-12));
}

TEST_CASE("additivity of motional parts across circuit splits") {
  SeedStream rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RlcBranch> set_a, set_b;
    const int n_a = 1 + static_cast<int>(rng.next_u64() % 3);
    const int n_b = 1 + static_cast<int>(rng.next_u64() % 3);
    double f = 2.8e9;
    for (int i = 0; i < n_a + n_b; ++i) {
      f += rng.uniform(5e6, 30e6);
      auto branch = branch_from_mode(f, rng.uniform(0.1e6, 5e6), rng.uniform(0.5e-15, 5e-15));
      (i < n_a ? set_a : set_b).push_back(branch);
    }
    std::vector<RlcBranch> all = set_a;
    all.insert(all.end(), set_b.begin(), set_b.end());
    const double c_idt = 85e-15;
    const BvdCircuit circuit_all(c_idt, all);
    const BvdCircuit circuit_a(c_idt, set_a);
    const double omega = hz_to_rad(rng.uniform(2.9e9, 3.5e9));
    const Admittance y_all = bvd_admittance(circuit_all, omega);
    Admittance y_sum = bvd_admittance(circuit_a, omega);
    for (const auto& branch : set_b) {
      const Admittance y_branch = series_rlc_admittance(branch, omega);
      y_sum.conductance_s += y_branch.conductance_s;
      y_sum.susceptance_s += y_branch.susceptance_s;
    }
    CHECK(y_all.conductance_s == Approx(y_sum.conductance_s).epsilon(1e-12));
    CHECK(y_all.susceptance_s == Approx(y_sum.susceptance_s).epsilon(1e-12));
  }
}

TEST_CASE("passivity: G >= 0 for random passive circuits") {
  SeedStream rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RlcBranch> branches;
    const int n = static_cast<int>(rng.next_u64() % 5);
    double f = 1e9;
    for (int i = 0; i < n; ++i) {
      f += rng.uniform(1e6, 1e9);
      branches.push_back(
          branch_from_mode(f, rng.uniform(1e3, 1e7), rng.uniform(1e-16, 1e-13)));
    }
    const BvdCircuit circuit(rng.uniform(1e-15, 1e-12), branches);
    const Admittance y = bvd_admittance(circuit, hz_to_rad(rng.uniform(0.5e9, 8e9)));
    CHECK(y.conductance_s >= -1e-15);
  }
}

TEST_CASE("sweep of a single point equals direct evaluation") {
  const BvdCircuit circuit(100e-15, {branch_from_mode(3.2e9, 2e6)});
  const double omega = hz_to_rad(3.19e9);
  const std::vector<double> grid{omega};
  const auto sweep = sweep_admittance(circuit, grid);
  REQUIRE(sweep.size() == 1);
  const Admittance direct = bvd_admittance(circuit, omega);
  CHECK(sweep[0].conductance_s == direct.conductance_s);
  CHECK(sweep[0].susceptance_s == direct.susceptance_s);
}

TEST_CASE("sweep validates grid ordering and positivity") {
  const BvdCircuit circuit(100e-15, {});
  const std::vector<double> reversed{2.0, 1.0};
  CHECK_THROWS_AS(sweep_admittance(circuit, reversed), DomainError);
  const std::vector<double> negative{-1.0, 1.0};
  CHECK_THROWS_AS(sweep_admittance(circuit, negative), DomainError);
  CHECK(sweep_admittance(circuit, std::vector<double>{}).empty());
}

TEST_CASE("an 11-mode sweep shows 11 conductance maxima") {
  std::vector<RlcBranch> branches;
  const double fsr = 6.4e6;
  std::vector<double> kappas{2.25e6, 1.61e6, 2.0e6, 4.03e6, 2.78e6, 1.67e6,
                             5.53e6, 0.45e6, 4.8e6, 2.37e6, 4.0e6};
  for (int k = 0; k < 11; ++k) {
    branches.push_back(branch_from_mode(3.19e9 + (k - 5) * fsr, kappas[k]));
  }
  const BvdCircuit circuit(100e-15, branches);
  std::vector<double> grid(10001);
  const double lo = hz_to_rad(3.15e9), hi = hz_to_rad(3.23e9);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / 10000.0;
  const auto sweep = sweep_admittance(circuit, grid);
  int maxima = 0;
  for (std::size_t i = 1; i + 1 < sweep.size(); ++i) {
    if (sweep[i].conductance_s > sweep[i - 1].conductance_s &&
        sweep[i].conductance_s > sweep[i + 1].conductance_s)
      ++maxima;
  }
  CHECK(maxima == 11);
}

TEST_CASE("isolated branch peak sits within one grid step of 1/sqrt(LC)") {
  const RlcBranch branch = branch_from_mode(3.2e9, 1e6);  // kappa/omega ~ 2e-4 < 1e-3
  const BvdCircuit circuit(100e-15, {branch});
  const double omega_m = branch.mode_frequency_rad();
  std::vector<double> grid(4001);
  const double lo = omega_m - hz_to_rad(5e6), hi = omega_m + hz_to_rad(5e6);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / 4000.0;
  const auto sweep = sweep_admittance(circuit, grid);
  std::size_t best = 0;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i].conductance_s > sweep[best].conductance_s) best = i;
  }
  CHECK(std::abs(grid[best] - omega_m) <= (grid[1] - grid[0]) * 1.000001);
}

TEST_CASE("sweep propagates branch singularities") {
  const RlcBranch lossless{0.0, 1.0, 1.0};
  const BvdCircuit circuit(100e-15, {lossless});
  const std::vector<double> grid{0.5, 1.0, 2.0};  // middle point is the resonance
  CHECK_THROWS_AS(sweep_admittance(circuit, grid), SingularAdmittanceError);
}

TEST_CASE("canonical branch ordering sorts by mode frequency") {
  const RlcBranch low = branch_from_mode(3.0e9, 1e6);
  const RlcBranch high = branch_from_mode(3.3e9, 1e6);
  const BvdCircuit circuit(100e-15, {high, low});
  CHECK(circuit.branches()[0].mode_frequency_rad() < circuit.branches()[1].mode_frequency_rad());
  CHECK_THROWS_AS(BvdCircuit(100e-15, {low, low}), DomainError);
}

TEST_CASE("circuit JSON round trip") {
  const BvdCircuit circuit(85e-15,
                           {branch_from_mode(3.1e9, 2e6), branch_from_mode(3.2e9, 0.5e6)});
  const BvdCircuit back = circuit_from_json(circuit_to_json(circuit));
  CHECK(back.static_capacitance_f() == circuit.static_capacitance_f());
  REQUIRE(back.branches().size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(back.branches()[i].resistance_ohm == circuit.branches()[i].resistance_ohm);
    CHECK(back.branches()[i].inductance_h == circuit.branches()[i].inductance_h);
    CHECK(back.branches()[i].capacitance_f == circuit.branches()[i].capacitance_f);
  }
}

TEST_CASE("admittance JSON array carries the sweep") {
  const BvdCircuit circuit(100e-15, {});
  std::vector<double> grid{hz_to_rad(3e9), hz_to_rad(3.1e9)};
  const auto sweep = sweep_admittance(circuit, grid);
  const json arr = admittance_json(sweep);
  REQUIRE(arr.size() == 2);
  CHECK(arr[0].at("freq_hz").get<double>() == Approx(3e9));
  CHECK(arr[0].at("G_S").get<double>() == 0.0);
  CHECK(arr[1].at("B_S").get<double>() == Approx(hz_to_rad(3.1e9) * 100e-15));
}

TEST_CASE("admittance CSV carries the header and the expected columns") {
  const BvdCircuit circuit(100e-15, {});
  std::vector<double> grid{hz_to_rad(3e9), hz_to_rad(3.1e9)};
  const auto sweep = sweep_admittance(circuit, grid);
  const std::string csv = admittance_csv(sweep, OutputHeader{"piezoq sweep", 7});
  CHECK(csv.find("# seed: 7") != std::string::npos);
  CHECK(csv.find("freq_hz,G_S,B_S") != std::string::npos);
  CHECK(csv.find("3000000000") != std::string::npos);
}

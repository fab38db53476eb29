#include <doctest.h>

#include <cmath>
#include <fstream>

#include "catapult/error.hpp"
#include "catapult/model.hpp"
#include "catapult/units.hpp"

using namespace catapult;
using units::khz;
using units::mhz;

TEST_CASE("Kerr coefficients from the junction") {
  const auto k = kerr_from_junction(mhz(20000.0), 0.05, 0.03, 0.35);
  CHECK(k.ab * k.ab == doctest::Approx(4.0 * k.aa * k.bb).epsilon(1e-12));
  CHECK(k.aa < 0.0);
  CHECK(k.ab < 0.0);
  const auto s = kerr_from_junction(mhz(20000.0), 0.1, 0.1, 0.3);
  CHECK(s.aa == doctest::Approx(s.bb));
  CHECK(s.aa == doctest::Approx(s.ab / 2.0));
  CHECK_THROWS_AS(kerr_from_junction(-1.0, 0.1, 0.1, 0.1), Error);
  CHECK_THROWS_AS(kerr_from_junction(1.0, 0.0, 0.1, 0.1), Error);
}

TEST_CASE("junction inversion reproduces the fitted terms") {
  const auto p = table_s1();
  const auto est = junction_from_kerr(p.chi.ac, p.chi.bc, p.chi.cc, mhz(20000.0));
  CHECK(est.predicted.ac == doctest::Approx(p.chi.ac).epsilon(1e-12));
  CHECK(est.predicted.cc == doctest::Approx(p.chi.cc).epsilon(1e-12));
  CHECK(est.predicted.bc == doctest::Approx(p.chi.bc).epsilon(1e-12));
  // chi_ac^2 / (4 chi_cc): same sign and order as the measured -22 kHz
  CHECK(est.predicted.aa == doctest::Approx(p.chi.ac * p.chi.ac / (4.0 * p.chi.cc)).epsilon(1e-12));
  CHECK(est.predicted.aa < 0.0);
  CHECK(units::to_khz(est.predicted.aa) == doctest::Approx(-25.4).epsilon(0.01));
  CHECK(units::to_khz(est.predicted.ab) == doctest::Approx(-17.3).epsilon(0.01));
  const auto other = junction_from_kerr(p.chi.ac, p.chi.bc, p.chi.cc, mhz(40000.0));
  CHECK(other.predicted.aa == doctest::Approx(est.predicted.aa).epsilon(1e-12));
}

TEST_CASE("displacement amplitude") {
  CHECK(std::abs(displacement_amplitude(0.0, mhz(30), 1e3).xi) == 0.0);
  const auto d = displacement_amplitude(mhz(30) * 0.5, mhz(30), table_s1().kappa_out);
  CHECK(std::abs(d.xi) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(d.approximation_ok);
  const auto d2 = displacement_amplitude(mhz(30), mhz(30), table_s1().kappa_out);
  CHECK(std::abs(d2.xi) == doctest::Approx(2.0 * std::abs(d.xi)));
  CHECK_THROWS_AS(displacement_amplitude(1.0, 0.0, 1.0), Error);
}

TEST_CASE("conversion strength") {
  const double chi_ab = khz(-13.0);
  const double amp = std::sqrt(khz(54.0) / std::abs(chi_ab));
  CHECK(units::to_khz(std::abs(conversion_strength(amp, amp, chi_ab))) == doctest::Approx(54.0));
  CHECK(std::abs(conversion_strength(0.0, amp, chi_ab)) == 0.0);
  const double theta = 0.7;
  const cplx g0 = conversion_strength(amp, amp, chi_ab);
  const cplx g1 = conversion_strength(amp, amp * std::polar(1.0, theta), chi_ab);
  CHECK(std::arg(g1 / g0) == doctest::Approx(theta));
}

TEST_CASE("Stark shifts") {
  const auto p = table_s1();
  const auto z = stark_shifts(0.0, 0.0, p.chi);
  CHECK(z.a == 0.0);
  CHECK(z.b == 0.0);
  CHECK(z.c == 0.0);
  CHECK(units::to_mhz(stark_shifts(1.0, 0.0, p.chi).c) == doctest::Approx(-3.825));
  const auto s1 = stark_shifts(0.3, 0.4, p.chi);
  const auto s2 = stark_shifts(0.6, 0.8, p.chi);
  CHECK(s2.a == doctest::Approx(4.0 * s1.a));
  CHECK(s2.b == doctest::Approx(4.0 * s1.b));
  CHECK(s2.c == doctest::Approx(4.0 * s1.c));
}

TEST_CASE("effective Hamiltonian") {
  const auto p = table_s1();
  const Space s{FockSpace(4, Mode::a), FockSpace(3, Mode::b)};
  const cplx g = khz(54.0) * std::polar(1.0, 0.4);
  const auto sched = DriveSchedule::from_coupling([g](double) { return g; }, khz(30.0), p);
  CHECK(std::abs(sched.g(0.0, p) - g) < 1e-9 * std::abs(g));
  for (double t : {0.0, 1e-6, 3.3e-6}) {
    const auto h = effective_hamiltonian(p, sched, t, s);
    CHECK(h.hermiticity_error() < 1e-12 * h.matrix.cwiseAbs().maxCoeff());
    const cplx elem = h.matrix(s.index({1, 0}), s.index({0, 1}));
    CHECK(std::abs(elem - std::conj(g) * std::exp(cplx(0.0, khz(30.0) * t))) < 1e-9 * std::abs(g));
  }
  const auto h0 = effective_hamiltonian(p, DriveSchedule::off(), 0.0, s);
  CMatrix kerr_only = CMatrix::Zero(12, 12);
  for (int na = 0; na < 4; ++na) {
    for (int nb = 0; nb < 3; ++nb) {
      const auto i = s.index({na, nb});
      kerr_only(i, i) = 0.5 * p.chi.aa * na * (na - 1) + 0.5 * p.chi.bb * nb * (nb - 1);
    }
  }
  CHECK((h0.matrix - kerr_only).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(effective_hamiltonian(p, sched, 0.0, Space{FockSpace(3, Mode::a)}), Error);
}

TEST_CASE("resonant detuning cancels the Stark difference") {
  const auto p = table_s1();
  const double g = khz(54.0);
  const auto sched = DriveSchedule::from_coupling([g](double) { return cplx(g); }, 0.0, p);
  const auto sh = sched.stark(0.0, p);
  CHECK(resonant_delta(sh) == doctest::Approx(sh.b - sh.a));
  CHECK(resonant_delta(sh) > 0.0);
}

TEST_CASE("Stark calibration") {
  const auto p = table_s1();
  std::vector<double> u;
  for (int i = 0; i < 9; ++i) u.push_back(0.1 * i);
  const auto exact = simulate_stark_calibration(p, u, 0.0, 2.0, 1);
  CHECK(exact.slope == doctest::Approx(p.chi.ac * 4.0).epsilon(1e-10));
  CHECK(exact.xi_per_unit == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(exact.shifts.front() == 0.0);
  CHECK_THROWS_AS(simulate_stark_calibration(p, {0.3, 0.3, 0.3, 0.3, 0.3}, 0.0, 1.0, 1), Error);
  CHECK_THROWS_AS(simulate_stark_calibration(p, {0.1, 0.2, 0.3}, 0.0, 1.0, 1), Error);

  const double sigma = 0.01 * std::abs(p.chi.ac * 4.0 * 0.64);
  int inside = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = simulate_stark_calibration(p, u, sigma, 2.0, 100 + trial);
    if (std::abs(c.slope - p.chi.ac * 4.0) < 3.0 * c.slope_error) ++inside;
  }
  CHECK(inside >= 950);
}

TEST_CASE("parameter file round trip") {
  const auto p = table_s1();
  const auto j = params_to_json(p);
  const auto q = params_from_json(j);
  CHECK(q.chi.ac == doctest::Approx(p.chi.ac));
  CHECK(q.kappa_out == doctest::Approx(p.kappa_out));
  CHECK(q.kappa_0 == doctest::Approx(p.kappa_0));
  CHECK(q.readout_fg == doctest::Approx(0.96));
  const auto partial = params_from_json(nlohmann::json{{"kappa_loss_frac", 0.015}});
  CHECK(partial.kappa_loss_frac == 0.015);
  CHECK(partial.chi.aa == p.chi.aa);
  CHECK_THROWS_AS(load_params("/nonexistent/params.json"), Error);
  CHECK_THROWS_AS(params_from_json(nlohmann::json{{"kerr_mhz", {{"chi_ab", "x"}}}}), Error);
}

#ifdef CATAPULT_DATA_DIR
TEST_CASE("bundled parameter file matches the built-in table") {
  const auto p = load_params(std::string(CATAPULT_DATA_DIR) + "/table_s1.json");
  const auto q = table_s1();
  CHECK(p.omega_a == doctest::Approx(q.omega_a));
  CHECK(p.omega_b == doctest::Approx(q.omega_b));
  CHECK(p.omega_c == doctest::Approx(q.omega_c));
  CHECK(p.chi.ab == doctest::Approx(q.chi.ab));
  CHECK(p.chi.ac == doctest::Approx(q.chi.ac));
  CHECK(p.chi.bc == doctest::Approx(q.chi.bc));
  CHECK(p.chi.aa == doctest::Approx(q.chi.aa));
  CHECK(p.chi.bb == doctest::Approx(q.chi.bb));
  CHECK(p.chi.cc == doctest::Approx(q.chi.cc));
  CHECK(p.kappa_0 == doctest::Approx(q.kappa_0));
  CHECK(p.kappa_out == doctest::Approx(q.kappa_out));
  CHECK(p.kappa_loss_frac == doctest::Approx(q.kappa_loss_frac));
  CHECK(p.readout_fe == doctest::Approx(q.readout_fe));
  CHECK(p.readout_fg == doctest::Approx(q.readout_fg));
}
#endif

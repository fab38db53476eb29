#include <doctest.h>

#include <cmath>
#include <sstream>

#include "catapult/dynamics.hpp"
#include "catapult/error.hpp"
#include "catapult/fit.hpp"
#include "catapult/units.hpp"

using namespace catapult;
using units::khz;
using units::us;

namespace {

const SystemParams P = table_s1();

QuantumState superposition01(const Space& s) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(s.dim()));
  v(s.index({0, 0})) = 1.0 / std::sqrt(2.0);
  v(s.index({1, 0})) = 1.0 / std::sqrt(2.0);
  return QuantumState::from_ket(s, v);
}

}  // namespace

TEST_CASE("pure damping of a coherent state") {
  const Space s{FockSpace(20, Mode::b)};
  const cplx beta(1.2, -0.5);
  const auto rho0 = make_state(state::Coherent{beta}, s.mode(0));
  TimeDependentHamiltonian h(s);
  EvolveOptions opt;
  opt.observables = {{"b", mode_operator(op::Annihilate{}, s, Mode::b)}};
  const auto times = linspace(0.0, us(1.0), 11);
  const auto sol = evolve_lindblad(rho0, h, {{mode_operator(op::Annihilate{}, s, Mode::b), P.kappa_out, {}}}, times, opt);
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const cplx exact = beta * std::exp(-P.kappa_out * times[i] / 2.0);
    worst = std::max(worst, std::abs(sol.observable("b")[i] - exact) / std::abs(exact));
  }
  CHECK(worst < 1e-6);
  CHECK(sol.max_trace_error < 1e-8);
}

TEST_CASE("analytic two-mode solution") {
  const double kout = P.kappa_out;
  const auto t0 = analytic_two_mode(0.7, khz(54.0), kout, 0.0, 0.0);
  CHECK(std::abs(t0.a - 0.7) < 1e-15);
  CHECK(std::abs(t0.b) < 1e-15);
  for (double t : {0.0, us(1.0), us(20.0)}) {
    const auto z = analytic_two_mode(1.0, 0.0, kout, khz(100.0), t);
    CHECK(std::abs(z.a - 1.0) < 1e-12);
    CHECK(std::abs(z.b) < 1e-15);
  }
  // weak coupling reduces to a0 e^{-2 g^2 t / kappa_out}
  const double g = khz(20.0);
  const double t = us(20.0);
  CHECK(analytic_two_mode(1.0, g, kout, 0.0, t).a.real() ==
        doctest::Approx(std::exp(-2.0 * g * g * t / kout)).epsilon(2e-2));
  // continuity through the branch switch and the critical point 4|g| = kappa_out
  const double gc = kout / 4.0;
  const auto below = analytic_two_mode(1.0, gc * (1 - 1e-7), kout, 0.0, us(0.3));
  const auto at = analytic_two_mode(1.0, gc, kout, 0.0, us(0.3));
  CHECK(std::abs(below.a - at.a) < 1e-6);
  CHECK(std::isfinite(std::abs(analytic_two_mode(1.0, khz(54.0), kout, 0.0, us(5000.0)).a)));
}

TEST_CASE("strong coupling deviates from the exponential approximation") {
  const double g = khz(207.0);
  const double k = induced_rate(g, P.kappa_out);
  double worst = 0.0;
  for (double t : linspace(0.0, us(1.0), 201)) {
    const double exact = std::abs(analytic_two_mode(1.0, g, P.kappa_out, 0.0, t).a);
    worst = std::max(worst, std::abs(exact - std::exp(-k * t / 2.0)));
  }
  CHECK(worst > 0.1);
}

TEST_CASE("Lindblad first moments equal the analytic two-mode solution") {
  const Space s{FockSpace(2, Mode::a), FockSpace(2, Mode::b)};
  const cplx g = khz(54.0) * std::polar(1.0, 0.3);
  for (double delta : {0.0, khz(150.0)}) {
    const auto sched = DriveSchedule::from_coupling([g](double) { return g; }, delta, P);
    HamiltonianOptions ho;
    ho.stark = false;
    ho.self_kerr = false;
    const auto h = conversion_hamiltonian(P, sched, s, ho);
    ConversionLosses losses;
    losses.kappa_0 = false;
    losses.kappa_loss = false;
    EvolveOptions opt;
    opt.observables = {{"a", mode_operator(op::Annihilate{}, s, Mode::a)},
                       {"b", mode_operator(op::Annihilate{}, s, Mode::b)}};
    const auto times = linspace(0.0, us(20.0), 41);
    const auto sol = evolve_lindblad(superposition01(s), h, conversion_collapses(P, sched, s, losses), times, opt);
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto ex = analytic_two_mode(0.5, g, P.kappa_out, delta, times[i]);
      worst = std::max({worst, std::abs(sol.observable("a")[i] - ex.a), std::abs(sol.observable("b")[i] - ex.b)});
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("photon bookkeeping without intrinsic loss") {
  const Space s{FockSpace(4, Mode::a), FockSpace(4, Mode::b)};
  const double g = khz(125.0);
  const auto sched = DriveSchedule::from_coupling([g](double) { return cplx(g); }, 0.0, P);
  HamiltonianOptions ho;
  ho.stark = false;
  ConversionLosses losses;
  losses.kappa_0 = false;
  losses.kappa_loss = false;
  EvolveOptions opt;
  opt.observables = {{"n_a", mode_operator(op::Number{}, s, Mode::a)}, {"n_b", mode_operator(op::Number{}, s, Mode::b)}};
  const auto times = linspace(0.0, us(4.0), 801);
  const auto rho0 = tensor(make_state(state::Fock{2}, s.mode(0)), make_state(state::Fock{0}, s.mode(1)));
  const auto sol = evolve_lindblad(rho0, conversion_hamiltonian(P, sched, s, ho),
                                   conversion_collapses(P, sched, s, losses), times, opt);
  double emitted = 0.0;
  double worst = 0.0;
  const auto& na = sol.observable("n_a");
  const auto& nb = sol.observable("n_b");
  for (std::size_t i = 1; i < times.size(); ++i) {
    emitted += 0.5 * (nb[i].real() + nb[i - 1].real()) * (times[i] - times[i - 1]) * P.kappa_out;
    worst = std::max(worst, std::abs(na[i].real() + nb[i].real() + emitted - 2.0) / 2.0);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("intrinsic decay only") {
  const Space s{FockSpace(3, Mode::a)};
  TimeDependentHamiltonian h(s);
  EvolveOptions opt;
  opt.observables = {{"n", mode_operator(op::Number{}, s, Mode::a)}};
  const auto times = linspace(0.0, us(900.0), 31);
  const auto sol = evolve_lindblad(make_state(state::Fock{1}, s.mode(0)), h,
                                   {{mode_operator(op::Annihilate{}, s, Mode::a), P.kappa_0, {}}}, times, opt);
  std::vector<double> y;
  for (const auto& v : sol.observable("n")) y.push_back(v.real());
  const auto f = fit::exponential_fit(times, y);
  CHECK(units::to_us(1.0 / f["rate"]) == doctest::Approx(450.0).epsilon(1e-6));
}

TEST_CASE("rate formulas") {
  const double g = khz(54.0);
  CHECK(units::to_us(1.0 / induced_rate(g, P.kappa_out)) == doctest::Approx(9.05).epsilon(2e-3));
  CHECK(induced_rate(0.0, P.kappa_out) == 0.0);
  CHECK(units::to_us(1.0 / induced_rate(khz(207.0), P.kappa_out)) == doctest::Approx(0.62).epsilon(1e-2));
  CHECK(detuned_rate(g, P.kappa_out, 0.0) == doctest::Approx(induced_rate(g, P.kappa_out)));
  CHECK(detuned_rate(g, P.kappa_out, P.kappa_out / 2.0) == doctest::Approx(0.5 * induced_rate(g, P.kappa_out)));

  std::vector<double> d, k;
  for (int i = -20; i <= 20; ++i) {
    d.push_back(P.kappa_out * 0.1 * i);
    k.push_back(detuned_rate(g, P.kappa_out, d.back()));
  }
  CHECK(fit::lorentzian_fit(d, k)["fwhm"] == doctest::Approx(P.kappa_out).epsilon(0.02));
}

TEST_CASE("binomial Fock decay") {
  const double kappa = 1.3e5;
  for (double t : {0.0, 1e-6, 7e-6, 40e-6}) {
    CHECK(fock_decay_populations(3, 3, kappa, t) == doctest::Approx(std::exp(-3.0 * kappa * t)));
    double sum = 0.0;
    for (int n = 0; n <= 5; ++n) sum += fock_decay_populations(5, n, kappa, t);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  CHECK(fock_decay_populations(2, 1, 1.0, std::log(2.0)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(fock_decay_populations(2, 3, 1.0, 0.0), Error);
}

TEST_CASE("binomial model equals single-mode amplitude damping") {
  const Space s{FockSpace(7, Mode::a)};
  const double kappa = 1e5;
  TimeDependentHamiltonian h(s);
  const auto times = linspace(0.0, us(30.0), 16);
  for (int m = 1; m <= 5; ++m) {
    const auto sol = evolve_lindblad(make_state(state::Fock{m}, s.mode(0)), h,
                                     {{mode_operator(op::Annihilate{}, s, Mode::a), kappa, {}}}, times);
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      for (int n = 0; n <= m; ++n) {
        worst = std::max(worst, std::abs(sol.states[i](n, n).real() - fock_decay_populations(m, n, kappa, times[i])));
      }
    }
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("Kerr-corrected ladder rates") {
  const double g = khz(54.0);
  const double k1 = detuned_rate(g, P.kappa_out, 0.0);
  CHECK(kerr_corrected_rate(5, g, P.kappa_out, 0.0) == doctest::Approx(5.0 * k1));
  CHECK(kerr_corrected_rate(1, g, P.kappa_out, P.chi.aa) == doctest::Approx(k1));
  const double k5 = kerr_corrected_rate(5, g, P.kappa_out, P.chi.aa);
  CHECK(std::abs(k5 / (5.0 * k1) - 1.0) <= 0.06);
  CHECK(k5 < 5.0 * k1);
}

TEST_CASE("Kerr time scales") {
  const auto t1 = kerr_times(1.0, P.chi.aa);
  CHECK(units::to_us(t1.collapse) == doctest::Approx(11.36).epsilon(1e-3));
  CHECK(units::to_us(t1.revival) == doctest::Approx(45.45).epsilon(1e-3));
  CHECK(kerr_times(4.0, P.chi.aa).collapse == doctest::Approx(t1.collapse / 2.0));
  CHECK_THROWS_AS(kerr_times(1.0, 0.0), Error);
}

TEST_CASE("solution CSV") {
  const Space s{FockSpace(3, Mode::a)};
  TimeDependentHamiltonian h(s);
  EvolveOptions opt;
  opt.observables = {{"a", mode_operator(op::Annihilate{}, s, Mode::a)}, {"n_a", mode_operator(op::Number{}, s, Mode::a)}};
  const auto sol = evolve_lindblad(make_state(state::Fock{1}, s.mode(0)), h, {}, linspace(0.0, 1e-6, 3), opt);
  std::ostringstream os;
  write_solution_csv(os, sol, {"seed=0"});
  CHECK(os.str().rfind("# seed=0\ntime_us,re_a,im_a,n_a\n0,", 0) == 0);
}

TEST_CASE("errors") {
  const Space s{FockSpace(3, Mode::a)};
  TimeDependentHamiltonian h(s);
  const auto rho = make_state(state::Fock{1}, s.mode(0));
  CHECK_THROWS_AS(evolve_lindblad(rho, h, {{mode_operator(op::Annihilate{}, s, Mode::a), -1.0, {}}}, {0.0, 1.0}), Error);
  const Space s2{FockSpace(4, Mode::a)};
  CHECK_THROWS_AS(evolve_lindblad(rho, TimeDependentHamiltonian(s2), {}, {0.0, 1.0}), Error);
  CHECK_THROWS_AS(evolve_lindblad(rho, h, {}, {1.0, 0.0}), Error);
}

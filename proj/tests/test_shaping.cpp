#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "catapult/dynamics.hpp"
#include "catapult/error.hpp"
#include "catapult/shaping.hpp"
#include "catapult/warn.hpp"

using namespace catapult;
using units::khz;

namespace {

const SystemParams P = table_s1();
const double DT = 1.0 / (25.0 * P.kappa_out);

TargetWaveform reference_gaussian() { return gaussian_target(0.5e-6, 2.0e-6, 0.9, 4.0e-6, DT); }

}  // namespace

TEST_CASE("named targets carry the requested photon number") {
  CHECK(reference_gaussian().photons() == doctest::Approx(0.9));
  CHECK(exponential_target(1e6, 0.2e-6, 0.5, 6e-6, DT).photons() == doctest::Approx(0.5));
  CHECK(flat_top_target(1e-6, 0.3e-6, 0.7, 3e-6, DT).photons() == doctest::Approx(0.7));
  std::istringstream csv("# comment\ntime_us,re,im\n0,0,0\n0.01,0.5,0\n0.02,0.25,0.1\n");
  const auto t = read_target_csv(csv);
  REQUIRE(t.times.size() == 3);
  CHECK(t.times[1] == doctest::Approx(1e-8));
  CHECK(t.envelope[1].real() == doctest::Approx(500.0));
  std::istringstream bad("0,0,0\n0.01,x,0\n");
  CHECK_THROWS_AS(read_target_csv(bad), Error);
}

TEST_CASE("zero target needs no coupling") {
  auto t = reference_gaussian();
  for (auto& e : t.envelope) e = 0.0;
  const auto s = invert_for_coupling(t, P.kappa_out, 1.0);
  for (const auto& g : s.g) CHECK(g == cplx(0.0));
  const auto fwd = forward_verify(s, 1.0);
  for (const auto& b : fwd.b_out) CHECK(std::abs(b) == 0.0);
  CHECK(fwd.residual_cavity == doctest::Approx(1.0));
}

TEST_CASE("inverting a natural release recovers its constant coupling") {
  const double g = khz(100);
  const auto times = linspace(0.0, 12e-6, static_cast<int>(12e-6 / DT) + 1);
  TargetWaveform t;
  t.times = times;
  for (double x : times) t.envelope.push_back(std::sqrt(P.kappa_out) * analytic_two_mode(1.0, g, P.kappa_out, 0.0, x).b);
  const auto s = invert_for_coupling(t, P.kappa_out, 1.0);
  double worst = 0.0;
  for (std::size_t i = 5; i + 5 < s.times.size() && s.times[i] < 8e-6; ++i) {
    worst = std::max(worst, std::abs(s.g[i] - cplx(g)) / g);
  }
  CHECK(worst < 0.01);
}

TEST_CASE("gaussian round trip") {
  const auto s = invert_for_coupling(reference_gaussian(), P.kappa_out, 1.0);
  CHECK(s.peak_g < ShapingOptions{}.max_coupling);
  CHECK(s.residual_cavity == doctest::Approx(0.1).epsilon(1e-3));
  CHECK(s.bandwidth_margin > 1.0 / ShapingOptions{}.bandwidth_fraction);
  CHECK(s.truncated_photons < 1e-6);
  const auto fwd = forward_verify(s, 1.0);
  CHECK(fwd.l2_error < 1e-2);
  CHECK(std::abs(fwd.photon_deficit) < 1e-3);
  CHECK(fwd.residual_cavity == doctest::Approx(0.1).epsilon(1e-2));
}

TEST_CASE("photon bookkeeping of the inversion") {
  const auto s = invert_for_coupling(reference_gaussian(), P.kappa_out, 1.0);
  double emitted = 0.0;
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    if (i > 0) emitted += 0.5 * (s.times[i] - s.times[i - 1]) * (std::norm(s.target[i]) + std::norm(s.target[i - 1]));
    CHECK(std::norm(s.a[i]) + std::norm(s.b[i]) + emitted == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("coupling is invariant under joint scaling of target and cavity") {
  auto t = reference_gaussian();
  const auto s1 = invert_for_coupling(t, P.kappa_out, 1.0);
  for (auto& e : t.envelope) e *= 0.3;
  const auto s2 = invert_for_coupling(t, P.kappa_out, 0.3);
  double worst = 0.0;
  for (std::size_t i = 0; i < s1.g.size(); ++i) worst = std::max(worst, std::abs(s1.g[i] - s2.g[i]));
  CHECK(worst / s1.peak_g < 1e-9);
}

TEST_CASE("infeasible targets report when they fail") {
  const auto t = gaussian_target(0.5e-6, 2.0e-6, 1.2, 4.0e-6, DT);
  try {
    invert_for_coupling(t, P.kappa_out, 1.0);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::infeasible);
    CHECK(std::string(e.what()).find("t = ") != std::string::npos);
  }
  ShapingOptions capped;
  capped.max_coupling = khz(50);
  CHECK_THROWS_AS(invert_for_coupling(reference_gaussian(), P.kappa_out, 1.0, capped), Error);
  CHECK_THROWS_AS(invert_for_coupling(gaussian_target(0.5e-6, 2e-6, 0.9, 4e-6, 5 * DT), P.kappa_out, 1.0), Error);
}

TEST_CASE("fast targets warn about bandwidth") {
  std::string seen;
  set_warning_handler([&](const std::string& m) { seen = m; });
  invert_for_coupling(gaussian_target(0.05e-6, 0.5e-6, 0.05, 1e-6, DT / 4), P.kappa_out, 1.0,
                      ShapingOptions{units::khz(50000)});
  set_warning_handler(nullptr);
  CHECK(seen.find("bandwidth") != std::string::npos);
}

TEST_CASE("Stark compensation") {
  auto s = invert_for_coupling(reference_gaussian(), P.kappa_out, 1.0);
  const auto ideal = forward_verify(s, 1.0);

  s.pumps = uncompensated_pumps(s, P);
  ForwardOptions stark;
  stark.stark = true;
  const auto raw = forward_verify(s, 1.0, stark);
  const double raw_error = envelope_distance(raw.b_out, ideal.b_out);

  s.pumps = compensate_stark(s, P);
  const auto comp = forward_verify(s, 1.0, stark);
  CHECK(envelope_distance(comp.b_out, ideal.b_out) < 1e-3);
  CHECK(raw_error > 10 * envelope_distance(comp.b_out, ideal.b_out));

  // chirp follows the quadratic pump dependence: shift ~ |xi|^2 ~ |g|
  const std::size_t mid = s.times.size() / 2;
  const double rate = (s.pumps.stark_b[mid] - s.pumps.stark_a[mid]) / std::abs(s.g[mid]);
  for (std::size_t i = 0; i < s.times.size(); i += 37) {
    CHECK(s.pumps.stark_b[i] - s.pumps.stark_a[i] == doctest::Approx(rate * std::abs(s.g[i])).epsilon(1e-9));
  }
  CHECK(s.pumps.chirp.front() == 0.0);
}

TEST_CASE("constant coupling gives a linear chirp") {
  ShapingSolution s;
  s.times = linspace(0.0, 1e-6, 11);
  s.g.assign(11, cplx(khz(100)));
  s.kappa_out = P.kappa_out;
  const auto e = compensate_stark(s, P);
  for (std::size_t i = 2; i < 11; ++i) {
    CHECK(e.chirp[i] - e.chirp[i - 1] == doctest::Approx(e.chirp[1] - e.chirp[0]));
  }
  s.g.assign(11, 0.0);
  const auto off = compensate_stark(s, P);
  for (double c : off.chirp) CHECK(c == 0.0);
}

TEST_CASE("Kerr barely matters at the one-photon level") {
  const auto s = invert_for_coupling(gaussian_target(0.5e-6, 2.0e-6, 0.5, 4.0e-6, DT), P.kappa_out, 1.0);
  const auto rho = make_state(state::FockSuperposition{1}, FockSpace(4, Mode::a));
  ForwardOptions lin;
  const auto a = forward_verify(s, rho, lin);
  ForwardOptions kerr;
  kerr.kerr = true;
  kerr.cutoff = 5;
  const auto b = forward_verify(s, rho, kerr);
  CHECK(std::abs(b.l2_error - a.l2_error) < 1e-2);
  CHECK(b.emitted == doctest::Approx(a.emitted).epsilon(1e-2));
}

TEST_CASE("shaping CSV") {
  const auto s = invert_for_coupling(reference_gaussian(), P.kappa_out, 1.0);
  std::ostringstream os;
  write_shaping_csv(os, s, {"seed=0"});
  CHECK(os.str().rfind("# seed=0\ntime_us,target_re,target_im,g_re_khz,g_im_khz,", 0) == 0);
}

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "catapult/error.hpp"
#include "catapult/hilbert.hpp"

using namespace catapult;

namespace {

QuantumState random_ket(const Space& s, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  CVector v(static_cast<Eigen::Index>(s.dim()));
  for (auto& x : v) x = cplx(n(rng), n(rng));
  v.normalize();
  return QuantumState::from_ket(s, v);
}

}  // namespace

TEST_CASE("annihilation operator matrix elements") {
  const CMatrix a = single_mode_matrix(op::Annihilate{}, 3);
  CHECK(a(0, 1).real() == doctest::Approx(1.0));
  CHECK(a(1, 2).real() == doctest::Approx(std::sqrt(2.0)));
  CHECK(std::abs(a(0, 0)) == 0.0);
  CHECK(std::abs(a(1, 0)) == 0.0);
  CHECK(std::abs(a(2, 1)) == 0.0);
}

TEST_CASE("parity eigenvalues and square") {
  const CMatrix p = single_mode_matrix(op::Parity{}, 6);
  CHECK(p(2, 2).real() == 1.0);
  CHECK(p(3, 3).real() == -1.0);
  CHECK((p * p - CMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("commutator is one away from the truncation boundary") {
  const int c = 12;
  const CMatrix a = single_mode_matrix(op::Annihilate{}, c);
  const CMatrix comm = a * a.adjoint() - a.adjoint() * a;
  CHECK((comm.topLeftCorner(c - 2, c - 2) - CMatrix::Identity(c - 2, c - 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("displacement inverse within 1e-9") {
  for (cplx alpha : {cplx(2.0, 0.0), cplx(0.3, -1.1), cplx(-1.2, 1.4)}) {
    const CMatrix d = displacement_matrix(alpha, 30) * displacement_matrix(-alpha, 30);
    CHECK((d - CMatrix::Identity(30, 30)).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(displacement_matrix(cplx(NAN, 0.0), 5), Error);
}

TEST_CASE("Laguerre displaced elements agree with matrix exponential on the interior") {
  const cplx beta(0.7, -0.4);
  const CMatrix exact = displaced_fock_elements(beta, 10, 10);
  const CMatrix expm = displacement_matrix(beta, 60).topLeftCorner(10, 10);
  CHECK((exact - expm).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mode operator embedding and errors") {
  const Space s{FockSpace(3, Mode::a), FockSpace(4, Mode::b)};
  const LinearOp nb = mode_operator(op::Number{}, s, Mode::b);
  CHECK(nb.matrix(s.index({1, 3}), s.index({1, 3})).real() == doctest::Approx(3.0));
  CHECK_THROWS_AS(mode_operator(op::Number{}, s, Mode::e), Error);
  CHECK_THROWS_AS(FockSpace(1, Mode::a), Error);
  CHECK_THROWS_AS((Space{FockSpace(3, Mode::a), FockSpace(3, Mode::a)}), Error);
  CHECK(mode_operator(op::Displacement{{0.5, 0.2}}, s, Mode::a).unitarity_error() < 1e-12);
}

TEST_CASE("cat states") {
  const FockSpace fa(15, Mode::a);
  const auto even = make_state(state::Cat{std::sqrt(2.0), +1}, fa);
  const auto odd = make_state(state::Cat{std::sqrt(2.0), -1}, fa);
  // |alpha|^2 tanh|alpha|^2 (even) and |alpha|^2 coth|alpha|^2 (odd); both near |alpha|^2 = 2
  CHECK(even.mean_photons(Mode::a) == doctest::Approx(2.0 * std::tanh(2.0)).epsilon(1e-6));
  CHECK(odd.mean_photons(Mode::a) == doctest::Approx(2.0 / std::tanh(2.0)).epsilon(1e-6));
  CHECK(even.mean_photons(Mode::a) == doctest::Approx(2.0).epsilon(0.04));
  CHECK(odd.mean_photons(Mode::a) == doctest::Approx(2.0).epsilon(0.04));

  const auto c1p = make_state(state::Cat{1.0, +1}, fa);
  const auto c1m = make_state(state::Cat{1.0, -1}, fa);
  CHECK(std::abs(c1p.ket().dot(c1m.ket())) < 1e-14);

  const CVector raw = coherent_amplitudes(1.0, 15) + coherent_amplitudes(-1.0, 15);
  CHECK(raw.norm() * cat_normalization(1.0, +1) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Fock superposition distribution") {
  const auto s = make_state(state::FockSuperposition{4}, FockSpace(8, Mode::a));
  const auto d = s.photon_distribution(Mode::a);
  CHECK(d[0] == doctest::Approx(0.5));
  CHECK(d[4] == doctest::Approx(0.5));
  CHECK(d[1] + d[2] + d[3] == 0.0);
}

TEST_CASE("leakage check rejects small cutoffs with a hint") {
  try {
    make_state(state::Coherent{1.0}, FockSpace(5, Mode::a));
    FAIL("expected leakage error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::leakage);
    CHECK(std::string(e.what()).find("cutoff >=") != std::string::npos);
  }
  CHECK_NOTHROW(make_state(state::Coherent{1.0}, FockSpace(12, Mode::a)));
  CHECK_THROWS_AS(make_state(state::Fock{3}, FockSpace(3, Mode::a)), Error);
}

TEST_CASE("tensor then partial trace") {
  const auto one = make_state(state::Fock{1}, FockSpace(3, Mode::a));
  const auto vac = make_state(state::Fock{0}, FockSpace(3, Mode::b_out));
  const auto red = partial_trace(tensor(one, vac), {Mode::a});
  CHECK(red.density()(1, 1).real() == doctest::Approx(1.0));
  CHECK(red.density().cwiseAbs().sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(partial_trace(tensor(one, vac), {}), Error);
  CHECK_THROWS_AS(tensor(one, one), Error);
}

TEST_CASE("Bell state reduces to a maximally mixed qubit") {
  const Space s{FockSpace(2, Mode::a), FockSpace(2, Mode::b_out)};
  CVector v = CVector::Zero(4);
  v(s.index({1, 0})) = 1.0 / std::sqrt(2.0);
  v(s.index({0, 1})) = 1.0 / std::sqrt(2.0);
  const auto bell = QuantumState::from_ket(s, v);
  for (Mode m : {Mode::a, Mode::b_out}) {
    const CMatrix r = partial_trace(bell, {m}).density();
    CHECK((r - 0.5 * CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("random product states round trip through partial trace") {
  std::mt19937_64 rng(2024);
  const Space sa{FockSpace(4, Mode::a)};
  const Space sb{FockSpace(3, Mode::b_out)};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s1 = random_ket(sa, rng);
    const auto s2 = random_ket(sb, rng).to_density();
    const auto joint = tensor(s1, s2);
    worst = std::max(worst, (partial_trace(joint, {Mode::a}).density() - s1.density()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (partial_trace(joint, {Mode::b_out}).density() - s2.density()).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("fidelity") {
  const FockSpace fa(15, Mode::a);
  const auto p = make_state(state::Coherent{1.0}, fa);
  const auto m = make_state(state::Coherent{-1.0}, fa);
  CHECK(fidelity(p, p) == doctest::Approx(1.0));
  CHECK(fidelity(p, m) == doctest::Approx(std::exp(-4.0)).epsilon(1e-6));
  CHECK(fidelity(p.to_density(), m.to_density()) == doctest::Approx(std::exp(-4.0)).epsilon(1e-5));
  CHECK(fidelity(make_state(state::Fock{1}, fa), make_state(state::Fock{2}, fa)) == 0.0);
  CHECK_THROWS_AS(fidelity(p, make_state(state::Fock{1}, FockSpace(5, Mode::a))), Error);
}

TEST_CASE("density validation") {
  const Space s{FockSpace(2, Mode::a)};
  CMatrix bad(2, 2);
  bad << 1.2, 0.0, 0.0, -0.2;
  CHECK_THROWS_AS(QuantumState::from_density(s, bad), Error);
  CVector v(2);
  v << 1.0, 1.0;
  CHECK_THROWS_AS(QuantumState::from_ket(s, v), Error);
}

TEST_CASE("Husimi Q of vacuum and coherent states") {
  const auto vac = make_state(state::Fock{0}, FockSpace(10, Mode::a));
  const auto q = husimi_q(vac);
  CHECK(q.values(40, 40) == doctest::Approx(1.0 / std::numbers::pi));
  CHECK(q.values.maxCoeff() == doctest::Approx(1.0 / std::numbers::pi));
  CHECK(q.integral == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_FALSE(q.truncated);
  CHECK(q.values.minCoeff() >= -1e-12);

  const auto coh = make_state(state::Coherent{1.0}, FockSpace(15, Mode::a));
  const auto qc = husimi_q(coh);
  Eigen::Index r, c;
  qc.values.maxCoeff(&r, &c);
  CHECK(qc.grid.re_at(static_cast<int>(c)) == doctest::Approx(1.0));
  CHECK(qc.grid.im_at(static_cast<int>(r)) == doctest::Approx(0.0));

  const auto tiny = husimi_q(coh, PhaseGrid::square(0.5, 11));
  CHECK(tiny.truncated);
}

TEST_CASE("Wigner function") {
  const FockSpace fa(15, Mode::a);
  const auto odd = make_state(state::Cat{std::sqrt(2.0), -1}, fa);
  // W(0) = (2/pi) <P>, and an odd cat has parity -1
  CHECK(wigner_at(odd.density(), 0.0) == doctest::Approx(-2.0 / std::numbers::pi).epsilon(1e-9));
  const auto vac = make_state(state::Fock{0}, fa);
  CHECK(wigner_at(vac.density(), cplx(0.5, -0.3)) ==
        doctest::Approx(2.0 / std::numbers::pi * std::exp(-2.0 * 0.34)).epsilon(1e-9));
  const auto w = wigner(make_state(state::Fock{1}, fa));
  CHECK(w.integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("field CSV layout") {
  const auto vac = make_state(state::Fock{0}, FockSpace(4, Mode::a));
  std::ostringstream os;
  write_field_csv(os, husimi_q(vac, PhaseGrid::square(1.0, 3)), {"seed=1"});
  const std::string text = os.str();
  CHECK(text.rfind("# seed=1\nre,im,value\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 11);
}

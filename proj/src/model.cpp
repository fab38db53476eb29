#include "catapult/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "catapult/error.hpp"
#include "catapult/fit.hpp"
#include "catapult/units.hpp"
#include "catapult/warn.hpp"

namespace catapult {

using units::mhz;
using units::per_us;

void SystemParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::invalid_argument, std::string(name) + " must be positive and finite");
    }
  };
  positive(kappa_out, "kappa_out");
  if (kappa_0 < 0.0) throw Error(ErrorCode::invalid_argument, "kappa_0 must be non-negative");
  if (kappa_loss_frac < 0.0) throw Error(ErrorCode::invalid_argument, "kappa_loss_frac must be non-negative");
  for (double f : {readout_fe, readout_fg}) {
    if (f < 0.0 || f > 1.0) throw Error(ErrorCode::invalid_argument, "readout fidelities must lie in [0, 1]");
  }
  if (kappa_0 > 0.0 && kappa_out / kappa_0 < 100.0) warn("kappa_out/kappa_0 below 100");
}

SystemParams table_s1() {
  SystemParams p;
  p.omega_b = mhz(9.999e3);
  p.omega_a = mhz(4.073e3);
  p.omega_c = mhz(6.674e3);
  p.chi.ab = mhz(-0.013);
  p.chi.ac = mhz(-3.825);
  p.chi.bc = mhz(-1.3);
  p.chi.aa = mhz(-0.022);
  p.chi.bb = mhz(-0.001);
  p.chi.cc = mhz(-144.0);
  p.kappa_0 = per_us(450.0);
  p.kappa_out = per_us(0.24);
  p.kappa_loss_frac = 0.01;
  p.readout_fe = 0.99;
  p.readout_fg = 0.96;
  p.t1 = units::us(50.0);
  p.t2_ramsey = units::us(25.0);
  p.t2_echo = units::us(35.0);
  return p;
}

namespace {

void read_mhz(const nlohmann::json& j, const char* key, double& out) {
  if (j.contains(key)) out = mhz(j.at(key).get<double>());
}
void read_lifetime(const nlohmann::json& j, const char* key, double& rate) {
  if (j.contains(key)) rate = per_us(j.at(key).get<double>());
}
void read_time(const nlohmann::json& j, const char* key, double& t) {
  if (j.contains(key)) t = units::us(j.at(key).get<double>());
}

}  // namespace

SystemParams params_from_json(const nlohmann::json& j, const SystemParams& base) {
  SystemParams p = base;
  try {
    if (j.contains("frequencies_mhz")) {
      const auto& f = j.at("frequencies_mhz");
      read_mhz(f, "omega_a", p.omega_a);
      read_mhz(f, "omega_b", p.omega_b);
      read_mhz(f, "omega_c", p.omega_c);
    }
    if (j.contains("kerr_mhz")) {
      const auto& k = j.at("kerr_mhz");
      read_mhz(k, "chi_ab", p.chi.ab);
      read_mhz(k, "chi_ac", p.chi.ac);
      read_mhz(k, "chi_bc", p.chi.bc);
      read_mhz(k, "chi_aa", p.chi.aa);
      read_mhz(k, "chi_bb", p.chi.bb);
      read_mhz(k, "chi_cc", p.chi.cc);
    }
    if (j.contains("lifetimes_us")) {
      const auto& l = j.at("lifetimes_us");
      read_lifetime(l, "kappa_0", p.kappa_0);
      read_lifetime(l, "kappa_out", p.kappa_out);
      read_time(l, "t1", p.t1);
      read_time(l, "t2_ramsey", p.t2_ramsey);
      read_time(l, "t2_echo", p.t2_echo);
    }
    if (j.contains("kappa_loss_frac")) p.kappa_loss_frac = j.at("kappa_loss_frac").get<double>();
    if (j.contains("readout")) {
      const auto& r = j.at("readout");
      if (r.contains("f_e")) p.readout_fe = r.at("f_e").get<double>();
      if (r.contains("f_g")) p.readout_fg = r.at("f_g").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, std::string("malformed parameter file: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::json params_to_json(const SystemParams& p) {
  using units::to_mhz;
  auto lifetime = [](double rate) { return rate > 0.0 ? units::to_us(1.0 / rate) : 0.0; };
  return {
      {"frequencies_mhz", {{"omega_a", to_mhz(p.omega_a)}, {"omega_b", to_mhz(p.omega_b)}, {"omega_c", to_mhz(p.omega_c)}}},
      {"kerr_mhz",
       {{"chi_ab", to_mhz(p.chi.ab)},
        {"chi_ac", to_mhz(p.chi.ac)},
        {"chi_bc", to_mhz(p.chi.bc)},
        {"chi_aa", to_mhz(p.chi.aa)},
        {"chi_bb", to_mhz(p.chi.bb)},
        {"chi_cc", to_mhz(p.chi.cc)}}},
      {"lifetimes_us",
       {{"kappa_0", lifetime(p.kappa_0)},
        {"kappa_out", lifetime(p.kappa_out)},
        {"t1", units::to_us(p.t1)},
        {"t2_ramsey", units::to_us(p.t2_ramsey)},
        {"t2_echo", units::to_us(p.t2_echo)}}},
      {"kappa_loss_frac", p.kappa_loss_frac},
      {"readout", {{"f_e", p.readout_fe}, {"f_g", p.readout_fg}}},
  };
}

SystemParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open parameter file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, "cannot parse '" + path + "': " + e.what());
  }
  return params_from_json(j, table_s1());
}

KerrMatrix kerr_from_junction(double e_j, double phi_a, double phi_b, double phi_c) {
  if (!(e_j > 0.0)) throw Error(ErrorCode::invalid_argument, "E_J must be positive");
  for (double phi : {phi_a, phi_b, phi_c}) {
    if (!(phi > 0.0 && phi < 1.0)) throw Error(ErrorCode::invalid_argument, "participations must lie in (0, 1)");
  }
  auto p2 = [](double x) { return x * x; };
  KerrMatrix k;
  k.ab = -e_j * p2(phi_a) * p2(phi_b);
  k.ac = -e_j * p2(phi_a) * p2(phi_c);
  k.bc = -e_j * p2(phi_b) * p2(phi_c);
  k.aa = -e_j * p2(p2(phi_a)) / 2.0;
  k.bb = -e_j * p2(p2(phi_b)) / 2.0;
  k.cc = -e_j * p2(p2(phi_c)) / 2.0;
  return k;
}

JunctionEstimate junction_from_kerr(double chi_ac, double chi_bc, double chi_cc, double e_j) {
  if (!(chi_ac < 0.0 && chi_bc < 0.0 && chi_cc < 0.0)) {
    throw Error(ErrorCode::invalid_argument, "junction inversion needs negative Kerr coefficients");
  }
  if (!(e_j > 0.0)) throw Error(ErrorCode::invalid_argument, "E_J must be positive");
  JunctionEstimate out;
  out.e_j = e_j;
  const double phi_c2 = std::sqrt(2.0 * std::abs(chi_cc) / e_j);
  out.phi_c = std::sqrt(phi_c2);
  out.phi_a = std::sqrt(std::abs(chi_ac) / (e_j * phi_c2));
  out.phi_b = std::sqrt(std::abs(chi_bc) / (e_j * phi_c2));
  out.predicted = kerr_from_junction(e_j, out.phi_a, out.phi_b, out.phi_c);
  return out;
}

Displacement displacement_amplitude(cplx epsilon, double detuning, double kappa_mode) {
  if (detuning == 0.0) throw Error(ErrorCode::invalid_argument, "pump detuning must be non-zero");
  Displacement d;
  d.xi = epsilon / cplx(detuning, kappa_mode / 4.0);
  d.approximation_ok = std::abs(kappa_mode / (4.0 * detuning)) < 0.01;
  return d;
}

cplx conversion_strength(cplx xi1, cplx xi2, double chi_ab) { return chi_ab * std::conj(xi1) * xi2; }

StarkShifts stark_shifts(cplx xi1, cplx xi2, const KerrMatrix& chi) {
  const double n1 = std::norm(xi1);
  const double n2 = std::norm(xi2);
  return {2.0 * chi.aa * n1 + chi.ab * n2, 2.0 * chi.bb * n2 + chi.ab * n1, chi.ac * n1 + chi.bc * n2};
}

cplx DriveSchedule::g(double t, const SystemParams& p) const { return conversion_strength(xi1(t), xi2(t), p.chi.ab); }

StarkShifts DriveSchedule::stark(double t, const SystemParams& p) const { return stark_shifts(xi1(t), xi2(t), p.chi); }

DriveSchedule DriveSchedule::from_pumps(const PumpTone& pump1, const PumpTone& pump2, double delta,
                                        const SystemParams& p) {
  auto kappa_of = [&p](Mode m) { return m == Mode::b ? p.kappa_out : p.kappa_0; };
  for (const PumpTone* pump : {&pump1, &pump2}) {
    if (std::abs(pump->detuning) < 10.0 * kappa_of(pump->target)) {
      warn("pump detuning below 10 kappa of the driven mode; displaced-frame approximation is marginal");
    }
    if (pump->detuning == 0.0) throw Error(ErrorCode::invalid_argument, "pump detuning must be non-zero");
  }
  DriveSchedule s;
  s.delta = delta;
  s.xi1 = [pump1, k = kappa_of(pump1.target)](double t) {
    return displacement_amplitude(pump1.epsilon(t), pump1.detuning, k).xi;
  };
  s.xi2 = [pump2, k = kappa_of(pump2.target)](double t) {
    return displacement_amplitude(pump2.epsilon(t), pump2.detuning, k).xi;
  };
  return s;
}

DriveSchedule DriveSchedule::from_coupling(std::function<cplx(double)> g, double delta, const SystemParams& p) {
  if (p.chi.ab == 0.0) throw Error(ErrorCode::invalid_argument, "chi_ab = 0 cannot mediate conversion");
  const double chi_ab = p.chi.ab;
  DriveSchedule s;
  s.delta = delta;
  s.xi1 = [g, chi_ab](double t) { return cplx(std::sqrt(std::abs(g(t)) / std::abs(chi_ab))); };
  s.xi2 = [g, chi_ab](double t) {
    const cplx gt = g(t);
    const double amp = std::sqrt(std::abs(gt) / std::abs(chi_ab));
    return amp == 0.0 ? cplx(0.0) : gt / (chi_ab * amp);
  };
  return s;
}

DriveSchedule DriveSchedule::off() {
  DriveSchedule s;
  s.xi1 = [](double) { return cplx(0.0); };
  s.xi2 = [](double) { return cplx(0.0); };
  return s;
}

double resonant_delta(const StarkShifts& s) { return s.b - s.a; }

TimeDependentHamiltonian conversion_hamiltonian(const SystemParams& p, const DriveSchedule& schedule,
                                                const Space& space, const HamiltonianOptions& opt) {
  if (!space.contains(Mode::a) || !space.contains(Mode::b)) {
    throw Error(ErrorCode::dimension_mismatch, "conversion Hamiltonian needs modes a and b");
  }
  TimeDependentHamiltonian h(space);
  const CMatrix a = mode_operator(op::Annihilate{}, space, Mode::a).matrix;
  const CMatrix b = mode_operator(op::Annihilate{}, space, Mode::b).matrix;
  const CMatrix na = a.adjoint() * a;
  const CMatrix nb = b.adjoint() * b;

  if (opt.self_kerr) {
    const CMatrix ad2a2 = a.adjoint() * a.adjoint() * a * a;
    const CMatrix bd2b2 = b.adjoint() * b.adjoint() * b * b;
    h.h0 = to_sparse(0.5 * p.chi.aa * ad2a2 + 0.5 * p.chi.bb * bd2b2);
  }
  if (opt.stark) {
    h.terms.push_back({to_sparse(na), [schedule, p](double t) { return cplx(schedule.stark(t, p).a); }, false});
    h.terms.push_back({to_sparse(nb), [schedule, p](double t) { return cplx(schedule.stark(t, p).b); }, false});
  }
  const double delta = schedule.delta;
  h.terms.push_back({to_sparse(b.adjoint() * a), [schedule, p, delta](double t) {
                       return schedule.g(t, p) * std::exp(cplx(0.0, -delta * t));
                     },
                     true});
  return h;
}

LinearOp effective_hamiltonian(const SystemParams& p, const DriveSchedule& schedule, double t, const Space& space,
                               const HamiltonianOptions& opt) {
  return conversion_hamiltonian(p, schedule, space, opt).dense_at(t);
}

StarkCalibration simulate_stark_calibration(const SystemParams& p, const std::vector<double>& amplitudes,
                                            double noise_sigma, double true_xi_per_unit, std::uint64_t seed) {
  if (amplitudes.size() < 5) throw Error(ErrorCode::invalid_argument, "Stark calibration needs at least 5 points");
  if (std::all_of(amplitudes.begin(), amplitudes.end(), [&](double u) { return u == amplitudes.front(); })) {
    throw Error(ErrorCode::invalid_argument, "Stark calibration sweep is degenerate (all amplitudes equal)");
  }
  if (noise_sigma < 0.0) throw Error(ErrorCode::invalid_argument, "noise sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  StarkCalibration out;
  out.amplitudes = amplitudes;
  std::vector<double> x;
  for (double u : amplitudes) {
    const cplx xi = true_xi_per_unit * u;
    double shift = stark_shifts(xi, 0.0, p.chi).c;
    if (noise_sigma > 0.0) shift += noise_sigma * noise(rng);
    out.shifts.push_back(shift);
    x.push_back(u * u);
  }
  const auto f = fit::linear_fit(x, out.shifts);
  out.slope = f["slope"];
  out.slope_error = f.error("slope");
  out.intercept = f["intercept"];
  const double ratio = out.slope / p.chi.ac;
  out.xi_per_unit = std::sqrt(std::max(ratio, 0.0));
  out.xi_per_unit_error = out.xi_per_unit > 0.0 ? 0.5 * out.slope_error / std::abs(p.chi.ac) / out.xi_per_unit : 0.0;
  return out;
}

}  // namespace catapult

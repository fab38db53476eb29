#include "catapult/release.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "catapult/detection.hpp"
#include "catapult/dynamics.hpp"
#include "catapult/error.hpp"
#include "catapult/ode.hpp"
#include "catapult/units.hpp"
#include "catapult/warn.hpp"

namespace catapult {

double mixing_angle(double kappa, double duration) {
  if (!(kappa >= 0.0) || !(duration >= 0.0)) throw Error(ErrorCode::invalid_argument, "kappa and T must be >= 0");
  return 2.0 * std::acos(std::exp(-0.5 * kappa * duration));
}

double release_duration(double kappa, double theta) {
  if (!(kappa > 0.0)) throw Error(ErrorCode::invalid_argument, "kappa must be positive");
  if (!(theta >= 0.0 && theta < units::pi)) throw Error(ErrorCode::invalid_argument, "theta must lie in [0, pi)");
  return -2.0 * std::log(std::cos(0.5 * theta)) / kappa;
}

cplx ReleaseSchedule::g_at(double t) const {
  if (t < 0.0 || t > duration) return 0.0;
  if (custom) return custom(t);
  const double r = std::min(rise, 0.5 * duration);
  if (r <= 0.0) return g;
  double env = 1.0;
  if (t < r) env = 0.5 * (1.0 - std::cos(units::pi * t / r));
  else if (t > duration - r) env = 0.5 * (1.0 - std::cos(units::pi * (duration - t) / r));
  return g * env;
}

double ReleaseSchedule::theta(double kappa_out) const {
  return mixing_angle(4.0 * std::norm(g) / kappa_out, duration);
}

void ReleaseSchedule::validate() const {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw Error(ErrorCode::invalid_argument, "release duration must be >= 0");
  if (!(rise >= 0.0)) throw Error(ErrorCode::invalid_argument, "rise time must be >= 0");
  if (!std::isfinite(std::abs(g)) || !std::isfinite(delta)) throw Error(ErrorCode::invalid_argument, "non-finite schedule");
}

CMatrix release_unitary(int cutoff, double theta) {
  const Space s{FockSpace(cutoff, Mode::a), FockSpace(cutoff, Mode::b_out)};
  const CMatrix a = mode_operator(op::Annihilate{}, s, Mode::a).matrix;
  const CMatrix b = mode_operator(op::Annihilate{}, s, Mode::b_out).matrix;
  const CMatrix gen = 0.5 * theta * (a * b.adjoint() - a.adjoint() * b);
  return gen.exp();
}

QuantumState apply_release(const QuantumState& rho_a, double theta) {
  if (rho_a.space().num_modes() != 1 || rho_a.space().mode(0).label != Mode::a) {
    throw Error(ErrorCode::dimension_mismatch, "release expects a single-mode state on a");
  }
  const int n = rho_a.space().mode(0).cutoff;
  const Space joint{FockSpace(n, Mode::a), FockSpace(n, Mode::b_out)};
  const CMatrix u = release_unitary(n, theta);
  CVector vac = CVector::Zero(n);
  vac(0) = 1.0;
  if (rho_a.is_pure()) {
    const CVector in = Eigen::kroneckerProduct(rho_a.ket(), vac).eval();
    return QuantumState::from_ket(joint, u * in);
  }
  const CMatrix in = Eigen::kroneckerProduct(rho_a.density(), CMatrix(vac * vac.adjoint())).eval();
  CMatrix out = u * in * u.adjoint();
  return QuantumState::from_density(joint, 0.5 * (out + out.adjoint()));
}

QuantumState apply_release(const QuantumState& rho_a, const ReleaseChannel& ch) {
  if (!(ch.remaining >= 0.0) || !(ch.emitted >= 0.0) || ch.remaining + ch.emitted > 1.0 + 1e-12) {
    throw Error(ErrorCode::invalid_argument, "release channel fractions must be non-negative and sum to <= 1");
  }
  const double eta = std::min(1.0, ch.remaining + ch.emitted);
  if (eta == 0.0) return apply_release(loss_channel(rho_a, 0.0), 0.0);
  const double theta = 2.0 * std::acos(std::sqrt(std::min(1.0, ch.remaining / eta)));
  return apply_release(loss_channel(rho_a, eta), theta);
}

Waveform emitted_waveform(cplx a0, double n_a0, const ReleaseSchedule& sched, const SystemParams& p,
                          const WaveformOptions& opt) {
  sched.validate();
  p.validate();
  const double ko = p.kappa_out;
  const double tail = opt.tail > 0.0 ? opt.tail : 12.0 / ko;
  std::vector<double> out_times = opt.times;
  if (out_times.empty()) out_times = linspace(0.0, sched.duration + tail, std::max(2, opt.points));
  if (!std::is_sorted(out_times.begin(), out_times.end())) {
    throw Error(ErrorCode::invalid_argument, "waveform times must be sorted");
  }
  std::vector<double> grid = out_times;
  grid.push_back(sched.duration);
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 0.0) throw Error(ErrorCode::invalid_argument, "waveform times must be >= 0");

  const double k0 = opt.kappa_0 ? p.kappa_0 : 0.0;
  const double kl = opt.kappa_loss ? p.kappa_loss_frac * 4.0 / ko : 0.0;
  const cplx mi(0.0, -1.0);
  // y = (u_a, u_b, integral kappa_out |u_b|^2)
  auto rhs = [&](double t, const CVector& y) -> CVector {
    const cplx gt = sched.g_at(t) * std::polar(1.0, -sched.delta * t);
    const double kappa_l = k0 + kl * std::norm(gt);
    CVector d(3);
    d(0) = mi * std::conj(gt) * y(1) - 0.5 * kappa_l * y(0);
    d(1) = mi * gt * y(0) - 0.5 * ko * y(1);
    d(2) = ko * std::norm(y(1));
    return d;
  };

  Waveform w;
  w.initial_photons = n_a0;
  std::size_t next_out = 0;
  cplx ua_end = 1.0;
  auto observe = [&](double t, const CVector& y) {
    if (t == sched.duration) ua_end = y(0);
    while (next_out < out_times.size() && out_times[next_out] == t) {
      const cplx b = std::sqrt(ko) * y(1) * a0;
      w.times.push_back(t);
      w.b_out.push_back(b);
      w.flux.push_back(n_a0 * ko * std::norm(y(1)));
      ++next_out;
    }
    w.channel.emitted = y(2).real();
  };
  CVector y0 = CVector::Zero(3);
  y0(0) = 1.0;
  ode::Options oo;
  oo.rtol = opt.rtol;
  oo.atol = opt.atol;
  oo.first_step = std::min(sched.rise > 0.0 ? sched.rise / 20.0 : 1e-9, 0.01 / ko);
  ode::integrate<CVector>(rhs, y0, grid, observe, oo);

  w.channel.remaining = std::norm(ua_end);
  w.photons_emitted = n_a0 * w.channel.emitted;
  w.residual_cavity = n_a0 * w.channel.remaining;
  w.theta = 2.0 * std::acos(std::min(1.0, std::abs(ua_end)));

  const double kappa = 4.0 * std::norm(sched.g) / ko;
  if (!sched.custom && kappa > 0.0 && sched.duration < 5.0 / kappa) {
    std::ostringstream msg;
    msg << "release shorter than 5/kappa (" << units::to_us(sched.duration) << " us < "
        << units::to_us(5.0 / kappa) << " us): residual cavity energy " << w.residual_cavity << " photons";
    warn(msg.str());
  }
  return w;
}

Waveform emitted_waveform(const QuantumState& rho_a, const ReleaseSchedule& schedule, const SystemParams& p,
                          const WaveformOptions& opt) {
  if (rho_a.space().num_modes() != 1) throw Error(ErrorCode::dimension_mismatch, "expected a single-mode state");
  const Mode m = rho_a.space().mode(0).label;
  const cplx a0 = rho_a.expectation(mode_operator(op::Annihilate{}, rho_a.space(), m));
  return emitted_waveform(a0, rho_a.mean_photons(m), schedule, p, opt);
}

void write_waveform_csv(std::ostream& os, const Waveform& w, const std::vector<std::string>& header) {
  for (const auto& line : header) os << "# " << line << '\n';
  os << "time_us,re,im,flux_photons_per_us\n" << std::setprecision(12);
  for (std::size_t i = 0; i < w.times.size(); ++i) {
    os << units::to_us(w.times[i]) << ',' << w.b_out[i].real() << ',' << w.b_out[i].imag() << ','
       << w.flux[i] * 1e-6 << '\n';
  }
}

double conversion_efficiency(const SystemParams& p, double g) {
  if (g == 0.0) throw Error(ErrorCode::invalid_argument, "conversion efficiency needs g != 0");
  const double kappa = 4.0 * g * g / p.kappa_out;
  return kappa / (kappa * (1.0 + p.kappa_loss_frac) + p.kappa_0);
}

ReferenceCalibration reference_photon_calibration(const SystemParams& p, double gain, double n_ref) {
  if (!(gain > 0.0) || !(n_ref > 0.0)) throw Error(ErrorCode::invalid_argument, "gain and n_ref must be positive");
  // drive eps on b: b' = -i eps - (kappa_out/2) b, steady |b|^2 = n_ref
  const double eps = 0.5 * p.kappa_out * std::sqrt(n_ref);
  const cplx b_ss = cplx(0.0, -2.0) * eps / p.kappa_out;
  ReferenceCalibration c;
  c.reference_amplitude = gain * std::sqrt(p.kappa_out) * std::abs(b_ss);
  c.reference_integral = c.reference_amplitude * c.reference_amplitude / p.kappa_out;
  c.photons_per_unit = n_ref / c.reference_integral;
  return c;
}

double coherence_photon_estimate(const ReferenceCalibration& cal, const std::vector<double>& times,
                                 const std::vector<cplx>& signal) {
  if (times.size() != signal.size()) throw Error(ErrorCode::invalid_argument, "signal and times differ in length");
  double integral = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    integral += 0.5 * (std::norm(signal[i]) + std::norm(signal[i - 1])) * (times[i] - times[i - 1]);
  }
  return 2.0 * cal.photons_per_unit * integral;
}

}  // namespace catapult

#include "catapult/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "catapult/dynamics.hpp"
#include "catapult/error.hpp"
#include "catapult/ode.hpp"
#include "catapult/warn.hpp"

namespace catapult {

namespace {

double trapz_norm(const std::vector<double>& t, const std::vector<cplx>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (std::norm(y[i]) + std::norm(y[i - 1]));
  return s;
}

TargetWaveform on_grid(double t_end, double dt, double photons, const std::function<double(double)>& shape) {
  if (!(t_end > 0.0) || !(dt > 0.0) || !(photons >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "target needs t_end > 0, dt > 0 and photons >= 0");
  }
  const int n = static_cast<int>(std::llround(t_end / dt)) + 1;
  if (n < 3) throw Error(ErrorCode::invalid_argument, "target grid needs at least 3 points");
  TargetWaveform w;
  w.times = linspace(0.0, t_end, n);
  for (double t : w.times) w.envelope.emplace_back(shape(t));
  const double norm = w.photons();
  if (norm > 0.0) {
    for (auto& e : w.envelope) e *= std::sqrt(photons / norm);
  }
  return w;
}

double raised_cosine(double t, double rise) {
  if (rise <= 0.0 || t >= rise) return 1.0;
  if (t <= 0.0) return 0.0;
  return 0.5 * (1.0 - std::cos(units::pi * t / rise));
}

// linear interpolation on a uniform grid
template <class T>
T interp(const std::vector<double>& t, const std::vector<T>& y, double x) {
  if (x <= t.front()) return x < t.front() ? T{} : y.front();
  if (x >= t.back()) return x > t.back() ? T{} : y.back();
  const double h = t[1] - t[0];
  const std::size_t i = std::min(static_cast<std::size_t>((x - t.front()) / h), t.size() - 2);
  const double f = (x - t[i]) / (t[i + 1] - t[i]);
  return y[i] + f * (y[i + 1] - y[i]);
}

}  // namespace

double TargetWaveform::photons() const { return trapz_norm(times, envelope); }

void TargetWaveform::validate() const {
  if (times.size() < 3 || times.size() != envelope.size()) {
    throw Error(ErrorCode::invalid_argument, "target needs at least 3 samples with matching times");
  }
  const double h = times[1] - times[0];
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "target times must increase");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - h) > 1e-6 * h) {
      throw Error(ErrorCode::invalid_argument, "target grid must be uniform");
    }
  }
  for (const auto& e : envelope) {
    if (!std::isfinite(e.real()) || !std::isfinite(e.imag())) throw Error(ErrorCode::invalid_argument, "non-finite target");
  }
}

TargetWaveform gaussian_target(double sigma, double center, double photons, double t_end, double dt) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::invalid_argument, "gaussian width must be > 0");
  return on_grid(t_end, dt, photons, [=](double t) { return std::exp(-std::pow(t - center, 2) / (2 * sigma * sigma)); });
}

TargetWaveform exponential_target(double rate, double rise, double photons, double t_end, double dt) {
  if (!(rate > 0.0)) throw Error(ErrorCode::invalid_argument, "exponential rate must be > 0");
  return on_grid(t_end, dt, photons, [=](double t) { return raised_cosine(t, rise) * std::exp(-0.5 * rate * t); });
}

TargetWaveform flat_top_target(double width, double rise, double photons, double t_end, double dt) {
  if (!(width >= 0.0) || !(rise > 0.0)) throw Error(ErrorCode::invalid_argument, "flat-top needs width >= 0, rise > 0");
  return on_grid(t_end, dt, photons, [=](double t) {
    const double end = 2 * rise + width;
    if (t >= end) return 0.0;
    return raised_cosine(t, rise) * raised_cosine(end - t, rise);
  });
}

TargetWaveform read_target_csv(std::istream& is) {
  TargetWaveform w;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double t, re, im;
    if (!(ls >> t >> re >> im)) {
      if (w.times.empty()) continue;  // column header
      throw Error(ErrorCode::io, "malformed target row: " + line);
    }
    w.times.push_back(t * 1e-6);
    w.envelope.emplace_back(re * 1e3, im * 1e3);
  }
  w.validate();
  return w;
}

cplx ShapingSolution::g_at(double t) const { return times.empty() ? cplx(0.0) : interp(times, g, t); }

ShapingSolution invert_for_coupling(const TargetWaveform& target, double kappa_out, cplx a0, const ShapingOptions& opt) {
  target.validate();
  if (!(kappa_out > 0.0)) throw Error(ErrorCode::invalid_argument, "kappa_out must be > 0");
  const std::vector<double>& t = target.times;
  const std::size_t n = t.size();
  const double h = t[1] - t[0];
  if (h > 1.0 / (20.0 * kappa_out) * (1 + 1e-9)) {
    throw Error(ErrorCode::invalid_argument, "target grid spacing must be <= 1/(20 kappa_out)");
  }

  ShapingSolution s;
  s.times = t;
  s.a0 = a0;
  s.kappa_out = kappa_out;
  s.target_photons = target.photons();
  s.g.assign(n, 0.0);
  s.b.assign(n, 0.0);
  s.a.assign(n, a0);
  s.target.assign(n, 0.0);

  double peak = 0.0;
  for (const auto& e : target.envelope) peak = std::max(peak, std::abs(e));
  if (peak == 0.0) {
    s.residual_cavity = std::norm(a0);
    return s;
  }
  std::size_t first = n, last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(target.envelope[i]) >= opt.tail * peak) {
      first = std::min(first, i);
      last = i;
    }
  }
  s.first = first;
  s.last = last;
  for (std::size_t i = first; i <= last; ++i) s.target[i] = target.envelope[i];
  s.truncated_photons = s.target_photons - trapz_norm(t, s.target);

  const double sk = std::sqrt(kappa_out);
  for (std::size_t i = 0; i < n; ++i) s.b[i] = s.target[i] / sk;
  std::vector<cplx> db(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) db[i] = (-3.0 * s.b[0] + 4.0 * s.b[1] - s.b[2]) / (2 * h);
    else if (i == n - 1) db[i] = (3.0 * s.b[n - 1] - 4.0 * s.b[n - 2] + s.b[n - 3]) / (2 * h);
    else db[i] = (s.b[i + 1] - s.b[i - 1]) / (2 * h);
  }

  double bw_num = 0.0, bw_den = 0.0;
  double emitted = 0.0, phase = std::arg(a0), dphase_prev = 0.0;
  const double n0 = std::norm(a0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) emitted += 0.5 * h * (std::norm(s.target[i]) + std::norm(s.target[i - 1]));
    const double r2 = n0 - emitted - std::norm(s.b[i]);
    const cplx demand = db[i] + 0.5 * kappa_out * s.b[i];
    if (r2 <= 1e-12 * n0 && std::abs(demand) > 0.0) {
      std::ostringstream msg;
      msg << "infeasible target: cavity exhausted at t = " << units::to_us(t[i]) << " us (|a|^2 = " << r2
          << ") while emission is still demanded";
      throw Error(ErrorCode::infeasible, msg.str());
    }
    const double dphase = r2 > 0.0 ? std::imag(std::conj(s.b[i]) * db[i]) / r2 : 0.0;
    if (i > 0) phase += 0.5 * h * (dphase + dphase_prev);
    dphase_prev = dphase;
    s.a[i] = std::polar(std::sqrt(std::max(r2, 0.0)), phase);
    if (i >= first && i <= last) {
      s.g[i] = cplx(0.0, 1.0) * demand / s.a[i];
      if (std::abs(s.g[i]) > opt.max_coupling) {
        std::ostringstream msg;
        msg << "infeasible target: |g|/2pi = " << std::abs(s.g[i]) / units::two_pi / 1e3 << " kHz exceeds the cap of "
            << opt.max_coupling / units::two_pi / 1e3 << " kHz at t = " << units::to_us(t[i]) << " us";
        throw Error(ErrorCode::infeasible, msg.str());
      }
      s.peak_g = std::max(s.peak_g, std::abs(s.g[i]));
    }
    bw_num += std::norm(db[i]);
    bw_den += std::norm(s.b[i]);
  }
  s.residual_cavity = std::norm(s.a.back());
  s.bandwidth = std::sqrt(bw_num / bw_den);
  s.bandwidth_margin = kappa_out / s.bandwidth;
  if (s.bandwidth > opt.bandwidth_fraction * kappa_out) {
    std::ostringstream msg;
    msg << "target bandwidth " << s.bandwidth / kappa_out << " kappa_out is not small compared to kappa_out";
    warn(msg.str());
  }
  return s;
}

namespace {

PumpEnvelopes split_pumps(const ShapingSolution& sol, const SystemParams& p, bool compensate, double max_pump) {
  if (p.chi.ab == 0.0) throw Error(ErrorCode::invalid_argument, "chi_ab = 0 cannot mediate conversion");
  const std::size_t n = sol.times.size();
  PumpEnvelopes e;
  e.amp1.resize(n);
  e.amp2.resize(n);
  e.phase1.assign(n, 0.0);
  e.phase2.resize(n);
  e.stark_a.resize(n);
  e.stark_b.resize(n);
  e.chirp.assign(n, 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double amp = std::sqrt(std::abs(sol.g[i]) / std::abs(p.chi.ab));
    e.amp1[i] = e.amp2[i] = amp;
    worst = std::max(worst, amp * amp);
    const auto shift = stark_shifts(amp, amp, p.chi);
    e.stark_a[i] = shift.a;
    e.stark_b[i] = shift.b;
    if (i > 0) {
      e.chirp[i] = e.chirp[i - 1] + 0.5 * (sol.times[i] - sol.times[i - 1]) *
                                        (e.stark_b[i] - e.stark_a[i] + e.stark_b[i - 1] - e.stark_a[i - 1]);
    }
  }
  // phase of g = chi_ab xi1* xi2 carried by xi2; continuous through g = 0
  const double sign_phase = p.chi.ab < 0.0 ? units::pi : 0.0;
  double last_phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double ph = std::abs(sol.g[i]) > 0.0 ? std::arg(sol.g[i]) - sign_phase : last_phase;
    ph = last_phase + std::remainder(ph - last_phase, units::two_pi);
    last_phase = ph;
    e.phase2[i] = ph - (compensate ? e.chirp[i] : 0.0);
  }
  if (worst > max_pump) {
    std::ostringstream msg;
    msg << "pump displacement |xi|^2 = " << worst << " exceeds " << max_pump
        << "; the linear dispersive treatment of the pumps is doubtful";
    warn(msg.str());
  }
  return e;
}

// g, Stark shifts and xi at time t, following either the pumps or the bare g(t)
struct Drive {
  const ShapingSolution& sol;
  const SystemParams& p;
  bool stark;

  void at(double t, cplx& g, double& da, double& db, cplx& xi1, cplx& xi2) const {
    if (!stark) {
      g = sol.g_at(t);
      da = db = 0.0;
      return;
    }
    const auto& e = sol.pumps;
    xi1 = std::polar(interp(sol.times, e.amp1, t), interp(sol.times, e.phase1, t));
    xi2 = std::polar(interp(sol.times, e.amp2, t), interp(sol.times, e.phase2, t));
    g = conversion_strength(xi1, xi2, p.chi.ab);
    const auto s = stark_shifts(xi1, xi2, p.chi);
    da = s.a;
    db = s.b;
  }
};

void score(ForwardResult& r, const ShapingSolution& sol) {
  std::vector<cplx> diff(r.b_out.size()), mag(r.b_out.size()), tmag(r.b_out.size());
  for (std::size_t i = 0; i < r.b_out.size(); ++i) {
    diff[i] = r.b_out[i] - sol.target[i];
    mag[i] = std::abs(r.b_out[i]) - std::abs(sol.target[i]);
  }
  const double norm = trapz_norm(sol.times, sol.target);
  r.l2_error = norm > 0.0 ? std::sqrt(trapz_norm(sol.times, diff) / norm) : std::sqrt(trapz_norm(sol.times, diff));
  r.envelope_error = norm > 0.0 ? std::sqrt(trapz_norm(sol.times, mag) / norm) : std::sqrt(trapz_norm(sol.times, mag));
  r.photon_deficit = norm - r.emitted;
}

}  // namespace

PumpEnvelopes compensate_stark(const ShapingSolution& sol, const SystemParams& p, const ShapingOptions& opt) {
  return split_pumps(sol, p, true, opt.max_pump_photons);
}

PumpEnvelopes uncompensated_pumps(const ShapingSolution& sol, const SystemParams& p) {
  return split_pumps(sol, p, false, ShapingOptions{}.max_pump_photons);
}

ForwardResult forward_verify(const ShapingSolution& sol, cplx a0, const ForwardOptions& opt, const SystemParams& p) {
  if (sol.times.empty()) throw Error(ErrorCode::invalid_argument, "empty shaping solution");
  if (opt.stark && sol.pumps.empty()) throw Error(ErrorCode::invalid_argument, "Stark run needs pump envelopes");
  const double ko = sol.kappa_out;
  const double k0 = opt.kappa_0 ? p.kappa_0 : 0.0;
  const double kl = opt.kappa_loss ? p.kappa_loss_frac * 4.0 / ko : 0.0;
  const Drive drive{sol, p, opt.stark};
  const cplx mi(0.0, -1.0);
  auto rhs = [&](double t, const CVector& y) -> CVector {
    cplx g, xi1, xi2;
    double da, db;
    drive.at(t, g, da, db, xi1, xi2);
    CVector d(3);
    d(0) = mi * (da * y(0) + std::conj(g) * y(1)) - 0.5 * (k0 + kl * std::norm(g)) * y(0);
    d(1) = mi * (db * y(1) + g * y(0)) - 0.5 * ko * y(1);
    d(2) = ko * std::norm(y(1));
    return d;
  };
  ForwardResult r;
  CVector y0(3);
  y0 << a0, 0.0, 0.0;
  ode::Options oo;
  oo.rtol = opt.rtol;
  oo.atol = opt.atol;
  oo.first_step = 0.1 * (sol.times[1] - sol.times[0]);
  CVector last = y0;
  ode::integrate<CVector>(rhs, y0, sol.times, [&](double t, const CVector& y) {
    r.times.push_back(t);
    r.b_out.push_back(std::sqrt(ko) * y(1));
    last = y;
  }, oo);
  r.emitted = last(2).real();
  r.residual_cavity = std::norm(last(0));
  score(r, sol);
  return r;
}

ForwardResult forward_verify(const ShapingSolution& sol, const QuantumState& rho_a, const ForwardOptions& opt,
                             const SystemParams& p) {
  const Mode ma = rho_a.space().mode(0).label;
  if (rho_a.space().num_modes() != 1 || ma != Mode::a) {
    throw Error(ErrorCode::dimension_mismatch, "forward_verify expects a state of mode a");
  }
  if (!opt.kerr) {
    const cplx mean = rho_a.expectation(mode_operator(op::Annihilate{}, rho_a.space(), Mode::a));
    const double nbar = rho_a.mean_photons(Mode::a);
    ForwardResult unit = forward_verify(sol, 1.0, opt, p);
    for (auto& b : unit.b_out) b *= mean;
    unit.emitted *= nbar;
    unit.residual_cavity *= nbar;
    score(unit, sol);
    return unit;
  }
  if (opt.stark && sol.pumps.empty()) throw Error(ErrorCode::invalid_argument, "Stark run needs pump envelopes");

  DriveSchedule sched;
  if (opt.stark) {
    sched.xi1 = [&sol](double t) {
      return std::polar(interp(sol.times, sol.pumps.amp1, t), interp(sol.times, sol.pumps.phase1, t));
    };
    sched.xi2 = [&sol](double t) {
      return std::polar(interp(sol.times, sol.pumps.amp2, t), interp(sol.times, sol.pumps.phase2, t));
    };
  } else {
    sched = DriveSchedule::from_coupling([&sol](double t) { return sol.g_at(t); }, 0.0, p);
  }
  const Space s = tensor(rho_a.space(), Space{FockSpace(opt.cutoff, Mode::b)});
  const auto vac = make_state(state::Fock{0}, FockSpace(opt.cutoff, Mode::b));
  const auto rho0 = tensor(rho_a, vac);
  HamiltonianOptions ho;
  ho.stark = opt.stark;
  ho.self_kerr = true;
  ConversionLosses losses;
  losses.kappa_0 = opt.kappa_0;
  losses.kappa_loss = opt.kappa_loss;
  auto params = p;
  params.kappa_out = sol.kappa_out;
  EvolveOptions eo;
  eo.rtol = std::max(opt.rtol, 1e-9);
  eo.atol = std::max(opt.atol, 1e-11);
  eo.store_states = false;
  eo.observables = {{"b", mode_operator(op::Annihilate{}, s, Mode::b)},
                    {"nb", mode_operator(op::Number{}, s, Mode::b)},
                    {"na", mode_operator(op::Number{}, s, Mode::a)}};
  const auto solution = evolve_lindblad(rho0, conversion_hamiltonian(params, sched, s, ho),
                                        conversion_collapses(params, sched, s, losses), sol.times, eo);
  ForwardResult r;
  r.times = solution.times;
  const auto& b = solution.observable("b");
  const auto& nb = solution.observable("nb");
  for (const auto& v : b) r.b_out.push_back(std::sqrt(sol.kappa_out) * v);
  for (std::size_t i = 1; i < nb.size(); ++i) {
    r.emitted += 0.5 * sol.kappa_out * (r.times[i] - r.times[i - 1]) * (nb[i].real() + nb[i - 1].real());
  }
  r.residual_cavity = solution.observable("na").back().real();
  score(r, sol);
  return r;
}

double envelope_distance(const std::vector<cplx>& x, const std::vector<cplx>& y) {
  if (x.size() != y.size() || x.empty()) throw Error(ErrorCode::dimension_mismatch, "envelopes must share a grid");
  double worst = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(std::abs(x[i]) - std::abs(y[i])));
    peak = std::max(peak, std::abs(y[i]));
  }
  return peak > 0.0 ? worst / peak : worst;
}

void write_shaping_csv(std::ostream& os, const ShapingSolution& sol, const std::vector<std::string>& header) {
  for (const auto& h : header) os << "# " << h << '\n';
  os << "time_us,target_re,target_im,g_re_khz,g_im_khz,xi1_abs,xi1_phase,xi2_abs,xi2_phase\n";
  os.precision(10);
  const double per_khz = 1.0 / units::khz(1.0);
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    // envelope in sqrt(photons/us)
    os << units::to_us(sol.times[i]) << ',' << sol.target[i].real() * 1e-3 << ',' << sol.target[i].imag() * 1e-3 << ','
       << sol.g[i].real() * per_khz << ',' << sol.g[i].imag() * per_khz << ',';
    if (sol.pumps.empty()) {
      os << ",,,\n";
    } else {
      os << sol.pumps.amp1[i] << ',' << sol.pumps.phase1[i] << ',' << sol.pumps.amp2[i] << ',' << sol.pumps.phase2[i]
         << '\n';
    }
  }
}

}  // namespace catapult

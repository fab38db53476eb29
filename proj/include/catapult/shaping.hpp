#pragma once

// Pulse shaping: the coupling g(t) and the two pump envelopes that make the
// cavity emit a prescribed wavepacket, and forward checks of the result.

#include <iosfwd>
#include <string>
#include <vector>

#include "catapult/hilbert.hpp"
#include "catapult/model.hpp"
#include "catapult/units.hpp"

namespace catapult {

/// Output envelope <b_out(t)> in sqrt(photons/s) on a uniform grid.
struct TargetWaveform {
  std::vector<double> times;
  std::vector<cplx> envelope;

  double photons() const;
  void validate() const;
};

/// Amplitude exp[-(t - center)^2 / (2 sigma^2)] on [0, t_end].
TargetWaveform gaussian_target(double sigma, double center, double photons, double t_end, double dt);
/// Rising edge of length `rise` (raised cosine) into exp(-rate t / 2).
TargetWaveform exponential_target(double rate, double rise, double photons, double t_end, double dt);
/// Raised-cosine edges of length `rise` around a plateau of length `width`.
TargetWaveform flat_top_target(double width, double rise, double photons, double t_end, double dt);
/// Columns time_us, re, im; '#' lines are skipped. Envelope values in sqrt(photons/us).
TargetWaveform read_target_csv(std::istream& is);

struct ShapingOptions {
  double max_coupling = units::khz(500);
  /// Tails below this fraction of the peak are not shaped.
  double tail = 1e-4;
  /// Warn when the target's rms bandwidth exceeds this fraction of kappa_out.
  double bandwidth_fraction = 0.5;
  /// Warn when a pump displacement |xi|^2 exceeds this.
  double max_pump_photons = 50.0;
};

struct PumpEnvelopes {
  std::vector<double> amp1, amp2;      // |xi_1|, |xi_2|
  std::vector<double> phase1, phase2;  // rad
  std::vector<double> stark_a, stark_b;
  /// Accumulated relative Stark phase integral (shift_b - shift_a) dt.
  std::vector<double> chirp;

  bool empty() const { return amp1.empty(); }
};

struct ShapingSolution {
  std::vector<double> times;
  std::vector<cplx> target;  // after tail truncation
  std::vector<cplx> g;       // rad/s, Stark-free frame
  std::vector<cplx> a;       // cavity amplitude implied by the inversion
  std::vector<cplx> b;       // output-mode amplitude
  cplx a0 = 0.0;
  double kappa_out = 0.0;
  double peak_g = 0.0;
  double bandwidth = 0.0;         // rms angular bandwidth of the target
  double bandwidth_margin = 0.0;  // kappa_out / bandwidth
  double target_photons = 0.0;
  double truncated_photons = 0.0;  // in the dropped tails
  double residual_cavity = 0.0;    // |a(T)|^2
  std::size_t first = 0, last = 0;  // shaped index range
  PumpEnvelopes pumps;

  /// Linear interpolation of g at time t (zero outside the grid).
  cplx g_at(double t) const;
};

/// g(t) = i (db/dt + kappa_out b / 2) / a(t) with b = target / sqrt(kappa_out)
/// and |a|^2 = |a0|^2 - integral |target|^2 - |b|^2. Throws infeasible with
/// the first failing time when the cavity runs dry or g exceeds the cap.
ShapingSolution invert_for_coupling(const TargetWaveform& target, double kappa_out, cplx a0,
                                    const ShapingOptions& opt = {});

/// Equal split |xi_1| = |xi_2| = sqrt(|g|/|chi_ab|) with the Stark chirp
/// integral (shift_b - shift_a) dt removed from the phase of xi_2.
PumpEnvelopes compensate_stark(const ShapingSolution& sol, const SystemParams& p, const ShapingOptions& opt = {});

/// Split without compensation (same amplitudes, phase of g on xi_2).
PumpEnvelopes uncompensated_pumps(const ShapingSolution& sol, const SystemParams& p);

struct ForwardOptions {
  /// Drive through the pump envelopes and include their Stark shifts.
  bool stark = false;
  bool kappa_0 = false;
  bool kappa_loss = false;
  /// Full Lindblad run of the a (x) b model with self-Kerr (state overload only).
  bool kerr = false;
  int cutoff = 6;
  double rtol = 1e-10;
  double atol = 1e-13;
};

struct ForwardResult {
  std::vector<double> times;
  std::vector<cplx> b_out;
  double l2_error = 0.0;        // ||b_out - target|| / ||target||
  double envelope_error = 0.0;  // same on |b_out| and |target|
  double emitted = 0.0;
  double photon_deficit = 0.0;  // target photons - emitted
  double residual_cavity = 0.0;
};

/// Amplitude-level forward run from the coherent amplitude a0.
ForwardResult forward_verify(const ShapingSolution& sol, cplx a0, const ForwardOptions& opt = {},
                             const SystemParams& p = table_s1());
/// Forward run from a cavity state; first-moment ODE unless opt.kerr is set.
ForwardResult forward_verify(const ShapingSolution& sol, const QuantumState& rho_a, const ForwardOptions& opt = {},
                             const SystemParams& p = table_s1());

/// max_t | |x(t)| - |y(t)| | / max_t |y(t)| on a shared grid.
double envelope_distance(const std::vector<cplx>& x, const std::vector<cplx>& y);

/// CSV columns: time_us, target_re, target_im, g_re_khz, g_im_khz, xi1_abs,
/// xi1_phase, xi2_abs, xi2_phase (pump columns empty when not compensated).
void write_shaping_csv(std::ostream& os, const ShapingSolution& sol, const std::vector<std::string>& header = {});

}  // namespace catapult

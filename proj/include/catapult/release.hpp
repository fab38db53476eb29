#pragma once

// Release of the storage-mode state into a single itinerant temporal mode.
//
// Two pictures are used:
//  - apply_release: the a -> b_out beam splitter with mixing angle theta.
//    Exact for the joint state as long as the output mode is identified
//    with the emitted temporal mode, which holds for g << kappa_out.
//  - emitted_waveform: the cascaded a-b amplitude equations, which give the
//    time profile <b_out(t)> and the photon budget for any g(t).

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "catapult/hilbert.hpp"
#include "catapult/model.hpp"

namespace catapult {

/// theta = 2 arccos(e^{-kappa T/2}).
double mixing_angle(double kappa, double duration);

/// Pump-on time that reaches mixing angle theta at constant kappa.
double release_duration(double kappa, double theta);

/// Constant coupling g with raised-cosine edges of length `rise`, switched on
/// over [0, duration]. A custom envelope replaces the plateau shape.
struct ReleaseSchedule {
  cplx g = 0.0;  // rad/s
  double duration = 0.0;
  double delta = 0.0;
  double rise = 40e-9;
  std::function<cplx(double)> custom;

  cplx g_at(double t) const;
  /// Nominal angle from kappa = 4|g|^2/kappa_out.
  double theta(double kappa_out) const;
  void validate() const;
};

/// U = exp[(theta/2)(a b_out^dagger - a^dagger b_out)], taking a^dagger to
/// cos(theta/2) a^dagger + sin(theta/2) b_out^dagger, on a (x) b_out.
CMatrix release_unitary(int cutoff, double theta);

/// Lossless release of a single-mode state on `a` into a vacuum b_out of the
/// same cutoff.
QuantumState apply_release(const QuantumState& rho_a, double theta);

/// Amplitude-level split of the initial cavity field: |u_a|^2 stays in the
/// cavity, `emitted` reaches the line, the rest is lost to the environment.
struct ReleaseChannel {
  double remaining = 1.0;
  double emitted = 0.0;

  double lost() const { return 1.0 - remaining - emitted; }
};

/// Release through a passive lossy network: loss with eta = remaining +
/// emitted, then a lossless beam splitter with cos^2(theta/2) = remaining/eta.
QuantumState apply_release(const QuantumState& rho_a, const ReleaseChannel& channel);

struct WaveformOptions {
  bool kappa_0 = true;
  bool kappa_loss = true;
  /// Time after pump-off over which b keeps ringing down; 0: 12/kappa_out.
  double tail = 0.0;
  int points = 801;
  /// Explicit output grid (s); overrides `points` and `tail`.
  std::vector<double> times;
  double rtol = 1e-10;
  double atol = 1e-13;
};

struct Waveform {
  std::vector<double> times;
  std::vector<cplx> b_out;  // sqrt(photons/s)
  std::vector<double> flux;  // photons/s
  double photons_emitted = 0.0;
  double initial_photons = 0.0;
  /// Photons left in a when the pumps switch off.
  double residual_cavity = 0.0;
  /// 2 arccos |u_a(T)|, the operational mixing angle.
  double theta = 0.0;
  ReleaseChannel channel;

  double efficiency() const { return channel.emitted / (channel.emitted + channel.lost()); }
};

/// Integrates u_a' = -i g* e^{i delta t} u_b - (kappa_l/2) u_a,
///            u_b' = -i g e^{-i delta t} u_a - (kappa_out/2) u_b,
/// from u_a = 1, u_b = 0. Then <b_out> = sqrt(kappa_out) u_b <a(0)> and the
/// emitted photon number is <n_a(0)> times the integrated |u_b|^2 kappa_out.
Waveform emitted_waveform(cplx a0, double n_a0, const ReleaseSchedule& schedule, const SystemParams& p,
                          const WaveformOptions& opt = {});
Waveform emitted_waveform(const QuantumState& rho_a, const ReleaseSchedule& schedule, const SystemParams& p,
                          const WaveformOptions& opt = {});

/// CSV columns: time_us, re, im, flux_photons_per_us.
void write_waveform_csv(std::ostream& os, const Waveform& w, const std::vector<std::string>& header = {});

/// kappa/(kappa + kappa_loss + kappa_0) at constant coupling g.
double conversion_efficiency(const SystemParams& p, double g);

struct ReferenceCalibration {
  double reference_amplitude = 0.0;  // steady <b_out> in ADC units
  double reference_integral = 0.0;   // integral of |signal|^2 over 1/kappa_out
  double photons_per_unit = 0.0;     // n_ref / reference_integral
};

/// Steady drive holding n_ref photons in b: <b_out> = sqrt(kappa_out n_ref),
/// integrated over 1/kappa_out, recorded with a linear `gain`.
ReferenceCalibration reference_photon_calibration(const SystemParams& p, double gain = 1.0, double n_ref = 1.0);

/// Photon number of a (|0> + e^{i phi}|1>)/sqrt2-type release inferred from
/// its coherent part: 2 * photons_per_unit * integral |signal|^2 dt.
double coherence_photon_estimate(const ReferenceCalibration& cal, const std::vector<double>& times,
                                 const std::vector<cplx>& signal);

}  // namespace catapult

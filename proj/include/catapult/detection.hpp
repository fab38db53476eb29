#pragma once

// Heterodyne detector model: efficiency loss, temporal-mode matching, shot
// sampling from the Husimi density, histograms, marginals and calibration.
//
// Units: shots are in coherent-amplitude units, so the vacuum Q density
// e^{-|S|^2}/pi has E|S|^2 = 1 (variance 1/2 per quadrature).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "catapult/fit.hpp"
#include "catapult/hilbert.hpp"

namespace catapult {

struct DetectorModel {
  double eta = 0.43;
  /// Extra complex Gaussian noise added to each shot, E|n|^2.
  double extra_noise = 0.0;
  /// Demodulation detuning (rad/s) and the time at which it is referenced;
  /// shots are rotated by e^{-i omega t0}.
  double demod_detuning = 0.0;
  double demod_time = 0.0;

  void validate() const;
};

/// Amplitude damping with transmissivity eta on `mode` (Kraus form).
QuantumState loss_channel(const QuantumState& rho, double eta, Mode mode);
/// Single-mode convenience overload.
QuantumState loss_channel(const QuantumState& rho, double eta);
/// Same channel built explicitly: beam splitter to a vacuum environment
/// mode, then a partial trace. Reference implementation for tests.
QuantumState loss_channel_beamsplitter(const QuantumState& rho, double eta);

/// f(t) = e^{-2 g^2 t/kappa_out} - e^{-kappa_out t/2}, scaled so that
/// sum f^2 dt = 1 on the supplied (uniform) grid.
std::vector<double> matched_envelope(double g, double kappa_out, const std::vector<double>& times);

struct ShotSet {
  std::vector<cplx> samples;
  std::uint64_t seed = 0;
  double eta = 1.0;
  double scale = 1.0;  // calibration factor already applied to samples
  /// Envelope-bound violations seen by the rejection sampler (should be 0).
  long bound_violations = 0;

  std::size_t count() const { return samples.size(); }
};

struct SamplerOptions {
  std::size_t block_size = 1 << 16;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// i.i.d. draws from Q of `rho` (already loss-transformed), with the
/// detector's extra noise and demodulation rotation applied.
ShotSet sample_heterodyne(const QuantumState& rho, const DetectorModel& det, std::size_t n_shots, std::uint64_t seed,
                          const SamplerOptions& opt = {});
/// loss_channel(rho, det.eta) followed by sample_heterodyne.
ShotSet detect(const QuantumState& rho, const DetectorModel& det, std::size_t n_shots, std::uint64_t seed,
               const SamplerOptions& opt = {});

void write_shots_csv(std::ostream& os, const ShotSet& shots, const std::vector<std::string>& header = {});

/// Bins centered on the grid points; density(j, i) at (re_at(i), im_at(j))
/// normalized by the total number of shots, including those outside.
struct QHistogram {
  PhaseGrid grid;
  Eigen::MatrixXd counts;
  Eigen::MatrixXd density;
  std::size_t total = 0;
  std::size_t outside = 0;

  double integral() const;
  PhaseSpaceField as_field() const;
};

QHistogram histogram_q(const ShotSet& shots, const PhaseGrid& grid = {});

struct VacuumCalibration {
  double scale = 1.0;
  double scale_error = 0.0;
  double fitted_sigma = 0.0;  // per quadrature, raw units
  double reduced_chi2 = 0.0;
};

/// Fits a 2D Gaussian to the histogram of raw vacuum shots and returns the
/// factor that brings the per-quadrature width to 1/sqrt(2).
VacuumCalibration vacuum_calibrate(const ShotSet& vacuum, double max_reduced_chi2 = 5.0);
ShotSet apply_calibration(const ShotSet& shots, double scale);

/// A 1D density on bin centers.
struct Marginal {
  std::vector<double> centers;
  std::vector<double> density;
  std::vector<double> counts;  // empty for analytic marginals
  double bin_width = 0.0;
  std::size_t total = 0;
};

/// Pr(phi) over [0, 2 pi) from the radially integrated histogram.
Marginal radial_marginal(const QHistogram& hist, int n_phi = 64);

enum class Axis { I, Q };
/// Pr(I) or Pr(Q), integrating the histogram over the other quadrature.
Marginal axis_marginal(const QHistogram& hist, Axis axis);
/// Bin-averaged exact marginal of the Q function of `rho`.
Marginal exact_axis_marginal(const QuantumState& rho, Axis axis, const std::vector<double>& centers,
                             double bin_width);

struct Harmonic {
  cplx value;
  double se_re = 0.0;
  double se_im = 0.0;
};

/// Sample mean of e^{-i n phi} over the shots.
Harmonic angular_harmonic(const ShotSet& shots, int n);
/// Exact E[e^{-i n phi}] under Q of `rho`: sum_m rho_{m,m+n} Gamma(m+n/2+1)/sqrt(m!(m+n)!).
cplx exact_angular_harmonic(const QuantumState& rho, int n);

struct EfficiencyEstimate {
  double eta = 0.0;
  double eta_error = 0.0;
  cplx center;
  fit::FitResult fit;
};

/// eta = |center|^2/|alpha0|^2 from a 2D Gaussian fit to the histogram.
EfficiencyEstimate fit_detection_efficiency(const QHistogram& hist, cplx alpha0);

struct AverageSignal {
  std::vector<double> times;
  std::vector<double> i_mean, q_mean;
  double sigma = 0.0;  // per point, per quadrature
};

/// N-shot average of a time-resolved record sqrt(eta) <b_out(t)> + white
/// noise, with per-sample vacuum variance 1/(2 dt) per quadrature.
AverageSignal average_signal(const std::vector<double>& times, const std::vector<cplx>& waveform,
                             const DetectorModel& det, std::size_t n_shots, std::uint64_t seed);

}  // namespace catapult

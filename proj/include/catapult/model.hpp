#pragma once

// Device parameters, pump-to-coupling calibration and the effective driven
// Hamiltonian of the storage (a) and output (b) modes.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "catapult/hamiltonian.hpp"
#include "catapult/hilbert.hpp"

namespace catapult {

struct KerrMatrix {
  double aa = 0.0, bb = 0.0, cc = 0.0;
  double ab = 0.0, ac = 0.0, bc = 0.0;
};

/// Angular frequencies in rad/s, rates in 1/s, times in s.
struct SystemParams {
  double omega_a = 0.0, omega_b = 0.0, omega_c = 0.0;
  KerrMatrix chi;
  double kappa_0 = 0.0;
  double kappa_out = 0.0;
  double kappa_loss_frac = 0.01;
  double readout_fe = 0.99;
  double readout_fg = 0.96;
  double t1 = 0.0, t2_ramsey = 0.0, t2_echo = 0.0;  // informational

  void validate() const;
};

/// Measured device parameters of the reference experiment.
SystemParams table_s1();

/// Human units: frequencies and Kerr terms in MHz (omega/2pi), lifetimes in us.
/// Missing keys keep the values of `base`.
SystemParams params_from_json(const nlohmann::json& j, const SystemParams& base = table_s1());
nlohmann::json params_to_json(const SystemParams& p);
SystemParams load_params(const std::string& path);

/// chi_kl = -E_J phi_k^2 phi_l^2, chi_kk = -E_J phi_k^4 / 2.
KerrMatrix kerr_from_junction(double e_j, double phi_a, double phi_b, double phi_c);

struct JunctionEstimate {
  double e_j = 0.0;
  double phi_a = 0.0, phi_b = 0.0, phi_c = 0.0;
  KerrMatrix predicted;
};

/// Inverts chi_ac, chi_bc and chi_cc for the participations at a given E_J.
/// The predicted aa, bb, ab terms do not depend on the E_J choice.
JunctionEstimate junction_from_kerr(double chi_ac, double chi_bc, double chi_cc, double e_j);

struct Displacement {
  cplx xi;
  /// |kappa/(4 Delta)| < 0.01, so xi ~ eps/Delta is adequate.
  bool approximation_ok = true;
};

/// xi = eps / (i kappa/4 + Delta).
Displacement displacement_amplitude(cplx epsilon, double detuning, double kappa_mode);

/// g = chi_ab xi1* xi2.
cplx conversion_strength(cplx xi1, cplx xi2, double chi_ab);

struct StarkShifts {
  double a = 0.0, b = 0.0, c = 0.0;
};

StarkShifts stark_shifts(cplx xi1, cplx xi2, const KerrMatrix& chi);

struct PumpTone {
  std::function<cplx(double)> epsilon;  // rad/s
  double omega_drive = 0.0;
  double detuning = 0.0;  // from the driven mode
  Mode target = Mode::a;
};

/// Time-dependent displacements of both pumps and the relative detuning
/// delta of the conversion term.
struct DriveSchedule {
  std::function<cplx(double)> xi1;
  std::function<cplx(double)> xi2;
  double delta = 0.0;

  cplx g(double t, const SystemParams& p) const;
  StarkShifts stark(double t, const SystemParams& p) const;

  static DriveSchedule from_pumps(const PumpTone& pump1, const PumpTone& pump2, double delta,
                                  const SystemParams& p);
  /// Equal-amplitude split |xi1| = |xi2| = sqrt(|g|/|chi_ab|), with the phase of g on xi2.
  static DriveSchedule from_coupling(std::function<cplx(double)> g, double delta, const SystemParams& p);
  static DriveSchedule off();
};

/// The pump detuning delta that makes a b^dagger resonant given constant
/// Stark shifts: delta* = shift_b - shift_a.
double resonant_delta(const StarkShifts& s);

struct HamiltonianOptions {
  bool stark = true;
  bool self_kerr = true;
};

/// H(t) on a (x) b: Stark terms, self-Kerr, and g e^{-i delta t} a b^dagger + h.c.
TimeDependentHamiltonian conversion_hamiltonian(const SystemParams& p, const DriveSchedule& schedule,
                                                const Space& space, const HamiltonianOptions& opt = {});
LinearOp effective_hamiltonian(const SystemParams& p, const DriveSchedule& schedule, double t, const Space& space,
                               const HamiltonianOptions& opt = {});

struct StarkCalibration {
  std::vector<double> amplitudes;  // pump amplitude in arbitrary DAC units
  std::vector<double> shifts;      // synthetic transmon shifts, rad/s
  double slope = 0.0;              // rad/s per amplitude^2
  double slope_error = 0.0;
  double intercept = 0.0;
  double xi_per_unit = 0.0;  // |xi| per DAC unit
  double xi_per_unit_error = 0.0;
};

/// Synthetic Stark sweep delta_c = chi_ac |xi|^2 + noise with xi = true_xi_per_unit * u,
/// linearly fitted against u^2.
StarkCalibration simulate_stark_calibration(const SystemParams& p, const std::vector<double>& amplitudes,
                                            double noise_sigma, double true_xi_per_unit, std::uint64_t seed);

}  // namespace catapult

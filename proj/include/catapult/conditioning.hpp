#pragma once

// Cavity measurements (ideal projectors composed with transmon readout
// errors), itinerant states conditioned on their outcomes, the two-basis
// Bell-fidelity witness and the marginal fits that feed it.

#include <cstdint>
#include <string>
#include <vector>

#include "catapult/detection.hpp"
#include "catapult/hilbert.hpp"

namespace catapult {

enum class Basis { number, superpos01, superpos02, coherent, parity };

std::string_view to_string(Basis b);
Basis basis_from_string(std::string_view s);

struct CavityMeasurement {
  Basis basis = Basis::number;
  /// Number basis: the levels probed (default {0, 1}).
  std::vector<int> levels;
  /// Coherent basis: the cavity is displaced by alpha and probed for the
  /// vacuum, so the selected outcome is |-alpha>.
  cplx alpha = 1.0;
  /// Transmon assignment fidelities for the selected (excited) and the
  /// unselected (ground) outcome.
  double fe = 0.99;
  double fg = 0.96;
  /// Optional explicit row-stochastic confusion matrix; rows are ideal
  /// outcomes, columns reported ones. Overrides fe/fg.
  Eigen::MatrixXd assignment;
  /// Multi-target bases: one selective run per target, keeping only the
  /// selected outcomes; the rest goes into a "discard" element.
  bool postselect = false;
  /// Kerr evolution of the cavity before it is measured.
  double dwell = 0.0;
  double chi_aa = 0.0;

  static CavityMeasurement ideal(Basis b);
};

struct Povm {
  int cutoff = 0;
  std::vector<std::string> labels;
  std::vector<CMatrix> elements;
  /// Index of the discard element, -1 when every outcome is kept.
  int discard = -1;

  double completeness_error() const;
  std::size_t index(const std::string& label) const;
};

Povm cavity_povm(const CavityMeasurement& m, int cutoff);

struct ConditionalResult {
  std::string label;
  double probability = 0.0;  // Born rule, including discarded shots
  QuantumState state;        // itinerant b_out state
};

/// Born probability of a POVM outcome on the a part of an a (x) b_out state,
/// and the normalized b_out state left behind.
ConditionalResult condition_on_cavity(const QuantumState& joint, const Povm& povm, std::size_t outcome);

/// Every kept outcome of the POVM.
std::vector<ConditionalResult> condition_all(const QuantumState& joint, const Povm& povm);

/// Unitary exp[-i (chi_aa/2) a^dag^2 a^2 t] on mode `m`.
QuantumState kerr_dwell(const QuantumState& rho, double t, double chi_aa, Mode m = Mode::a);

struct CoherentOverlap {
  double probability = 0.0;  // |<alpha|-alpha>|^2 = e^{-4|alpha|^2}
  double amplitude = 0.0;    // |<alpha|-alpha>|   = e^{-2|alpha|^2}
};
CoherentOverlap coherent_overlap(cplx alpha);

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

Estimate binomial_estimate(double successes, double trials);

/// Probabilities entering the witness. Conditional entries are those of the
/// correlated itinerant outcome: P_b(1|0_a), P_b(0|1_a), P_b(+|+_a), P_b(-|-_a).
struct BellStatistics {
  Estimate pa0, pa1, pa_plus, pa_minus;
  Estimate pb1_given0, pb0_given1, pbplus_given_plus, pbminus_given_minus;
};

struct BellBound {
  double value = 0.0;
  double error = 0.0;
  /// (F - 1/2)/error.
  double significance() const { return error > 0.0 ? (value - 0.5) / error : 0.0; }
};

/// F >= 1/2 [rho22 + rho33 + rho~11 + rho~44 - rho~22 - rho~33 - 2 sqrt(rho11 rho44)]
/// with the diagonal elements written as P_a(i) P_b(j|i_a); error by finite-
/// difference propagation of each input's error.
BellBound bell_bound(const BellStatistics& s);

struct MixingFit {
  double alpha = 0.0;
  double error = 0.0;
  double chi2 = 0.0;
  int dof = 0;

  double reduced_chi2() const { return dof > 0 ? chi2 / dof : 0.0; }
};

/// Weighted least squares of alpha D_i + (1 - alpha) D_ibar to a measured
/// histogram marginal, alpha constrained to [0, 1].
MixingFit fit_mixing_fraction(const Marginal& measured, const std::vector<double>& d_i,
                              const std::vector<double>& d_ibar, double max_reduced_chi2 = 5.0);

struct BellPipelineOptions {
  double fe = 0.99;
  double fg = 0.96;
  bool postselect = true;
  DetectorModel detector;
  std::size_t shots = 1000000;  // cavity measurements per basis
  std::uint64_t seed = 1;
  PhaseGrid grid;
};

struct BellOutcome {
  std::string basis;
  std::string label;
  double probability = 0.0;  // among kept shots
  std::size_t shots = 0;
  MixingFit fit;
  QHistogram histogram;
  Marginal marginal;
  std::vector<double> ideal_correlated, ideal_anticorrelated;
};

struct BellPipelineResult {
  BellStatistics statistics;
  BellBound bound;
  std::vector<BellOutcome> outcomes;
};

/// Sampled version of the half-release Bell experiment: cavity outcomes
/// drawn from the POVM, itinerant shots through the detector, Pr(I) fitted
/// against the ideal loss-transformed marginals.
BellPipelineResult simulate_bell_experiment(const QuantumState& joint, const BellPipelineOptions& opt);

/// Exact witness for a joint state with ideal cavity measurements and
/// perfectly resolved itinerant states.
BellBound exact_bell_bound(const QuantumState& joint);

}  // namespace catapult

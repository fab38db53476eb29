#pragma once

// Lindblad time evolution plus the closed-form two-mode solutions and rate
// formulas of the conversion process.

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "catapult/hamiltonian.hpp"
#include "catapult/hilbert.hpp"
#include "catapult/model.hpp"
#include "catapult/ode.hpp"

namespace catapult {

/// Dissipator sqrt(rate * m(t)) L, with m(t) = 1 when `modulation` is empty.
struct CollapseSpec {
  LinearOp op;
  double rate = 0.0;  // 1/s
  std::function<double(double)> modulation;

  double rate_at(double t) const { return modulation ? rate * modulation(t) : rate; }
};

struct EvolveOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  bool store_states = true;
  std::vector<std::pair<std::string, LinearOp>> observables;
  /// Most negative eigenvalue tolerated at output times before throwing.
  double positivity_tol = 1e-6;
};

struct Solution {
  Space space;
  std::vector<double> times;  // s
  std::vector<CMatrix> states;
  std::vector<std::string> observable_names;
  std::vector<std::vector<cplx>> observable_values;  // [observable][time]
  std::vector<bool> observable_hermitian;
  double max_trace_error = 0.0;
  double min_eigenvalue = 0.0;
  ode::Stats stats;

  const std::vector<cplx>& observable(const std::string& name) const;
  QuantumState state(std::size_t i) const;
};

Solution evolve_lindblad(const QuantumState& rho0, const TimeDependentHamiltonian& h,
                         const std::vector<CollapseSpec>& collapse, const std::vector<double>& times,
                         const EvolveOptions& opt = {});

/// CSV: time_us, then one column per Hermitian observable and re_/im_ pairs otherwise.
void write_solution_csv(std::ostream& os, const Solution& sol, const std::vector<std::string>& header = {});

std::vector<double> linspace(double start, double stop, int n);

struct ConversionLosses {
  bool kappa_0 = true;
  /// Pump-induced loss on a, rate kappa_loss_frac * 4|g(t)|^2/kappa_out, only while g != 0.
  bool kappa_loss = true;
  bool kappa_out = true;
};

/// Damping channels of the a (x) b conversion model.
std::vector<CollapseSpec> conversion_collapses(const SystemParams& p, const DriveSchedule& schedule,
                                               const Space& space, const ConversionLosses& losses = {});

struct TwoModeAmplitudes {
  cplx a;
  cplx b;
};

/// Exact <a(t)>, <b(t)> of the linear two-mode network with coupling
/// g e^{-i delta t} a b^dagger + h.c. and output damping kappa_out on b.
/// With gamma = kappa_out - 2 i delta and beta = sqrt(gamma^2 - 16|g|^2):
///   a = a0 e^{-gamma t/4} [cosh(beta t/4) + (gamma/beta) sinh(beta t/4)]
///   b = -4 i g a0/beta e^{-(kappa_out + 2 i delta) t/4} sinh(beta t/4)
TwoModeAmplitudes analytic_two_mode(cplx a0, cplx g, double kappa_out, double delta, double t);

/// 4 g^2 / kappa_out; warns when g > 0.2 kappa_out.
double induced_rate(double g, double kappa_out);

/// 4 g^2 kappa_out / (kappa_out^2 + 4 delta^2).
double detuned_rate(double g, double kappa_out, double delta);

/// Binomial P(n|m)(t) = C(m,n) e^{-m kappa t} (e^{kappa t} - 1)^{m-n}.
double fock_decay_populations(int m, int n, double kappa, double t);

/// Sum over k = 1..n of detuned_rate(g, kappa_out, (k-1) chi_aa).
double kerr_corrected_rate(int n, double g, double kappa_out, double chi_aa);

struct KerrTimes {
  double collapse = 0.0;  // pi / (2 sqrt(nbar) |chi_aa|)
  double revival = 0.0;   // 2 pi / |chi_aa|
};

KerrTimes kerr_times(double nbar, double chi_aa);

/// First time |a(t)|^2/|a0|^2 drops to 1/e for the exact two-mode solution.
double effective_decay_time(double g, double kappa_out, double delta = 0.0);

}  // namespace catapult

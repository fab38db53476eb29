#include "catapult/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "catapult/error.hpp"
#include "catapult/units.hpp"
#include "catapult/warn.hpp"

namespace catapult {

const std::vector<cplx>& Solution::observable(const std::string& name) const {
  for (std::size_t i = 0; i < observable_names.size(); ++i) {
    if (observable_names[i] == name) return observable_values[i];
  }
  throw Error(ErrorCode::invalid_argument, "solution has no observable '" + name + "'");
}

QuantumState Solution::state(std::size_t i) const {
  if (i >= states.size()) throw Error(ErrorCode::invalid_argument, "state index out of range (states not stored?)");
  StateTolerances tol;
  tol.trace = 1e-6;
  tol.min_eigenvalue = -1e-6;
  tol.hermiticity = 1e-8;
  return QuantumState::from_density(space, states[i], tol);
}

namespace {

double min_eigenvalue(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

Solution evolve_lindblad(const QuantumState& rho0, const TimeDependentHamiltonian& h,
                         const std::vector<CollapseSpec>& collapse, const std::vector<double>& times,
                         const EvolveOptions& opt) {
  if (!(rho0.space() == h.space)) throw Error(ErrorCode::dimension_mismatch, "state and Hamiltonian spaces differ");
  if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) throw Error(ErrorCode::invalid_argument, "tolerances must be positive");
  if (times.empty()) throw Error(ErrorCode::invalid_argument, "empty time grid");

  std::vector<SparseOp> ls, ldl;
  for (const auto& c : collapse) {
    if (!(c.op.space == h.space)) throw Error(ErrorCode::dimension_mismatch, "collapse operator space differs");
    if (!(c.rate >= 0.0) || !std::isfinite(c.rate)) {
      throw Error(ErrorCode::invalid_argument, "collapse rates must be finite and non-negative");
    }
    ls.push_back(to_sparse(c.op.matrix));
    ldl.push_back(to_sparse(c.op.matrix.adjoint() * c.op.matrix));
  }
  const bool static_h = h.terms.empty();
  const bool static_rates =
      std::all_of(collapse.begin(), collapse.end(), [](const CollapseSpec& c) { return !c.modulation; });
  const cplx mi(0.0, -1.0);

  auto build_heff = [&](double t) {
    SparseOp heff = h.at(t);
    for (std::size_t k = 0; k < collapse.size(); ++k) {
      const double r = collapse[k].rate_at(t);
      if (r != 0.0) heff -= cplx(0.0, 0.5 * r) * ldl[k];
    }
    return heff;
  };
  SparseOp heff_static;
  if (static_h && static_rates) heff_static = build_heff(0.0);

  auto rhs = [&](double t, const CMatrix& rho) -> CMatrix {
    const SparseOp heff_t = (static_h && static_rates) ? SparseOp() : build_heff(t);
    const SparseOp& heff = (static_h && static_rates) ? heff_static : heff_t;
    CMatrix x = mi * (heff * rho);
    CMatrix d = x + x.adjoint();
    for (std::size_t k = 0; k < collapse.size(); ++k) {
      const double r = collapse[k].rate_at(t);
      if (r == 0.0) continue;
      const CMatrix lr = ls[k] * rho;
      d += r * (ls[k] * CMatrix(lr.adjoint()));
    }
    return d;
  };

  Solution sol;
  sol.space = h.space;
  sol.min_eigenvalue = 1.0;
  for (const auto& [name, o] : opt.observables) {
    if (!(o.space == h.space)) throw Error(ErrorCode::dimension_mismatch, "observable '" + name + "' space differs");
    sol.observable_names.push_back(name);
    sol.observable_values.emplace_back();
    sol.observable_hermitian.push_back(o.hermiticity_error() < 1e-12);
  }

  auto observe = [&](double t, const CMatrix& rho) {
    sol.times.push_back(t);
    sol.max_trace_error = std::max(sol.max_trace_error, std::abs(rho.trace() - 1.0));
    const double ev = min_eigenvalue(rho);
    sol.min_eigenvalue = std::min(sol.min_eigenvalue, ev);
    if (ev < -opt.positivity_tol) {
      std::ostringstream msg;
      msg << "density matrix lost positivity at t = " << units::to_us(t) << " us (min eigenvalue " << ev << ")";
      throw Error(ErrorCode::positivity, msg.str());
    }
    for (std::size_t k = 0; k < opt.observables.size(); ++k) {
      sol.observable_values[k].push_back((opt.observables[k].second.matrix * rho).trace());
    }
    if (opt.store_states) sol.states.push_back(rho);
  };

  ode::Options oo;
  oo.rtol = opt.rtol;
  oo.atol = opt.atol;
  sol.stats = ode::integrate<CMatrix>(rhs, rho0.density(), times, observe, oo);
  return sol;
}

void write_solution_csv(std::ostream& os, const Solution& sol, const std::vector<std::string>& header) {
  for (const auto& line : header) os << "# " << line << '\n';
  os << "time_us";
  for (std::size_t k = 0; k < sol.observable_names.size(); ++k) {
    const auto& n = sol.observable_names[k];
    if (sol.observable_hermitian[k]) os << ',' << n;
    else os << ",re_" << n << ",im_" << n;
  }
  os << '\n' << std::setprecision(12);
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    os << units::to_us(sol.times[i]);
    for (std::size_t k = 0; k < sol.observable_names.size(); ++k) {
      const cplx v = sol.observable_values[k][i];
      if (sol.observable_hermitian[k]) os << ',' << v.real();
      else os << ',' << v.real() << ',' << v.imag();
    }
    os << '\n';
  }
}

std::vector<double> linspace(double start, double stop, int n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "linspace needs n >= 1");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? start : start + (stop - start) * i / (n - 1);
  return v;
}

std::vector<CollapseSpec> conversion_collapses(const SystemParams& p, const DriveSchedule& schedule,
                                               const Space& space, const ConversionLosses& losses) {
  std::vector<CollapseSpec> c;
  const LinearOp a = mode_operator(op::Annihilate{}, space, Mode::a);
  if (losses.kappa_out) c.push_back({mode_operator(op::Annihilate{}, space, Mode::b), p.kappa_out, {}});
  if (losses.kappa_0 && p.kappa_0 > 0.0) c.push_back({a, p.kappa_0, {}});
  if (losses.kappa_loss && p.kappa_loss_frac > 0.0) {
    c.push_back({a, p.kappa_loss_frac * 4.0 / p.kappa_out, [schedule, p](double t) { return std::norm(schedule.g(t, p)); }});
  }
  return c;
}

namespace {

// sinh(z)/z, accurate near zero
cplx sinhc(cplx z) {
  if (std::abs(z) < 1e-3) {
    const cplx z2 = z * z;
    return 1.0 + z2 / 6.0 + z2 * z2 / 120.0;
  }
  return std::sinh(z) / z;
}

}  // namespace

TwoModeAmplitudes analytic_two_mode(cplx a0, cplx g, double kappa_out, double delta, double t) {
  const cplx gamma(kappa_out, -2.0 * delta);
  cplx beta = std::sqrt(gamma * gamma - 16.0 * std::norm(g));
  if (beta.real() < 0.0) beta = -beta;
  const cplx z = beta * t / 4.0;
  cplx a, sinh_over_beta;  // sinh(beta t/4)/beta, times e^{-gamma t/4}
  if (std::abs(z) <= 1.0) {
    const cplx damp = std::exp(-gamma * t / 4.0);
    a = a0 * damp * (std::cosh(z) + gamma * t / 4.0 * sinhc(z));
    sinh_over_beta = damp * t / 4.0 * sinhc(z);
  } else {
    // recombine exponentials so nothing overflows at long times
    const cplx ep = std::exp((beta - gamma) * t / 4.0);
    const cplx em = std::exp(-(beta + gamma) * t / 4.0);
    a = 0.5 * a0 * (ep * (1.0 + gamma / beta) + em * (1.0 - gamma / beta));
    sinh_over_beta = 0.5 * (ep - em) / beta;
  }
  // e^{-(kappa + 2 i delta) t/4} = e^{-gamma t/4} e^{-i delta t}
  const cplx b = cplx(0.0, -4.0) * g * a0 * sinh_over_beta * std::exp(cplx(0.0, -delta * t));
  return {a, b};
}

double induced_rate(double g, double kappa_out) {
  if (!(kappa_out > 0.0)) throw Error(ErrorCode::invalid_argument, "kappa_out must be positive");
  if (std::abs(g) > 0.2 * kappa_out) {
    warn("g > 0.2 kappa_out: 4g^2/kappa_out is outside its validity range");
  }
  return 4.0 * g * g / kappa_out;
}

double detuned_rate(double g, double kappa_out, double delta) {
  if (!(kappa_out > 0.0)) throw Error(ErrorCode::invalid_argument, "kappa_out must be positive");
  return 4.0 * g * g * kappa_out / (kappa_out * kappa_out + 4.0 * delta * delta);
}

double fock_decay_populations(int m, int n, double kappa, double t) {
  if (n < 0 || m < 0 || n > m) throw Error(ErrorCode::invalid_argument, "need 0 <= n <= m");
  // C(m,n) p^n (1-p)^{m-n} with survival p = e^{-kappa t}; identical to the
  // stated form but stable at long times
  const double p = std::exp(-kappa * t);
  const double logc = std::lgamma(m + 1.0) - std::lgamma(n + 1.0) - std::lgamma(m - n + 1.0);
  if (m == n) return std::pow(p, m);
  if (p == 1.0) return 0.0;
  return std::exp(logc + n * std::log(p) + (m - n) * std::log1p(-p));
}

double kerr_corrected_rate(int n, double g, double kappa_out, double chi_aa) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "kerr_corrected_rate needs n >= 1");
  double sum = 0.0;
  for (int k = 1; k <= n; ++k) sum += detuned_rate(g, kappa_out, (k - 1) * chi_aa);
  return sum;
}

KerrTimes kerr_times(double nbar, double chi_aa) {
  if (chi_aa == 0.0) throw Error(ErrorCode::invalid_argument, "chi_aa = 0 has no Kerr time scales");
  if (!(nbar > 0.0)) throw Error(ErrorCode::invalid_argument, "mean photon number must be positive");
  const double c = std::abs(chi_aa);
  return {units::pi / (2.0 * std::sqrt(nbar) * c), units::two_pi / c};
}

double effective_decay_time(double g, double kappa_out, double delta) {
  auto frac = [&](double t) { return std::norm(analytic_two_mode(1.0, g, kappa_out, delta, t).a); };
  const double target = std::exp(-1.0);
  // bracket on a coarse grid, then bisect
  const double dt = 0.01 / kappa_out;
  double lo = 0.0, hi = dt;
  for (int i = 0; frac(hi) > target; ++i) {
    lo = hi;
    hi += dt * (1 + i / 100);
    if (hi > 1e6 / kappa_out) throw Error(ErrorCode::invalid_argument, "no 1/e crossing found");
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (frac(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace catapult

#include "catapult/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "catapult/error.hpp"

namespace catapult {

std::string_view to_string(Basis b) {
  switch (b) {
    case Basis::number: return "number";
    case Basis::superpos01: return "superpos01";
    case Basis::superpos02: return "superpos02";
    case Basis::coherent: return "coherent";
    case Basis::parity: return "parity";
  }
  return "?";
}

Basis basis_from_string(std::string_view s) {
  for (Basis b : {Basis::number, Basis::superpos01, Basis::superpos02, Basis::coherent, Basis::parity}) {
    if (s == to_string(b)) return b;
  }
  throw Error(ErrorCode::invalid_argument, "unknown cavity basis '" + std::string(s) + "'");
}

CavityMeasurement CavityMeasurement::ideal(Basis b) {
  CavityMeasurement m;
  m.basis = b;
  m.fe = m.fg = 1.0;
  return m;
}

double Povm::completeness_error() const {
  CMatrix sum = CMatrix::Zero(cutoff, cutoff);
  for (const auto& e : elements) sum += e;
  return (sum - CMatrix::Identity(cutoff, cutoff)).cwiseAbs().maxCoeff();
}

std::size_t Povm::index(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  throw Error(ErrorCode::invalid_argument, "POVM has no outcome '" + label + "'");
}

namespace {

CMatrix projector(const CVector& v) { return v * v.adjoint(); }

CVector fock(int n, int cutoff) {
  CVector v = CVector::Zero(cutoff);
  v(n) = 1.0;
  return v;
}

CVector superposition(int n, double sign, int cutoff) {
  CVector v = CVector::Zero(cutoff);
  v(0) = 1.0 / std::sqrt(2.0);
  v(n) = sign / std::sqrt(2.0);
  return v;
}

Eigen::MatrixXd confusion(const CavityMeasurement& m, int k) {
  if (m.assignment.size() > 0) {
    if (m.assignment.rows() != k || m.assignment.cols() != k) {
      throw Error(ErrorCode::dimension_mismatch, "assignment matrix must be " + std::to_string(k) + "x" + std::to_string(k));
    }
    if ((m.assignment.array() < 0.0).any() ||
        (m.assignment.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-9) {
      throw Error(ErrorCode::invalid_argument, "assignment matrix must be row-stochastic");
    }
    return m.assignment;
  }
  if (!(m.fe >= 0.0 && m.fe <= 1.0 && m.fg >= 0.0 && m.fg <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "assignment fidelities must lie in [0, 1]");
  }
  Eigen::MatrixXd a(k, k);
  if (k == 2) {
    a << m.fe, 1.0 - m.fe, 1.0 - m.fg, m.fg;
    return a;
  }
  a.setConstant((1.0 - m.fe) / (k - 1));
  a.diagonal().setConstant(m.fe);
  return a;
}

}  // namespace

Povm cavity_povm(const CavityMeasurement& m, int cutoff) {
  if (cutoff < 2) throw Error(ErrorCode::invalid_argument, "cutoff must be >= 2");
  std::vector<std::string> labels;
  std::vector<CMatrix> targets;  // ideal selected projectors
  switch (m.basis) {
    case Basis::number: {
      const std::vector<int> lv = m.levels.empty() ? std::vector<int>{0, 1} : m.levels;
      for (int n : lv) {
        if (n < 0 || n >= cutoff) throw Error(ErrorCode::invalid_argument, "number-basis level outside the cutoff");
        labels.push_back(std::to_string(n));
        targets.push_back(projector(fock(n, cutoff)));
      }
      break;
    }
    case Basis::superpos01:
      labels = {"+", "-"};
      targets = {projector(superposition(1, 1.0, cutoff)), projector(superposition(1, -1.0, cutoff))};
      break;
    case Basis::superpos02:
      if (cutoff < 3) throw Error(ErrorCode::invalid_argument, "superpos02 needs cutoff >= 3");
      labels = {"+2", "1", "-2"};
      targets = {projector(superposition(2, 1.0, cutoff)), projector(fock(1, cutoff)),
                 projector(superposition(2, -1.0, cutoff))};
      break;
    case Basis::coherent: {
      // D(alpha) then vacuum-selective: selects |-alpha>
      CVector v = coherent_amplitudes(-m.alpha, cutoff);
      labels = {"-alpha", "+alpha"};
      targets = {projector(v)};
      break;
    }
    case Basis::parity: {
      CMatrix even = CMatrix::Zero(cutoff, cutoff);
      for (int n = 0; n < cutoff; n += 2) even(n, n) = 1.0;
      labels = {"even", "odd"};
      targets = {even};
      break;
    }
  }
  const CMatrix id = CMatrix::Identity(cutoff, cutoff);

  Povm povm;
  povm.cutoff = cutoff;
  const int k = static_cast<int>(labels.size());
  if (m.postselect && targets.size() > 1) {
    // one selective run per target, each taken with probability 1/k
    const Eigen::MatrixXd a = confusion(m, 2);
    CMatrix discard = CMatrix::Zero(cutoff, cutoff);
    for (int r = 0; r < k; ++r) {
      const CMatrix& p = targets[r];
      povm.labels.push_back(labels[r]);
      povm.elements.push_back((a(0, 0) * p + a(1, 0) * (id - p)) / k);
      discard += (a(0, 1) * p + a(1, 1) * (id - p)) / k;
    }
    povm.labels.push_back("discard");
    povm.elements.push_back(discard);
    povm.discard = k;
  } else {
    // ideal outcomes: targets[0..k-2] and the complement of their sum
    std::vector<CMatrix> ideal;
    CMatrix rest = id;
    for (int i = 0; i + 1 < k; ++i) {
      ideal.push_back(targets[i]);
      rest -= targets[i];
    }
    ideal.push_back(rest);
    const Eigen::MatrixXd a = confusion(m, k);
    for (int j = 0; j < k; ++j) {
      CMatrix e = CMatrix::Zero(cutoff, cutoff);
      for (int i = 0; i < k; ++i) e += a(i, j) * ideal[i];
      povm.labels.push_back(labels[j]);
      povm.elements.push_back(e);
    }
  }

  if (m.dwell != 0.0 && m.chi_aa != 0.0) {
    CVector phase(cutoff);
    for (int n = 0; n < cutoff; ++n) phase(n) = std::polar(1.0, -0.5 * m.chi_aa * n * (n - 1) * m.dwell);
    for (auto& e : povm.elements) e = phase.conjugate().asDiagonal() * e * phase.asDiagonal();
  }
  return povm;
}

ConditionalResult condition_on_cavity(const QuantumState& joint, const Povm& povm, std::size_t outcome) {
  const Space& s = joint.space();
  if (s.num_modes() != 2 || s.mode(0).label != Mode::a || s.mode(1).label != Mode::b_out) {
    throw Error(ErrorCode::dimension_mismatch, "conditioning expects a joint a (x) b_out state");
  }
  if (s.mode(0).cutoff != povm.cutoff) throw Error(ErrorCode::dimension_mismatch, "POVM cutoff differs from mode a");
  if (outcome >= povm.elements.size()) throw Error(ErrorCode::invalid_argument, "POVM outcome out of range");

  Eigen::SelfAdjointEigenSolver<CMatrix> es(povm.elements[outcome]);
  const CMatrix root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                       es.eigenvectors().adjoint();
  const int nb = s.mode(1).cutoff;
  const CMatrix k = Eigen::kroneckerProduct(root, CMatrix::Identity(nb, nb)).eval();
  const CMatrix r = k * joint.density() * k.adjoint();
  const double p = r.trace().real();
  if (!(p >= 1e-12)) {
    throw Error(ErrorCode::invalid_argument, "outcome '" + povm.labels[outcome] + "' has probability " +
                                                 std::to_string(p) + "; conditional state undefined");
  }
  StateTolerances tol;
  tol.trace = 1e-7;
  tol.min_eigenvalue = -1e-7;
  const auto projected = QuantumState::from_density(s, r / p, tol);
  return {povm.labels[outcome], p, partial_trace(projected, {Mode::b_out})};
}

std::vector<ConditionalResult> condition_all(const QuantumState& joint, const Povm& povm) {
  std::vector<ConditionalResult> out;
  for (std::size_t i = 0; i < povm.elements.size(); ++i) {
    if (static_cast<int>(i) == povm.discard) continue;
    out.push_back(condition_on_cavity(joint, povm, i));
  }
  return out;
}

QuantumState kerr_dwell(const QuantumState& rho, double t, double chi_aa, Mode m) {
  const Space& s = rho.space();
  const std::size_t pos = s.position(m);
  CVector phase(static_cast<Eigen::Index>(s.dim()));
  for (std::size_t i = 0; i < s.dim(); ++i) {
    const int n = s.occupations(i)[pos];
    phase(static_cast<Eigen::Index>(i)) = std::polar(1.0, -0.5 * chi_aa * n * (n - 1) * t);
  }
  if (rho.is_pure()) return QuantumState::from_ket(s, phase.cwiseProduct(rho.ket()));
  return QuantumState::from_density(s, phase.asDiagonal() * rho.density() * phase.conjugate().asDiagonal());
}

CoherentOverlap coherent_overlap(cplx alpha) {
  return {std::exp(-4.0 * std::norm(alpha)), std::exp(-2.0 * std::norm(alpha))};
}

Estimate binomial_estimate(double successes, double trials) {
  if (!(trials > 0.0) || successes < 0.0 || successes > trials) {
    throw Error(ErrorCode::invalid_argument, "binomial estimate needs 0 <= k <= n, n > 0");
  }
  const double p = successes / trials;
  return {p, std::sqrt(p * (1.0 - p) / trials)};
}

namespace {

double witness(const std::array<double, 8>& x) {
  const double pa0 = x[0], pa1 = x[1], pap = x[2], pam = x[3];
  const double b10 = x[4], b01 = x[5], bpp = x[6], bmm = x[7];
  const double prod = pa0 * (1.0 - b10) * pa1 * (1.0 - b01);
  return 0.5 * (pa0 * b10 + pa1 * b01 - 2.0 * std::sqrt(std::max(prod, 0.0)) + pap * bpp + pam * bmm -
                pam * (1.0 - bmm) - pap * (1.0 - bpp));
}

}  // namespace

BellBound bell_bound(const BellStatistics& s) {
  const std::array<Estimate, 8> in = {s.pa0, s.pa1, s.pa_plus, s.pa_minus,
                                      s.pb1_given0, s.pb0_given1, s.pbplus_given_plus, s.pbminus_given_minus};
  std::array<double, 8> x;
  for (std::size_t i = 0; i < 8; ++i) {
    if (!(in[i].value >= -1e-12 && in[i].value <= 1.0 + 1e-12) || !(in[i].error >= 0.0)) {
      throw Error(ErrorCode::invalid_argument, "witness inputs must be probabilities with non-negative errors");
    }
    x[i] = std::clamp(in[i].value, 0.0, 1.0);
  }
  if (std::abs(x[0] + x[1] - 1.0) > 1e-6 || std::abs(x[2] + x[3] - 1.0) > 1e-6) {
    throw Error(ErrorCode::invalid_argument, "cavity outcome probabilities of each basis must sum to 1");
  }
  BellBound b;
  b.value = witness(x);
  double var = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    if (in[i].error == 0.0) continue;
    auto hi = x, lo = x;
    hi[i] = std::min(1.0, x[i] + in[i].error);
    lo[i] = std::max(0.0, x[i] - in[i].error);
    const double d = (witness(hi) - witness(lo)) / (hi[i] - lo[i]) * in[i].error;
    var += d * d;
  }
  b.error = std::sqrt(var);
  return b;
}

MixingFit fit_mixing_fraction(const Marginal& measured, const std::vector<double>& d_i,
                              const std::vector<double>& d_ibar, double max_reduced_chi2) {
  const std::size_t n = measured.density.size();
  if (d_i.size() != n || d_ibar.size() != n || measured.counts.size() != n) {
    throw Error(ErrorCode::dimension_mismatch, "marginals must share bins and carry counts");
  }
  if (measured.total == 0 || !(measured.bin_width > 0.0)) throw Error(ErrorCode::invalid_argument, "empty marginal");
  const double scale = static_cast<double>(measured.total) * measured.bin_width;
  MixingFit f;
  f.alpha = 0.5;
  for (int pass = 0; pass < 3; ++pass) {
    double swd = 0.0, sdd = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double model = f.alpha * d_i[k] + (1.0 - f.alpha) * d_ibar[k];
      const double var = std::max(model * scale, 1.0) / (scale * scale);
      const double delta = d_i[k] - d_ibar[k];
      swd += delta * (measured.density[k] - d_ibar[k]) / var;
      sdd += delta * delta / var;
    }
    if (!(sdd > 0.0)) throw Error(ErrorCode::fit_failed, "ideal marginals are indistinguishable");
    f.alpha = std::clamp(swd / sdd, 0.0, 1.0);
    f.error = 1.0 / std::sqrt(sdd);
  }
  f.chi2 = 0.0;
  f.dof = -1;
  for (std::size_t k = 0; k < n; ++k) {
    const double model = f.alpha * d_i[k] + (1.0 - f.alpha) * d_ibar[k];
    if (model * scale < 1.0 && measured.counts[k] == 0.0) continue;
    const double var = std::max(model * scale, 1.0) / (scale * scale);
    f.chi2 += std::pow(measured.density[k] - model, 2) / var;
    ++f.dof;
  }
  if (f.reduced_chi2() > max_reduced_chi2) {
    throw Error(ErrorCode::fit_failed, "mixing-fraction fit residual too large (reduced chi2 " +
                                           std::to_string(f.reduced_chi2()) + ")");
  }
  return f;
}

namespace {

// multinomial draw by successive binomials
std::vector<std::size_t> multinomial(std::size_t n, const std::vector<double>& p, std::mt19937_64& rng) {
  std::vector<std::size_t> out(p.size(), 0);
  double left = 1.0;
  std::size_t remaining = n;
  for (std::size_t i = 0; i + 1 < p.size() && remaining > 0; ++i) {
    const double q = left > 0.0 ? std::clamp(p[i] / left, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::size_t> b(remaining, q);
    out[i] = b(rng);
    remaining -= out[i];
    left -= p[i];
  }
  out.back() += remaining;
  return out;
}

QuantumState itinerant(const CVector& v) {
  return QuantumState::from_ket(Space{FockSpace(static_cast<int>(v.size()), Mode::b_out)}, v.normalized());
}

}  // namespace

BellPipelineResult simulate_bell_experiment(const QuantumState& joint, const BellPipelineOptions& opt) {
  opt.detector.validate();
  if (opt.shots == 0) throw Error(ErrorCode::invalid_argument, "need at least one cavity measurement per basis");
  const int na = joint.space().cutoff(Mode::a);
  const int nb = joint.space().cutoff(Mode::b_out);
  BellPipelineResult res;

  struct Plan {
    Basis basis;
    std::vector<CVector> correlated;  // itinerant state expected for each cavity outcome
    std::vector<CVector> anti;
  };
  const CVector b0 = fock(0, nb), b1 = fock(1, nb);
  const CVector bp = superposition(1, 1.0, nb), bm = superposition(1, -1.0, nb);
  const std::vector<Plan> plans = {{Basis::number, {b1, b0}, {b0, b1}}, {Basis::superpos01, {bp, bm}, {bm, bp}}};

  std::vector<Estimate> pa(4), pb(4);
  for (std::size_t bi = 0; bi < plans.size(); ++bi) {
    const Plan& plan = plans[bi];
    CavityMeasurement m;
    m.basis = plan.basis;
    m.fe = opt.fe;
    m.fg = opt.fg;
    m.postselect = opt.postselect;
    const Povm povm = cavity_povm(m, na);
    std::vector<double> probs;
    std::vector<ConditionalResult> cond;
    for (std::size_t k = 0; k < povm.elements.size(); ++k) {
      if (static_cast<int>(k) == povm.discard) {
        probs.push_back(0.0);  // filled in below
        continue;
      }
      cond.push_back(condition_on_cavity(joint, povm, k));
      probs.push_back(cond.back().probability);
    }
    if (povm.discard >= 0) {
      double kept = 0.0;
      for (double p : probs) kept += p;
      probs[static_cast<std::size_t>(povm.discard)] = std::max(0.0, 1.0 - kept);
    }
    std::seed_seq ss{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                     static_cast<std::uint32_t>(bi), 0x5eedu};
    std::mt19937_64 rng(ss);
    const auto counts = multinomial(opt.shots, probs, rng);
    std::size_t kept_total = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (static_cast<int>(k) != povm.discard) kept_total += counts[k];
    }
    if (kept_total == 0) throw Error(ErrorCode::sampling, "no cavity outcome kept");

    for (std::size_t c = 0; c < 2; ++c) {
      const std::size_t k = povm.index(cond[c].label);
      BellOutcome o;
      o.basis = std::string(to_string(plan.basis));
      o.label = cond[c].label;
      o.shots = counts[k];
      o.probability = static_cast<double>(counts[k]) / static_cast<double>(kept_total);
      pa[2 * bi + c] = binomial_estimate(static_cast<double>(counts[k]), static_cast<double>(kept_total));
      if (o.shots < 2) throw Error(ErrorCode::sampling, "too few shots for outcome '" + o.label + "'");
      const auto lossy = loss_channel(cond[c].state, opt.detector.eta);
      const auto shots = sample_heterodyne(lossy, opt.detector, o.shots, opt.seed * 1000003ULL + 17 * bi + c);
      o.histogram = histogram_q(shots, opt.grid);
      o.marginal = axis_marginal(o.histogram, Axis::I);
      o.ideal_correlated =
          exact_axis_marginal(loss_channel(itinerant(plan.correlated[c]), opt.detector.eta), Axis::I,
                              o.marginal.centers, o.marginal.bin_width).density;
      o.ideal_anticorrelated =
          exact_axis_marginal(loss_channel(itinerant(plan.anti[c]), opt.detector.eta), Axis::I,
                              o.marginal.centers, o.marginal.bin_width).density;
      o.fit = fit_mixing_fraction(o.marginal, o.ideal_correlated, o.ideal_anticorrelated);
      pb[2 * bi + c] = {o.fit.alpha, o.fit.error};
      res.outcomes.push_back(std::move(o));
    }
  }
  res.statistics = {pa[0], pa[1], pa[2], pa[3], pb[0], pb[1], pb[2], pb[3]};
  // the two kept outcomes of each basis are complementary
  res.statistics.pa1.value = 1.0 - res.statistics.pa0.value;
  res.statistics.pa_minus.value = 1.0 - res.statistics.pa_plus.value;
  res.bound = bell_bound(res.statistics);
  return res;
}

BellBound exact_bell_bound(const QuantumState& joint) {
  const int na = joint.space().cutoff(Mode::a);
  const int nb = joint.space().cutoff(Mode::b_out);
  auto stats_for = [&](Basis b, const CVector& c0, const CVector& c1) {
    const auto cond = condition_all(joint, cavity_povm(CavityMeasurement::ideal(b), na));
    // only the two outcomes spanning the qubit subspace enter
    const double p0 = cond[0].probability, p1 = cond[1].probability;
    const double q0 = (c0.adjoint() * cond[0].state.density() * c0)(0).real();
    const double q1 = (c1.adjoint() * cond[1].state.density() * c1)(0).real();
    return std::array<double, 4>{p0 / (p0 + p1), p1 / (p0 + p1), q0, q1};
  };
  const auto num = stats_for(Basis::number, fock(1, nb), fock(0, nb));
  const auto rot = stats_for(Basis::superpos01, superposition(1, 1.0, nb), superposition(1, -1.0, nb));
  BellStatistics s;
  s.pa0 = {num[0], 0.0};
  s.pa1 = {num[1], 0.0};
  s.pb1_given0 = {num[2], 0.0};
  s.pb0_given1 = {num[3], 0.0};
  s.pa_plus = {rot[0], 0.0};
  s.pa_minus = {rot[1], 0.0};
  s.pbplus_given_plus = {rot[2], 0.0};
  s.pbminus_given_minus = {rot[3], 0.0};
  return bell_bound(s);
}

}  // namespace catapult

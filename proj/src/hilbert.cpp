#include "catapult/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "catapult/error.hpp"

namespace catapult {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::a: return "a";
    case Mode::b: return "b";
    case Mode::b_out: return "b_out";
    case Mode::e: return "e";
  }
  return "?";
}

Mode mode_from_string(std::string_view s) {
  if (s == "a") return Mode::a;
  if (s == "b") return Mode::b;
  if (s == "b_out") return Mode::b_out;
  if (s == "e") return Mode::e;
  throw Error(ErrorCode::unknown_mode, "unknown mode label '" + std::string(s) + "'");
}

FockSpace::FockSpace(int cutoff_, Mode label_) : cutoff(cutoff_), label(label_) {
  if (cutoff < 2) {
    throw Error(ErrorCode::invalid_argument, "Fock cutoff must be >= 2, got " + std::to_string(cutoff));
  }
}

Space::Space(std::vector<FockSpace> modes) : modes_(std::move(modes)) {
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (modes_[i].cutoff < 2) {
      throw Error(ErrorCode::invalid_argument, "Fock cutoff must be >= 2");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (modes_[i].label == modes_[j].label) {
        throw Error(ErrorCode::invalid_argument,
                    "duplicate mode label '" + std::string(to_string(modes_[i].label)) + "'");
      }
    }
    dim_ *= static_cast<std::size_t>(modes_[i].cutoff);
  }
}

bool Space::contains(Mode m) const {
  return std::any_of(modes_.begin(), modes_.end(), [m](const FockSpace& f) { return f.label == m; });
}

std::size_t Space::position(Mode m) const {
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (modes_[i].label == m) return i;
  }
  throw Error(ErrorCode::unknown_mode, "mode '" + std::string(to_string(m)) + "' is not part of the space");
}

std::size_t Space::index(const std::vector<int>& occupations) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    idx = idx * static_cast<std::size_t>(modes_[i].cutoff) + static_cast<std::size_t>(occupations[i]);
  }
  return idx;
}

std::vector<int> Space::occupations(std::size_t index) const {
  std::vector<int> occ(modes_.size());
  for (std::size_t i = modes_.size(); i-- > 0;) {
    occ[i] = static_cast<int>(index % static_cast<std::size_t>(modes_[i].cutoff));
    index /= static_cast<std::size_t>(modes_[i].cutoff);
  }
  return occ;
}

bool operator==(const Space& lhs, const Space& rhs) {
  if (lhs.modes_.size() != rhs.modes_.size()) return false;
  for (std::size_t i = 0; i < lhs.modes_.size(); ++i) {
    if (lhs.modes_[i].cutoff != rhs.modes_[i].cutoff || lhs.modes_[i].label != rhs.modes_[i].label) return false;
  }
  return true;
}

Space tensor(const Space& s1, const Space& s2) {
  std::vector<FockSpace> modes = s1.modes();
  modes.insert(modes.end(), s2.modes().begin(), s2.modes().end());
  return Space(std::move(modes));
}

// ---------------------------------------------------------------- operators

LinearOp::LinearOp(Space space_, CMatrix matrix_) : space(std::move(space_)), matrix(std::move(matrix_)) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  if (matrix.rows() != d || matrix.cols() != d) {
    throw Error(ErrorCode::dimension_mismatch, "operator matrix does not match space dimension");
  }
}

namespace {
void require_same_space(const Space& a, const Space& b) {
  if (!(a == b)) throw Error(ErrorCode::dimension_mismatch, "operators act on different spaces");
}
}  // namespace

LinearOp LinearOp::operator*(const LinearOp& rhs) const {
  require_same_space(space, rhs.space);
  return {space, matrix * rhs.matrix};
}
LinearOp LinearOp::operator+(const LinearOp& rhs) const {
  require_same_space(space, rhs.space);
  return {space, matrix + rhs.matrix};
}
LinearOp LinearOp::operator-(const LinearOp& rhs) const {
  require_same_space(space, rhs.space);
  return {space, matrix - rhs.matrix};
}

double LinearOp::unitarity_error() const {
  const CMatrix d = matrix.adjoint() * matrix - CMatrix::Identity(matrix.rows(), matrix.cols());
  return d.cwiseAbs().maxCoeff();
}

double LinearOp::hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }

LinearOp identity(const Space& space) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  return {space, CMatrix::Identity(d, d)};
}

CMatrix displacement_matrix(cplx alpha, int cutoff) {
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
    throw Error(ErrorCode::invalid_argument, "displacement amplitude must be finite");
  }
  const CMatrix a = single_mode_matrix(op::Annihilate{}, cutoff);
  const CMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
  return gen.exp();
}

CMatrix single_mode_matrix(const OpKind& kind, int cutoff) {
  if (cutoff < 2) throw Error(ErrorCode::invalid_argument, "Fock cutoff must be >= 2");
  const Eigen::Index n = cutoff;
  CMatrix m = CMatrix::Zero(n, n);
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, op::Annihilate>) {
          for (Eigen::Index i = 1; i < n; ++i) m(i - 1, i) = std::sqrt(static_cast<double>(i));
        } else if constexpr (std::is_same_v<K, op::Create>) {
          for (Eigen::Index i = 1; i < n; ++i) m(i, i - 1) = std::sqrt(static_cast<double>(i));
        } else if constexpr (std::is_same_v<K, op::Number>) {
          for (Eigen::Index i = 0; i < n; ++i) m(i, i) = static_cast<double>(i);
        } else if constexpr (std::is_same_v<K, op::Parity>) {
          for (Eigen::Index i = 0; i < n; ++i) m(i, i) = (i % 2 == 0) ? 1.0 : -1.0;
        } else {
          m = displacement_matrix(k.alpha, cutoff);
        }
      },
      kind);
  return m;
}

LinearOp mode_operator(const OpKind& kind, const Space& space, Mode target) {
  const std::size_t pos = space.position(target);
  CMatrix result = CMatrix::Identity(1, 1);
  for (std::size_t i = 0; i < space.num_modes(); ++i) {
    const int c = space.mode(i).cutoff;
    const CMatrix factor = (i == pos) ? single_mode_matrix(kind, c) : CMatrix::Identity(c, c);
    result = Eigen::kroneckerProduct(result, factor).eval();
  }
  return {space, std::move(result)};
}

namespace {

// Generalized Laguerre L_n^{(k)}(x) by upward recurrence in n.
double laguerre(int n, double k, double x) {
  if (n == 0) return 1.0;
  double l0 = 1.0;
  double l1 = 1.0 + k - x;
  for (int j = 1; j < n; ++j) {
    const double l2 = ((2.0 * j + 1.0 + k - x) * l1 - (j + k) * l0) / (j + 1.0);
    l0 = l1;
    l1 = l2;
  }
  return l1;
}

}  // namespace

CMatrix displaced_fock_elements(cplx beta, int rows, int cols) {
  CMatrix m = CMatrix::Zero(rows, cols);
  const double x = std::norm(beta);
  if (x == 0.0) {
    for (int i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
    return m;
  }
  const double log_abs = 0.5 * std::log(x);
  const double phase = std::arg(beta);
  for (int n = 0; n < rows; ++n) {
    for (int k = 0; k < cols; ++k) {
      const int lo = std::min(n, k);
      const int hi = std::max(n, k);
      const int diff = hi - lo;
      const double log_pref =
          0.5 * (std::lgamma(lo + 1.0) - std::lgamma(hi + 1.0)) + diff * log_abs - 0.5 * x;
      const double lag = laguerre(lo, diff, x);
      // n >= k: beta^(n-k); n < k: (-beta*)^(k-n)
      const double ang = (n >= k) ? diff * phase : diff * (std::numbers::pi - phase);
      m(n, k) = std::polar(std::exp(log_pref) * lag, ang);
    }
  }
  return m;
}

CVector coherent_amplitudes(cplx alpha, int cutoff) {
  CVector v(cutoff);
  const double pref = std::exp(-0.5 * std::norm(alpha));
  cplx term = pref;
  for (int n = 0; n < cutoff; ++n) {
    if (n > 0) term *= alpha / std::sqrt(static_cast<double>(n));
    v(n) = term;
  }
  return v;
}

// ------------------------------------------------------------------- states

QuantumState QuantumState::from_ket(Space space, CVector ket, const StateTolerances& tol) {
  if (static_cast<std::size_t>(ket.size()) != space.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "ket dimension does not match space");
  }
  if (!ket.allFinite()) throw Error(ErrorCode::invalid_argument, "ket has non-finite entries");
  const double norm = ket.norm();
  if (std::abs(norm - 1.0) > tol.norm) {
    std::ostringstream msg;
    msg << "ket is not normalized (norm " << std::setprecision(12) << norm << ")";
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
  return {std::move(space), std::move(ket)};
}

QuantumState QuantumState::from_density(Space space, CMatrix rho, const StateTolerances& tol) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  if (rho.rows() != d || rho.cols() != d) {
    throw Error(ErrorCode::dimension_mismatch, "density matrix dimension does not match space");
  }
  if (!rho.allFinite()) throw Error(ErrorCode::invalid_argument, "density matrix has non-finite entries");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol.hermiticity) {
    throw Error(ErrorCode::invalid_argument, "density matrix is not Hermitian");
  }
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > tol.trace) {
    std::ostringstream msg;
    msg << "density matrix trace " << std::setprecision(12) << tr << " differs from 1";
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
  const CMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < tol.min_eigenvalue) {
    std::ostringstream msg;
    msg << "density matrix is not positive (min eigenvalue " << es.eigenvalues().minCoeff() << ")";
    throw Error(ErrorCode::positivity, msg.str());
  }
  return {std::move(space), herm};
}

const CVector& QuantumState::ket() const {
  if (!is_pure()) throw Error(ErrorCode::invalid_argument, "state is not a ket");
  return std::get<CVector>(repr_);
}

CMatrix QuantumState::density() const {
  if (is_pure()) {
    const auto& k = std::get<CVector>(repr_);
    return k * k.adjoint();
  }
  return std::get<CMatrix>(repr_);
}

QuantumState QuantumState::to_density() const { return {space_, density()}; }

cplx QuantumState::expectation(const LinearOp& op) const {
  if (!(op.space == space_)) throw Error(ErrorCode::dimension_mismatch, "operator and state spaces differ");
  if (is_pure()) {
    const auto& k = std::get<CVector>(repr_);
    return k.dot(op.matrix * k);
  }
  return (op.matrix * std::get<CMatrix>(repr_)).trace();
}

std::vector<double> QuantumState::populations() const {
  std::vector<double> p(space_.dim());
  if (is_pure()) {
    const auto& k = std::get<CVector>(repr_);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(k(static_cast<Eigen::Index>(i)));
  } else {
    const auto& r = std::get<CMatrix>(repr_);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    }
  }
  return p;
}

std::vector<double> QuantumState::photon_distribution(Mode m) const {
  const std::size_t pos = space_.position(m);
  std::vector<double> dist(static_cast<std::size_t>(space_.mode(pos).cutoff), 0.0);
  const auto pops = populations();
  for (std::size_t i = 0; i < pops.size(); ++i) {
    dist[static_cast<std::size_t>(space_.occupations(i)[pos])] += pops[i];
  }
  return dist;
}

double QuantumState::mean_photons(Mode m) const {
  const auto dist = photon_distribution(m);
  double n = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) n += static_cast<double>(k) * dist[k];
  return n;
}

double QuantumState::top_level_population(Mode m) const { return photon_distribution(m).back(); }

double cat_normalization(cplx alpha, int parity) {
  const double overlap = std::exp(-2.0 * std::norm(alpha));
  return 1.0 / std::sqrt(2.0 * (1.0 + (parity >= 0 ? overlap : -overlap)));
}

namespace {

// Population of level n in the untruncated state, used for cutoff hints.
double untruncated_level_population(const StateSpec& spec, int n) {
  return std::visit(
      [n](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, state::Fock>) {
          return n == s.n ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<S, state::FockSuperposition>) {
          return (n == 0 || n == s.n) ? 0.5 : 0.0;
        } else if constexpr (std::is_same_v<S, state::Coherent>) {
          const double x = std::norm(s.alpha);
          if (x == 0.0) return n == 0 ? 1.0 : 0.0;
          return std::exp(-x + n * std::log(x) - std::lgamma(n + 1.0));
        } else if constexpr (std::is_same_v<S, state::Cat>) {
          const double x = std::norm(s.alpha);
          if (x == 0.0) return n == 0 ? 1.0 : 0.0;
          const bool allowed = (s.parity >= 0) == (n % 2 == 0);
          if (!allowed) return 0.0;
          const double nn = cat_normalization(s.alpha, s.parity);
          return 4.0 * nn * nn * std::exp(-x + n * std::log(x) - std::lgamma(n + 1.0));
        } else {
          return n < s.amplitudes.size() ? std::norm(s.amplitudes(n)) : 0.0;
        }
      },
      spec);
}

int required_cutoff(const StateSpec& spec, double tol) {
  for (int c = 2; c < 4096; ++c) {
    bool ok = untruncated_level_population(spec, c - 1) < tol;
    // also require all higher levels to stay small
    for (int k = c; k < c + 8 && ok; ++k) ok = untruncated_level_population(spec, k) < tol;
    if (ok) return c;
  }
  return -1;
}

}  // namespace

QuantumState make_state(const StateSpec& spec, const FockSpace& fs, double leakage_tol) {
  const int c = fs.cutoff;
  CVector v = CVector::Zero(c);
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, state::Fock>) {
          if (s.n < 0 || s.n >= c) {
            throw Error(ErrorCode::leakage, "Fock level " + std::to_string(s.n) + " needs cutoff >= " +
                                                std::to_string(s.n + 2));
          }
          v(s.n) = 1.0;
        } else if constexpr (std::is_same_v<S, state::FockSuperposition>) {
          if (s.n <= 0 || s.n >= c) {
            throw Error(ErrorCode::leakage, "superposition level " + std::to_string(s.n) +
                                                " needs cutoff >= " + std::to_string(s.n + 2));
          }
          v(0) = 1.0 / std::sqrt(2.0);
          v(s.n) = s.relative_phase / std::abs(s.relative_phase) / std::sqrt(2.0);
        } else if constexpr (std::is_same_v<S, state::Coherent>) {
          v = coherent_amplitudes(s.alpha, c);
        } else if constexpr (std::is_same_v<S, state::Cat>) {
          const double sign = s.parity >= 0 ? 1.0 : -1.0;
          v = coherent_amplitudes(s.alpha, c) + sign * coherent_amplitudes(-s.alpha, c);
          if (v.norm() == 0.0) throw Error(ErrorCode::invalid_argument, "odd cat with alpha = 0 is undefined");
        } else {
          if (s.amplitudes.size() != c) {
            throw Error(ErrorCode::dimension_mismatch, "custom ket size does not match cutoff");
          }
          v = s.amplitudes;
        }
      },
      spec);

  const double top = untruncated_level_population(spec, c - 1);
  const double beyond = [&] {
    double s = 0.0;
    for (int k = c; k < c + 8; ++k) s += untruncated_level_population(spec, k);
    return s;
  }();
  const double leak = std::max(top, beyond) / std::max(v.squaredNorm(), 1e-300);
  if (leak > leakage_tol) {
    std::ostringstream msg;
    msg << "truncation leakage " << leak << " exceeds " << leakage_tol << " at cutoff " << c;
    if (const int need = required_cutoff(spec, leakage_tol); need > 0) msg << "; use cutoff >= " << need;
    throw Error(ErrorCode::leakage, msg.str());
  }
  v.normalize();
  return QuantumState::from_ket(Space{fs}, std::move(v));
}

QuantumState tensor(const QuantumState& s1, const QuantumState& s2) {
  Space joint = tensor(s1.space(), s2.space());
  if (s1.is_pure() && s2.is_pure()) {
    CVector k = Eigen::kroneckerProduct(s1.ket(), s2.ket()).eval();
    return QuantumState::from_ket(std::move(joint), std::move(k));
  }
  CMatrix r = Eigen::kroneckerProduct(s1.density(), s2.density()).eval();
  return QuantumState::from_density(std::move(joint), std::move(r));
}

QuantumState partial_trace(const QuantumState& st, const std::vector<Mode>& keep) {
  if (keep.empty()) throw Error(ErrorCode::invalid_argument, "partial trace needs a non-empty keep set");
  const Space& full = st.space();
  std::vector<bool> kept(full.num_modes(), false);
  for (Mode m : keep) kept[full.position(m)] = true;

  std::vector<FockSpace> keep_modes, trace_modes;
  for (std::size_t i = 0; i < full.num_modes(); ++i) {
    (kept[i] ? keep_modes : trace_modes).push_back(full.mode(i));
  }
  Space kept_space(keep_modes);
  if (trace_modes.empty()) return st;
  Space traced_space(trace_modes);

  const std::size_t dk = kept_space.dim();
  const std::size_t dt = traced_space.dim();
  // full index of (kept i, traced k)
  std::vector<Eigen::Index> full_index(dk * dt);
  for (std::size_t i = 0; i < dk; ++i) {
    const auto oi = kept_space.occupations(i);
    for (std::size_t k = 0; k < dt; ++k) {
      const auto ok = traced_space.occupations(k);
      std::vector<int> occ(full.num_modes());
      std::size_t ii = 0, kk = 0;
      for (std::size_t m = 0; m < full.num_modes(); ++m) occ[m] = kept[m] ? oi[ii++] : ok[kk++];
      full_index[i * dt + k] = static_cast<Eigen::Index>(full.index(occ));
    }
  }

  CMatrix red = CMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  if (st.is_pure()) {
    const CVector& psi = st.ket();
    // red = M M^dagger with M(i,k) = psi(full(i,k))
    CMatrix m(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dt));
    for (std::size_t i = 0; i < dk; ++i) {
      for (std::size_t k = 0; k < dt; ++k) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = psi(full_index[i * dt + k]);
      }
    }
    red = m * m.adjoint();
  } else {
    const CMatrix rho = st.density();
    for (std::size_t i = 0; i < dk; ++i) {
      for (std::size_t j = 0; j < dk; ++j) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < dt; ++k) s += rho(full_index[i * dt + k], full_index[j * dt + k]);
        red(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
      }
    }
  }
  StateTolerances tol;
  tol.trace = 1e-7;
  return QuantumState::from_density(std::move(kept_space), std::move(red), tol);
}

namespace {
CMatrix psd_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace

double fidelity(const QuantumState& s1, const QuantumState& s2) {
  if (!(s1.space() == s2.space())) throw Error(ErrorCode::dimension_mismatch, "fidelity of states on different spaces");
  double f;
  if (s1.is_pure() && s2.is_pure()) {
    f = std::norm(s1.ket().dot(s2.ket()));
  } else if (s1.is_pure()) {
    f = s1.ket().dot(s2.density() * s1.ket()).real();
  } else if (s2.is_pure()) {
    f = s2.ket().dot(s1.density() * s2.ket()).real();
  } else {
    const CMatrix sr = psd_sqrt(s1.density());
    const CMatrix inner = sr * s2.density() * sr;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
    const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    f = tr * tr;
  }
  return std::clamp(f, 0.0, 1.0);
}

// -------------------------------------------------------------- phase space

double PhaseGrid::re_at(int i) const { return n_re == 1 ? re_min : re_min + i * d_re(); }
double PhaseGrid::im_at(int j) const { return n_im == 1 ? im_min : im_min + j * d_im(); }
double PhaseGrid::d_re() const { return n_re > 1 ? (re_max - re_min) / (n_re - 1) : 1.0; }
double PhaseGrid::d_im() const { return n_im > 1 ? (im_max - im_min) / (n_im - 1) : 1.0; }

namespace {

const CMatrix& single_mode_rho(const QuantumState& st, CMatrix& storage) {
  if (st.space().num_modes() != 1) {
    throw Error(ErrorCode::dimension_mismatch, "phase-space functions need a single-mode state");
  }
  storage = st.density();
  return storage;
}

template <class F>
PhaseSpaceField sample_field(const PhaseGrid& grid, F&& f) {
  if (grid.n_re < 2 || grid.n_im < 2) throw Error(ErrorCode::invalid_argument, "phase grid needs >= 2 points per axis");
  PhaseSpaceField field;
  field.grid = grid;
  field.values.resize(grid.n_im, grid.n_re);
  for (int j = 0; j < grid.n_im; ++j) {
    for (int i = 0; i < grid.n_re; ++i) field.values(j, i) = f(cplx(grid.re_at(i), grid.im_at(j)));
  }
  // trapezoid rule
  double s = 0.0;
  for (int j = 0; j < grid.n_im; ++j) {
    const double wj = (j == 0 || j == grid.n_im - 1) ? 0.5 : 1.0;
    for (int i = 0; i < grid.n_re; ++i) {
      const double wi = (i == 0 || i == grid.n_re - 1) ? 0.5 : 1.0;
      s += wi * wj * field.values(j, i);
    }
  }
  field.integral = s * grid.d_re() * grid.d_im();
  field.truncated = std::abs(field.integral - 1.0) > 1e-2;
  return field;
}

}  // namespace

double husimi_q_at(const CMatrix& rho, cplx alpha) {
  const CVector c = coherent_amplitudes(alpha, static_cast<int>(rho.rows()));
  return c.dot(rho * c).real() / std::numbers::pi;
}

double wigner_at(const CMatrix& rho, cplx alpha) {
  const int cutoff = static_cast<int>(rho.rows());
  const double r = std::abs(alpha);
  const int rows = cutoff + static_cast<int>(std::ceil(r * r + 12.0 * r)) + 40;
  const CMatrix m = displaced_fock_elements(-alpha, rows, cutoff);
  const CMatrix x = m * rho;
  double w = 0.0;
  for (int n = 0; n < rows; ++n) {
    const double d = (x.row(n).array() * m.row(n).array().conjugate()).sum().real();
    w += (n % 2 == 0 ? 1.0 : -1.0) * d;
  }
  return 2.0 / std::numbers::pi * w;
}

PhaseSpaceField husimi_q(const QuantumState& st, const PhaseGrid& grid) {
  CMatrix storage;
  const CMatrix& rho = single_mode_rho(st, storage);
  return sample_field(grid, [&](cplx a) { return husimi_q_at(rho, a); });
}

PhaseSpaceField wigner(const QuantumState& st, const PhaseGrid& grid) {
  CMatrix storage;
  const CMatrix& rho = single_mode_rho(st, storage);
  return sample_field(grid, [&](cplx a) { return wigner_at(rho, a); });
}

void write_field_csv(std::ostream& os, const PhaseSpaceField& field, const std::vector<std::string>& header) {
  for (const auto& h : header) os << "# " << h << '\n';
  os << "re,im,value\n";
  os << std::setprecision(10);
  for (int j = 0; j < field.grid.n_im; ++j) {
    for (int i = 0; i < field.grid.n_re; ++i) {
      os << field.grid.re_at(i) << ',' << field.grid.im_at(j) << ',' << field.values(j, i) << '\n';
    }
  }
}

}  // namespace catapult

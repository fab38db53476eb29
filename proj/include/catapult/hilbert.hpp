#pragma once

// Truncated Fock-space linear algebra: modes, operators, states and the
// phase-space functions (Husimi Q, Wigner) used by the detection model.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace catapult {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Physical mode labels. a: storage cavity, b: output resonator,
/// b_out: itinerant temporal mode, e: environment port of a loss channel.
enum class Mode { a, b, b_out, e };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct FockSpace {
  int cutoff = 2;  // levels |0> .. |cutoff-1>
  Mode label = Mode::a;

  FockSpace() = default;
  FockSpace(int cutoff_, Mode label_);
};

/// Ordered tensor product of FockSpaces with distinct labels. The first mode
/// is the most significant index of the flattened basis.
class Space {
 public:
  Space() = default;
  explicit Space(std::vector<FockSpace> modes);
  Space(std::initializer_list<FockSpace> modes) : Space(std::vector<FockSpace>(modes)) {}

  std::size_t dim() const { return dim_; }
  std::size_t num_modes() const { return modes_.size(); }
  const std::vector<FockSpace>& modes() const { return modes_; }
  const FockSpace& mode(std::size_t i) const { return modes_.at(i); }

  bool contains(Mode m) const;
  /// Position of a mode in the product; throws unknown_mode.
  std::size_t position(Mode m) const;
  int cutoff(Mode m) const { return modes_[position(m)].cutoff; }

  /// Flattened index of a multi-index of occupations (one per mode).
  std::size_t index(const std::vector<int>& occupations) const;
  std::vector<int> occupations(std::size_t index) const;

  friend bool operator==(const Space& lhs, const Space& rhs);

 private:
  std::vector<FockSpace> modes_;
  std::size_t dim_ = 1;
};

Space tensor(const Space& s1, const Space& s2);

struct LinearOp {
  Space space;
  CMatrix matrix;

  LinearOp() = default;
  LinearOp(Space space_, CMatrix matrix_);

  LinearOp adjoint() const { return {space, matrix.adjoint()}; }
  LinearOp operator*(const LinearOp& rhs) const;
  LinearOp operator+(const LinearOp& rhs) const;
  LinearOp operator-(const LinearOp& rhs) const;
  LinearOp operator*(cplx s) const { return {space, matrix * s}; }

  /// max-abs entry of U^dagger U - 1.
  double unitarity_error() const;
  double hermiticity_error() const;
};

LinearOp identity(const Space& space);

namespace op {
struct Annihilate {};
struct Create {};
struct Number {};
struct Parity {};
struct Displacement {
  cplx alpha;
};
}  // namespace op

using OpKind = std::variant<op::Annihilate, op::Create, op::Number, op::Parity, op::Displacement>;

/// Single-mode operator on `target`, embedded with identities on the others.
LinearOp mode_operator(const OpKind& kind, const Space& space, Mode target);

/// Single-mode matrix of an operator kind on a cutoff-dimensional space.
CMatrix single_mode_matrix(const OpKind& kind, int cutoff);

/// Matrix exponential of alpha a^dagger - alpha* a (Pade scaling-and-squaring).
CMatrix displacement_matrix(cplx alpha, int cutoff);

/// Exact <n|D(beta)|m> for 0 <= n < rows, 0 <= m < cols, no truncation of
/// the infinite-dimensional operator (Laguerre closed form).
CMatrix displaced_fock_elements(cplx beta, int rows, int cols);

/// Amplitudes <n|alpha> of an untruncated coherent state for n < cutoff.
CVector coherent_amplitudes(cplx alpha, int cutoff);

struct StateTolerances {
  double norm = 1e-9;
  double trace = 1e-8;
  double min_eigenvalue = -1e-8;
  double hermiticity = 1e-9;
};

/// A pure ket or a density operator over a composite truncated Fock space.
class QuantumState {
 public:
  static QuantumState from_ket(Space space, CVector ket, const StateTolerances& tol = {});
  static QuantumState from_density(Space space, CMatrix rho, const StateTolerances& tol = {});

  const Space& space() const { return space_; }
  bool is_pure() const { return std::holds_alternative<CVector>(repr_); }
  const CVector& ket() const;
  CMatrix density() const;

  cplx expectation(const LinearOp& op) const;
  /// Population of each basis state of the composite space.
  std::vector<double> populations() const;
  /// Photon-number distribution of one mode.
  std::vector<double> photon_distribution(Mode m) const;
  double mean_photons(Mode m) const;
  /// Population of the top Fock level of the given mode.
  double top_level_population(Mode m) const;

  QuantumState to_density() const;

 private:
  QuantumState(Space space, std::variant<CVector, CMatrix> repr)
      : space_(std::move(space)), repr_(std::move(repr)) {}

  Space space_;
  std::variant<CVector, CMatrix> repr_;
};

namespace state {
struct Fock {
  int n;
};
struct Coherent {
  cplx alpha;
};
/// (|0> + |n>)/sqrt(2)
struct FockSuperposition {
  int n;
  cplx relative_phase = 1.0;
};
struct Cat {
  cplx alpha;
  int parity = +1;  // +1 even, -1 odd
};
struct CustomKet {
  CVector amplitudes;
};
}  // namespace state

using StateSpec = std::variant<state::Fock, state::Coherent, state::FockSuperposition, state::Cat, state::CustomKet>;

/// Builds a normalized single-mode state. Throws ErrorCode::leakage when the
/// top level of the untruncated state carries more than `leakage_tol`.
QuantumState make_state(const StateSpec& spec, const FockSpace& space, double leakage_tol = 1e-6);

/// Analytic cat normalization [2(1 +- exp(-2|alpha|^2))]^(-1/2).
double cat_normalization(cplx alpha, int parity);

QuantumState tensor(const QuantumState& s1, const QuantumState& s2);
QuantumState partial_trace(const QuantumState& state, const std::vector<Mode>& keep);

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; |<psi|phi>|^2 for kets.
double fidelity(const QuantumState& s1, const QuantumState& s2);

struct PhaseGrid {
  double re_min = -4.0;
  double re_max = 4.0;
  int n_re = 81;
  double im_min = -4.0;
  double im_max = 4.0;
  int n_im = 81;

  static PhaseGrid square(double half_width, int points) {
    return {-half_width, half_width, points, -half_width, half_width, points};
  }
  double re_at(int i) const;
  double im_at(int j) const;
  double d_re() const;
  double d_im() const;
};

/// Scalar field sampled on a PhaseGrid. values(j, i) holds the point
/// (re_at(i), im_at(j)).
struct PhaseSpaceField {
  PhaseGrid grid;
  Eigen::MatrixXd values;
  double integral = 0.0;
  /// Set when the grid misses more than 1e-2 of the normalization.
  bool truncated = false;
};

PhaseSpaceField husimi_q(const QuantumState& rho, const PhaseGrid& grid = {});
PhaseSpaceField wigner(const QuantumState& rho, const PhaseGrid& grid = {});

/// Q(alpha) = <alpha|rho|alpha>/pi at a single point.
double husimi_q_at(const CMatrix& rho, cplx alpha);
/// W(alpha) = (2/pi) tr[D(-alpha) rho D(alpha) P].
double wigner_at(const CMatrix& rho, cplx alpha);

/// CSV with columns re,im,value.
void write_field_csv(std::ostream& os, const PhaseSpaceField& field, const std::vector<std::string>& header = {});

}  // namespace catapult

#include "catapult/hamiltonian.hpp"

#include "catapult/error.hpp"

namespace catapult {

SparseOp to_sparse(const CMatrix& m, double drop) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (std::abs(m(i, j)) > drop) trip.emplace_back(i, j, m(i, j));
    }
  }
  SparseOp s(m.rows(), m.cols());
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

TimeDependentHamiltonian::TimeDependentHamiltonian(Space s) : space(std::move(s)) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  h0.resize(d, d);
}

SparseOp TimeDependentHamiltonian::at(double t) const {
  SparseOp h = h0;
  for (const auto& term : terms) {
    const cplx c = term.coeff(t);
    if (c == cplx(0.0)) continue;
    if (term.add_adjoint) {
      h += c * term.op + std::conj(c) * SparseOp(term.op.adjoint());
    } else {
      h += c * term.op;
    }
  }
  return h;
}

LinearOp TimeDependentHamiltonian::dense_at(double t) const { return {space, CMatrix(at(t))}; }

}  // namespace catapult

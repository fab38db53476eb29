#pragma once

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "catapult/hilbert.hpp"

namespace catapult {

using SparseOp = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

SparseOp to_sparse(const CMatrix& m, double drop = 0.0);

/// One time-dependent contribution c(t) O, plus c(t)* O^dagger when
/// `add_adjoint` is set.
struct HamiltonianTerm {
  SparseOp op;
  std::function<cplx(double)> coeff;
  bool add_adjoint = true;
};

/// H(t) = h0 + sum_k [c_k(t) O_k (+ h.c.)], in rad/s.
struct TimeDependentHamiltonian {
  Space space;
  SparseOp h0;
  std::vector<HamiltonianTerm> terms;

  explicit TimeDependentHamiltonian(Space s);
  SparseOp at(double t) const;
  LinearOp dense_at(double t) const;
};

}  // namespace catapult

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dqan::sdp {

using CMatrix = Eigen::MatrixXcd;
/// Block-diagonal Hermitian matrix. A 0x0 entry stands for a zero block.
using Blocks = std::vector<CMatrix>;

/// min <C, X>  s.t.  <A_i, X> = b_i,  X >= 0,
/// with X block diagonal (sizes `block_sizes`) and <A, X> = sum_b Re Tr(A_b X_b).
/// The dual is max b'y s.t. C - sum y_i A_i = S >= 0.
struct Problem {
  std::vector<Eigen::Index> block_sizes;
  Blocks C;
  std::vector<Blocks> A;
  Eigen::VectorXd b;
};

struct Options {
  int max_iterations = 100;
  double tolerance = 1e-9;  // relative gap and infeasibilities
  double step_fraction = 0.98;
};

struct Solution {
  Blocks X;
  Eigen::VectorXd y;
  Blocks S;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_infeasibility = 0.0;   // ||b - A(X)|| / (1 + ||b||)
  double dual_infeasibility = 0.0;     // ||C - S - A'y||_F / (1 + ||C||_F)
  double dual_residual_min_eig = 0.0;  // smallest eigenvalue of C - S - A'y
  int iterations = 0;
  bool converged = false;
};

/// Infeasible-start primal-dual path following with the HKM direction and a
/// Mehrotra predictor-corrector.
Solution solve(const Problem& p, const Options& opt = {});

/// Re Tr(A X) for Hermitian A, X.
double inner(const CMatrix& A, const CMatrix& X);
double inner(const Blocks& A, const Blocks& X);

}  // namespace dqan::sdp

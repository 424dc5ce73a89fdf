// SPDX-License-Identifier: Apache-2.0
#include "dqan/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dqan/common.hpp"

namespace dqan::sdp {

double inner(const CMatrix& A, const CMatrix& X) {
  // Tr(A X) = sum_kl A_kl X_lk = sum_kl conj(A_lk) X_lk for Hermitian A.
  return (A.conjugate().cwiseProduct(X)).sum().real();
}

double inner(const Blocks& A, const Blocks& X) {
  double s = 0.0;
  for (std::size_t k = 0; k < A.size(); ++k)
    if (A[k].size() && X[k].size()) s += inner(A[k], X[k]);
  return s;
}

namespace {

CMatrix herm(const CMatrix& M) { return 0.5 * (M + M.adjoint()); }

double fro(const Blocks& B) {
  double s = 0.0;
  for (const auto& m : B) s += m.squaredNorm();
  return std::sqrt(s);
}

struct Ops {
  const Problem& p;
  std::size_t nb;

  Eigen::VectorXd A(const Blocks& X) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(p.A.size()));
    for (std::size_t i = 0; i < p.A.size(); ++i) v(static_cast<Eigen::Index>(i)) = inner(p.A[i], X);
    return v;
  }

  Blocks At(const Eigen::VectorXd& y) const {
    Blocks M(nb);
    for (std::size_t k = 0; k < nb; ++k) M[k] = CMatrix::Zero(p.block_sizes[k], p.block_sizes[k]);
    for (std::size_t i = 0; i < p.A.size(); ++i)
      for (std::size_t k = 0; k < nb; ++k)
        if (p.A[i][k].size()) M[k] += y(static_cast<Eigen::Index>(i)) * p.A[i][k];
    return M;
  }

  Blocks dense_C() const {
    Blocks C(nb);
    for (std::size_t k = 0; k < nb; ++k)
      C[k] = p.C[k].size() ? p.C[k] : CMatrix::Zero(p.block_sizes[k], p.block_sizes[k]);
    return C;
  }
};

// Largest a in (0, inf] with X + a dX >= 0, given the Cholesky factor of X.
double max_step(const Eigen::LLT<CMatrix>& llt, const CMatrix& dX) {
  const CMatrix L = llt.matrixL();
  CMatrix W = L.triangularView<Eigen::Lower>().solve(dX);
  W = L.triangularView<Eigen::Lower>().solve(W.adjoint()).adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm(W), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

}  // namespace

Solution solve(const Problem& p, const Options& opt) {
  const std::size_t nb = p.block_sizes.size();
  const auto m = static_cast<Eigen::Index>(p.A.size());
  if (nb == 0 || p.C.size() != nb || p.b.size() != m) throw InputError("sdp: inconsistent problem dimensions");
  Eigen::Index n = 0;
  for (auto s : p.block_sizes) n += s;
  auto check = [&](const Blocks& B) {
    if (B.size() != nb) return false;
    for (std::size_t k = 0; k < nb; ++k)
      if (B[k].size() && (B[k].rows() != p.block_sizes[k] || B[k].cols() != p.block_sizes[k])) return false;
    return true;
  };
  if (!check(p.C)) throw InputError("sdp: objective has the wrong block shape");
  for (const auto& A : p.A)
    if (!check(A)) throw InputError("sdp: constraint has the wrong block shape");

  const Ops ops{p, nb};
  const Blocks C = ops.dense_C();
  const double normb = p.b.norm();
  const double normc = fro(C);
  double amax = 0.0;
  for (const auto& A : p.A) amax = std::max(amax, fro(A));
  const double nd = static_cast<double>(n);
  const double xi = std::max({1.0, std::sqrt(nd), nd * (1.0 + (m ? p.b.cwiseAbs().maxCoeff() : 0.0)) / (1.0 + amax)});
  const double zeta = std::max({1.0, std::sqrt(nd), amax, normc});

  Blocks X(nb), S(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    X[k] = xi * CMatrix::Identity(p.block_sizes[k], p.block_sizes[k]);
    S[k] = zeta * CMatrix::Identity(p.block_sizes[k], p.block_sizes[k]);
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  Solution s;

  auto residual_d = [&](const Blocks& Sc, const Eigen::VectorXd& yc) {
    Blocks R = ops.At(yc);
    for (std::size_t k = 0; k < nb; ++k) R[k] = C[k] - Sc[k] - R[k];
    return R;
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    const Eigen::VectorXd rp = p.b - ops.A(X);
    const Blocks Rd = residual_d(S, y);
    const double mu = inner(X, S) / nd;
    const double pobj = inner(C, X);
    const double dobj = p.b.dot(y);
    s.primal_infeasibility = rp.norm() / (1.0 + normb);
    s.dual_infeasibility = fro(Rd) / (1.0 + normc);
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (s.primal_infeasibility < opt.tolerance && s.dual_infeasibility < opt.tolerance && rel_gap < opt.tolerance) {
      s.converged = true;
      break;
    }

    std::vector<Eigen::LLT<CMatrix>> lx, ls;
    Blocks Sinv(nb);
    bool ok = true;
    for (std::size_t k = 0; k < nb; ++k) {
      lx.emplace_back(X[k]);
      ls.emplace_back(S[k]);
      ok = ok && lx.back().info() == Eigen::Success && ls.back().info() == Eigen::Success;
      if (ok) Sinv[k] = ls.back().solve(CMatrix::Identity(p.block_sizes[k], p.block_sizes[k]));
    }
    if (!ok) break;

    // Schur complement M_ij = sum_b Re Tr(A_ib X_b A_jb S_b^-1).
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t k = 0; k < nb; ++k)
      for (Eigen::Index j = 0; j < m; ++j) {
        const CMatrix& Aj = p.A[static_cast<std::size_t>(j)][k];
        if (!Aj.size()) continue;
        const CMatrix G = X[k] * Aj * Sinv[k];
        for (Eigen::Index i = 0; i < m; ++i) {
          const CMatrix& Ai = p.A[static_cast<std::size_t>(i)][k];
          if (Ai.size()) M(i, j) += inner(Ai, G);
        }
      }
    M = 0.5 * (M + M.transpose());
    Eigen::LDLT<Eigen::MatrixXd> schur(M);
    if (schur.info() != Eigen::Success) break;

    Blocks XRdSinv(nb);
    for (std::size_t k = 0; k < nb; ++k) XRdSinv[k] = X[k] * Rd[k] * Sinv[k];
    const Eigen::VectorXd base = rp + ops.A(X) + ops.A(XRdSinv);
    auto direction = [&](double sigma, const Blocks* corr, Blocks& dX, Eigen::VectorXd& dy, Blocks& dS) {
      Blocks TS(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        CMatrix target = sigma * mu * CMatrix::Identity(p.block_sizes[k], p.block_sizes[k]);
        if (corr) target -= (*corr)[k];
        TS[k] = target * Sinv[k];
      }
      dy = schur.solve(base - ops.A(TS));
      dS = ops.At(dy);
      dX.assign(nb, CMatrix());
      for (std::size_t k = 0; k < nb; ++k) {
        dS[k] = Rd[k] - dS[k];
        dX[k] = herm(TS[k] - X[k] * dS[k] * Sinv[k]) - X[k];
      }
    };
    auto steps = [&](const Blocks& dX, const Blocks& dS) {
      double ap = std::numeric_limits<double>::infinity(), ad = ap;
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(lx[k], dX[k]));
        ad = std::min(ad, max_step(ls[k], dS[k]));
      }
      return std::pair{ap, ad};
    };

    Blocks dXp, dSp;
    Eigen::VectorXd dyp;
    direction(0.0, nullptr, dXp, dyp, dSp);
    auto [ap_max, ad_max] = steps(dXp, dSp);
    const double ap = std::min(1.0, ap_max), ad = std::min(1.0, ad_max);
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) mu_aff += inner(X[k] + ap * dXp[k], S[k] + ad * dSp[k]);
    mu_aff /= nd;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    Blocks corr(nb);
    for (std::size_t k = 0; k < nb; ++k) corr[k] = dXp[k] * dSp[k];
    Blocks dX, dS;
    Eigen::VectorXd dy;
    direction(sigma, &corr, dX, dy, dS);
    auto [a_p_max, a_d_max] = steps(dX, dS);
    const double a_p = std::min(1.0, opt.step_fraction * a_p_max);
    const double a_d = std::min(1.0, opt.step_fraction * a_d_max);
    for (std::size_t k = 0; k < nb; ++k) {
      X[k] = herm(X[k] + a_p * dX[k]);
      S[k] = herm(S[k] + a_d * dS[k]);
    }
    y += a_d * dy;
    s.iterations = it + 1;
  }

  s.primal_objective = inner(C, X);
  s.dual_objective = p.b.dot(y);
  const Eigen::VectorXd rp = p.b - ops.A(X);
  const Blocks Rd = residual_d(S, y);
  s.primal_infeasibility = rp.norm() / (1.0 + normb);
  s.dual_infeasibility = fro(Rd) / (1.0 + normc);
  s.dual_residual_min_eig = std::numeric_limits<double>::infinity();
  for (const auto& R : Rd) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(herm(R), Eigen::EigenvaluesOnly);
    s.dual_residual_min_eig = std::min(s.dual_residual_min_eig, es.eigenvalues().minCoeff());
  }
  if (!s.converged) {
    const double rel_gap = std::abs(s.primal_objective - s.dual_objective) /
                           (1.0 + std::abs(s.primal_objective) + std::abs(s.dual_objective));
    s.converged = s.primal_infeasibility < opt.tolerance && s.dual_infeasibility < opt.tolerance &&
                  rel_gap < opt.tolerance;
  }
  s.X = std::move(X);
  s.y = std::move(y);
  s.S = std::move(S);
  return s;
}

}  // namespace dqan::sdp

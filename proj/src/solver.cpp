#include "hals/solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hals/atomic.hpp"
#include "hals/numerics.hpp"

namespace hals {

namespace {

constexpr double kGapTol = 1e-4;  // relative duality gap in the converged flag
constexpr int kCheckpointEvery = 50;
constexpr int kBalanceEvery = 100;

/// [[Toep(iota), h], [h^H, t]]
CMat bordered(const CVec& iota, const CVec& h, double t) {
  const auto n = h.size();
  CMat out(n + 1, n + 1);
  out.topLeftCorner(n, n) = herm_toeplitz(iota);
  out.topRightCorner(n, 1) = h;
  out.bottomLeftCorner(1, n) = h.adjoint();
  out(n, n) = t;
  return out;
}

}  // namespace

void HalsOptions::validate() const {
  if (!(tau > 0)) throw std::invalid_argument("HalsOptions: tau must be > 0");
  if (!(lambda > 0)) throw std::invalid_argument("HalsOptions: lambda must be > 0");
  if (!(admm_rho > 0)) throw std::invalid_argument("HalsOptions: admm_rho must be > 0");
  if (!(tol_abs > 0) || !(tol_rel > 0)) {
    throw std::invalid_argument("HalsOptions: tolerances must be > 0");
  }
  if (max_iter < 1) throw std::invalid_argument("HalsOptions: max_iter must be >= 1");
}

CVec ridge_diffuse(const CVec& r, const CVec& h_s, const CMat& D,
                   double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("ridge_diffuse: lambda must be > 0");
  const auto l = D.cols();
  if (l == 0) return CVec(0);
  if (D.rows() != r.size() || r.size() != h_s.size()) {
    throw std::invalid_argument("ridge_diffuse: dimension mismatch");
  }
  CMat gram = D.adjoint() * D;
  gram.diagonal().array() += lambda;
  return Eigen::LLT<CMat>(gram).solve(D.adjoint() * (r - h_s));
}

CMat eliminate_diffuse(const CMat& D, double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("eliminate_diffuse: lambda must be > 0");
  const auto n = D.rows();
  CMat w = CMat::Identity(n, n);
  if (D.cols() == 0) return w;
  CMat gram = D.adjoint() * D;
  gram.diagonal().array() += lambda;
  w -= D * Eigen::LLT<CMat>(gram).solve(D.adjoint());
  return 0.5 * (w + w.adjoint());
}

HalsSolution solve_hals(const Observation& obs, const CMat& D_in,
                        const HalsOptions& opts) {
  opts.validate();
  const auto n = obs.r.size();
  const CMat D = opts.diffuse_enabled ? D_in : CMat(n, 0);
  if (D.cols() > 0 && D.rows() != n) {
    throw std::invalid_argument("solve_hals: diffuse basis row mismatch");
  }
  const auto l = D.cols();
  const CVec& r = obs.r;
  const double tau = opts.tau;

  Eigen::LLT<CMat> ridge_chol;
  if (l > 0) {
    CMat gram = D.adjoint() * D;
    gram.diagonal().array() += opts.lambda;
    ridge_chol.compute(gram);
  }
  auto ridge = [&](const CVec& h) -> CVec {
    if (l == 0) return CVec(0);
    return ridge_chol.solve(D.adjoint() * (r - h));
  };

  const CMat W = eliminate_diffuse(D, opts.lambda);
  const CVec wr = W * r;

  double rho = opts.admm_rho;
  auto make_h_solver = [&](double rho_now) {
    CMat sys = W;
    sys.diagonal().array() += 2.0 * rho_now;
    return Eigen::LLT<CMat>(sys);
  };
  Eigen::LLT<CMat> h_solver = make_h_solver(rho);

  CVec h = CVec::Zero(n);
  CVec iota = CVec::Zero(n);
  double t = 0.0;
  CMat Z = CMat::Zero(n + 1, n + 1);
  CMat U = CMat::Zero(n + 1, n + 1);

  // P1 value at the current iterate, with (t + iota_1)/2 standing in for
  // the atomic norm.
  auto primal_at = [&](const CVec& h_now, const CVec& c_now, double t_now,
                       double iota0_now) {
    const CVec e = r - h_now - (l > 0 ? CVec(D * c_now) : CVec::Zero(n));
    return 0.5 * e.squaredNorm() + tau * 0.5 * (t_now + iota0_now) +
           0.5 * opts.lambda * c_now.squaredNorm();
  };

  // Dual value at the feasibility-scaled dual point: the raw z of a finite-
  // accuracy iterate can overshoot the dual-norm ball, and weak duality
  // only bounds the gap for feasible points.
  auto scaled_dual_value = [&](const CVec& z) {
    const double z_dual_norm = dual_atomic_norm(z).value;
    const double scale = z_dual_norm > tau ? tau / z_dual_norm : 1.0;
    return dual_objective(scale * z, obs, D, opts.lambda);
  };

  HalsSolution sol;
  double best_primal = std::numeric_limits<double>::infinity();
  double r_pri = 0.0, r_dual = 0.0;
  int iter = 0;
  bool converged = false;

  while (iter < opts.max_iter) {
    ++iter;
    const CMat M = Z - U;

    // h-block: (W + 2 rho I) h = W r + 2 rho m
    CVec m(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      m[k] = 0.5 * (M(k, n) + std::conj(M(n, k)));
    }
    h = h_solver.solve(wr + 2.0 * rho * m);

    // Toeplitz block: per-diagonal averaging, linear term tau/2 on iota[0]
    double diag_mean = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) diag_mean += M(k, k).real();
    diag_mean /= static_cast<double>(n);
    iota[0] = cx(diag_mean - tau / (2.0 * rho * static_cast<double>(n)), 0.0);
    for (Eigen::Index d = 1; d < n; ++d) {
      cx acc(0.0, 0.0);
      for (Eigen::Index k = 0; k + d < n; ++k) {
        acc += M(k + d, k) + std::conj(M(k, k + d));
      }
      iota[d] = acc / (2.0 * static_cast<double>(n - d));
    }
    t = M(n, n).real() - tau / (2.0 * rho);

    const CMat T = bordered(iota, h, t);
    const CMat z_prev = Z;
    Z = psd_project(T + U);
    U += T - Z;

    r_pri = (T - Z).norm();
    r_dual = rho * (Z - z_prev).norm();
    const double dim = static_cast<double>(n + 1);
    const double eps_pri =
        dim * opts.tol_abs + opts.tol_rel * std::max(T.norm(), Z.norm());
    const double eps_dual = dim * opts.tol_abs + opts.tol_rel * rho * U.norm();
    const bool residuals_ok = r_pri <= eps_pri && r_dual <= eps_dual;

    if (residuals_ok || iter % kCheckpointEvery == 0 || iter == opts.max_iter) {
      const CVec c = ridge(h);
      const double primal = primal_at(h, c, t, iota[0].real());
      best_primal = std::min(best_primal, primal);
      if (iter % kCheckpointEvery == 0 || iter == opts.max_iter) {
        sol.diag.primal_checkpoints.push_back(best_primal);
      }
      if (residuals_ok) {
        const CVec z = r - h - (l > 0 ? CVec(D * c) : CVec::Zero(n));
        const double dual = scaled_dual_value(z);
        const double gap = std::abs(primal - dual) / (1.0 + std::abs(primal));
        if (gap <= kGapTol) {
          converged = true;
          break;
        }
      }
    }

    if (opts.residual_balancing && iter % kBalanceEvery == 0) {
      if (r_pri > 10.0 * r_dual && rho < 1e6 * opts.admm_rho) {
        rho *= 2.0;
        U *= 0.5;
        h_solver = make_h_solver(rho);
      } else if (r_dual > 10.0 * r_pri && rho > 1e-6 * opts.admm_rho) {
        rho *= 0.5;
        U *= 2.0;
        h_solver = make_h_solver(rho);
      }
    }
  }

  sol.h_s = h;
  sol.iota = iota;
  sol.t = t;
  sol.c_d = ridge(h);
  sol.z = r - h - (l > 0 ? CVec(D * sol.c_d) : CVec::Zero(n));
  sol.primal_value = primal_at(h, sol.c_d, t, iota[0].real());
  sol.dual_value = scaled_dual_value(sol.z);
  sol.iterations = iter;
  sol.converged = converged;
  sol.diag.primal_residual = r_pri;
  sol.diag.dual_residual = r_dual;
  sol.diag.rho_final = rho;
  return sol;
}

HalsSolution solve_anm(const Observation& obs, const HalsOptions& opts) {
  HalsOptions anm_opts = opts;
  anm_opts.diffuse_enabled = false;
  return solve_hals(obs, CMat(obs.r.size(), 0), anm_opts);
}

CVec recover_dual(const Observation& obs, const CMat& D,
                  const HalsSolution& sol) {
  if (sol.h_s.size() != obs.r.size()) {
    throw std::invalid_argument("recover_dual: dimension mismatch");
  }
  CVec z = obs.r - sol.h_s;
  if (D.cols() > 0 && sol.c_d.size() == D.cols()) {
    z -= D * sol.c_d;
  }
  return z;
}

double dual_objective(const CVec& z, const Observation& obs, const CMat& D,
                      double lambda) {
  const CVec& r = obs.r;
  double value = 0.5 * r.squaredNorm() - 0.5 * (r - z).squaredNorm();
  if (D.cols() > 0) {
    value -= (D.adjoint() * z).squaredNorm() / (2.0 * lambda);
  }
  return value;
}

KktReport kkt_report(const Observation& obs, const CMat& D,
                     const HalsOptions& opts, const HalsSolution& sol) {
  KktReport report;
  const CVec z = recover_dual(obs, D, sol);

  report.dual_norm_residual =
      std::max(0.0, dual_atomic_norm(z).value - opts.tau);

  const auto l = opts.diffuse_enabled ? D.cols() : 0;
  if (l > 0) {
    const CVec lhs = D.adjoint() * z;
    const CVec rhs = opts.lambda * sol.c_d;
    const double scale = lhs.norm() + rhs.norm();
    report.ridge_residual =
        (lhs - rhs).norm() / std::max(scale, 1e-12 * (1.0 + opts.lambda));
  }

  const double surrogate = 0.5 * (sol.t + sol.iota[0].real());
  const double align = sol.h_s.dot(z).real();  // Re<z, h_s>
  report.alignment_residual =
      std::abs(align - opts.tau * surrogate) /
      std::max(opts.tau * surrogate, 1e-12 * (1.0 + opts.tau));

  const double bound =
      std::sqrt(static_cast<double>(l)) * opts.tau / opts.lambda;
  report.energy_bound_ok = sol.c_d.norm() <= bound + 1e-9;
  return report;
}

Hyperparams default_hyperparams(double sigma, int n, int l,
                                double cd_norm_hint) {
  if (!(sigma > 0)) throw std::invalid_argument("default_hyperparams: sigma must be > 0");
  if (n < 2) throw std::invalid_argument("default_hyperparams: need N >= 2");
  if (l < 1) throw std::invalid_argument("default_hyperparams: need L >= 1");
  if (!(cd_norm_hint > 0)) {
    throw std::invalid_argument("default_hyperparams: cd_norm_hint must be > 0");
  }
  Hyperparams hp;
  hp.tau = 1.2 * sigma * std::sqrt(static_cast<double>(n) * std::log(n));
  hp.lambda = std::sqrt(static_cast<double>(l)) * sigma / cd_norm_hint;
  return hp;
}

}  // namespace hals

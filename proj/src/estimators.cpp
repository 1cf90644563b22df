#include "hals/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hals/atomic.hpp"
#include "hals/numerics.hpp"

namespace hals {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double circular_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

ChannelEstimate from_solution(const Observation& obs, const CMat& D,
                              const HalsOptions& opts, Method method,
                              Clock::time_point start) {
  const HalsSolution sol = solve_hals(obs, D, opts);
  const CVec z = recover_dual(obs, D, sol);
  const SupportEstimate support = estimate_support(z, opts.tau);
  const CVec h_s_db = debias(obs, D, sol.c_d, support);
  const KktReport kkt = kkt_report(obs, D, opts, sol);

  ChannelEstimate est;
  est.method = method;
  est.h_s_hat = h_s_db;
  est.h_d_hat = (opts.diffuse_enabled && D.cols() > 0)
                    ? CVec(D * sol.c_d)
                    : CVec(CVec::Zero(obs.r.size()));
  est.h_hat = est.h_s_hat + est.h_d_hat;
  est.support = support;
  est.diag.converged = sol.converged;
  est.diag.iterations = sol.iterations;
  est.diag.duality_gap = std::abs(sol.primal_value - sol.dual_value) /
                         (1.0 + std::abs(sol.primal_value));
  est.diag.kkt_max_residual =
      std::max({kkt.dual_norm_residual / opts.tau, kkt.ridge_residual,
                kkt.alignment_residual});
  est.diag.energy_bound_ok = kkt.energy_bound_ok;
  est.diag.tau = opts.tau;
  est.diag.lambda = opts.lambda;
  est.diag.raw_h_s = sol.h_s;
  est.runtime_ms = ms_since(start);
  return est;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::hals: return "hals";
    case Method::anm: return "anm";
    case Method::ls: return "ls";
    case Method::genie: return "genie";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "hals") return Method::hals;
  if (name == "anm") return Method::anm;
  if (name == "ls") return Method::ls;
  if (name == "genie") return Method::genie;
  throw std::invalid_argument("unknown method '" + name + "'");
}

SupportEstimate estimate_support(const CVec& z, double tau, double delta,
                                 int oversample) {
  if (!(tau > 0)) throw std::invalid_argument("estimate_support: tau must be > 0");
  if (!(delta > 0 && delta < 1)) {
    throw std::invalid_argument("estimate_support: delta must be in (0, 1)");
  }
  const auto n = z.size();
  SupportEstimate support;
  support.delta = delta;

  auto peaks = refined_local_maxima(z, oversample, 60, (1.0 - delta) * tau);
  if (peaks.empty()) return support;

  // Merge peaks closer than 1/(4N): indistinguishable at aperture N.
  const double merge_radius = 1.0 / (4.0 * static_cast<double>(n));
  std::sort(peaks.begin(), peaks.end(),
            [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::pair<double, double>> kept;
  for (const auto& p : peaks) {
    const bool clash = std::any_of(kept.begin(), kept.end(), [&](const auto& q) {
      return circular_distance(p.first, q.first) < merge_radius;
    });
    if (!clash) kept.push_back(p);
  }

  // Toeplitz degree bound: at most N-1 atoms are identifiable.
  const std::size_t cap = static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0));
  if (kept.size() > cap) {
    kept.resize(cap);  // already sorted by magnitude, drop the smallest
    support.truncated = true;
  }

  std::sort(kept.begin(), kept.end());
  for (const auto& [f, mag] : kept) {
    support.freqs.push_back(f);
    support.peak_values.push_back(mag);
  }
  return support;
}

CVec debias(const Observation& obs, const CMat& D, const CVec& c_d_hat,
            const SupportEstimate& support) {
  const auto n = obs.r.size();
  if (support.freqs.empty()) return CVec::Zero(n);
  CVec target = obs.r;
  if (D.cols() > 0 && c_d_hat.size() == D.cols()) {
    target -= D * c_d_hat;
  }
  const CMat g_hat = support_matrix(support.freqs, static_cast<int>(n));
  return projector(g_hat) * target;
}

ChannelEstimate pipeline_hals(const Observation& obs, const CMat& D,
                              const HalsOptions& opts) {
  return from_solution(obs, D, opts, Method::hals, Clock::now());
}

ChannelEstimate pipeline_anm(const Observation& obs, const HalsOptions& opts) {
  const auto start = Clock::now();
  HalsOptions anm_opts = opts;
  anm_opts.diffuse_enabled = false;
  return from_solution(obs, CMat(obs.r.size(), 0), anm_opts, Method::anm, start);
}

ChannelEstimate least_squares(const Observation& obs) {
  const auto start = Clock::now();
  ChannelEstimate est;
  est.method = Method::ls;
  est.h_hat = obs.r;
  est.h_s_hat = obs.r;
  est.h_d_hat = CVec::Zero(obs.r.size());
  est.runtime_ms = ms_since(start);
  return est;
}

ChannelEstimate genie(const Observation& obs, const CMat& G, const CMat& D,
                      double mu) {
  if (!(mu > 0)) throw std::invalid_argument("genie: mu must be > 0");
  const auto start = Clock::now();
  const auto n = obs.r.size();

  const CMat p_g = projector(G);
  const CMat p_perp = CMat::Identity(n, n) - p_g;
  CMat t_mat = D.adjoint() * p_perp * D;
  t_mat.diagonal().array() += mu;
  const CVec c_dd = Eigen::LLT<CMat>(t_mat).solve(D.adjoint() * (p_perp * obs.r));

  ChannelEstimate est;
  est.method = Method::genie;
  est.h_d_hat = D * c_dd;
  est.h_s_hat = p_g * (obs.r - est.h_d_hat);
  est.h_hat = est.h_s_hat + est.h_d_hat;
  est.runtime_ms = ms_since(start);
  return est;
}

}  // namespace hals

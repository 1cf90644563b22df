#include "doctest.h"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

#include "hals/atomic.hpp"
#include "hals/estimators.hpp"
#include "hals/numerics.hpp"
#include "support/test_util.hpp"

using namespace hals;
using testing::random_cvec;

namespace {

Observation make_observation(int n, int l, int m, double snr_db,
                             std::uint64_t seed, HsdChannelTruth* truth_out,
                             double beta = 0.01) {
  ChannelConfig cfg;
  cfg.N = n;
  cfg.L = l;
  cfg.m = m;
  cfg.beta = beta;
  cfg.seed = derive_seed(seed, 1);
  HsdChannelTruth truth = sample_hsd(cfg);
  const double sigma = sigma_for_snr(truth.h, snr_db);
  Pilots p = qpsk_pilots(n, derive_seed(seed, 2));
  Observation obs = observe(truth.h, p, sigma, derive_seed(seed, 3));
  if (truth_out) *truth_out = truth;
  return obs;
}

double circular_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

/// Dense-grid peaks of |<z, a(f)>| above the level, for cross-checking the
/// refined support estimator.
std::vector<double> dense_grid_peaks(const CVec& z, double level, int grid) {
  std::vector<double> mags(static_cast<std::size_t>(grid));
  for (int g = 0; g < grid; ++g) {
    mags[static_cast<std::size_t>(g)] =
        std::abs(atom_inner(z, static_cast<double>(g) / grid));
  }
  std::vector<double> peaks;
  for (int g = 0; g < grid; ++g) {
    const double cur = mags[static_cast<std::size_t>(g)];
    const double prev = mags[static_cast<std::size_t>((g + grid - 1) % grid)];
    const double next = mags[static_cast<std::size_t>((g + 1) % grid)];
    if (cur >= prev && cur >= next && cur >= level) {
      peaks.push_back(static_cast<double>(g) / grid);
    }
  }
  return peaks;
}

}  // namespace

TEST_SUITE_BEGIN("estimators");

TEST_CASE("estimate_support on a single exact atom") {
  const int n = 16;
  const double f0 = 0.3125;
  const double tau = 2.0;
  CVec z = (tau / n) * atom(f0, n);  // peak magnitude exactly tau at f0
  SupportEstimate support = estimate_support(z, tau, 1e-2);
  REQUIRE(support.freqs.size() == 1);
  CHECK(std::abs(support.freqs[0] - f0) < 1e-6);
  CHECK(support.peak_values[0] == doctest::Approx(tau).epsilon(1e-10));
}

TEST_CASE("estimate_support returns empty below the level") {
  const int n = 12;
  Rng rng(51);
  CVec z = 1e-3 * random_cvec(rng, n);
  SupportEstimate support = estimate_support(z, 100.0, 1e-2);
  CHECK(support.freqs.empty());
}

TEST_CASE("estimate_support merges close peaks and keeps separation") {
  const int n = 16;
  // two атoms closer than the merge radius look like one peak
  CVec z = atom(0.30, n) + atom(0.30 + 1.0 / (16.0 * n), n);
  SupportEstimate support = estimate_support(z, 2.0 * n * 0.9, 0.5);
  const double radius = 1.0 / (4.0 * n);
  for (std::size_t i = 0; i < support.freqs.size(); ++i) {
    for (std::size_t j = i + 1; j < support.freqs.size(); ++j) {
      CHECK(circular_distance(support.freqs[i], support.freqs[j]) >= radius);
    }
  }
  CHECK(std::is_sorted(support.freqs.begin(), support.freqs.end()));
}

TEST_CASE("estimate_support input validation") {
  CVec z = CVec::Ones(4);
  CHECK_THROWS_AS(estimate_support(z, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_support(z, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_support(z, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("two-atom support recovery matches a dense grid oracle") {
  const int n = 32;
  const double f1 = 0.3, f2 = 0.3 + 4.0 / n;
  CVec h = atom(f1, n) + cx(0.0, 0.8) * atom(f2, n);
  Pilots p = qpsk_pilots(n, 7);
  Observation obs = observe(h, p, 0.0, 8);

  HalsOptions opts;
  opts.tau = 1e-3 * n;
  opts.lambda = 1.0;
  opts.max_iter = 20000;  // tiny tau on noiseless data converges slowly
  HalsSolution sol = solve_anm(obs, opts);
  REQUIRE(sol.converged);

  SupportEstimate support = estimate_support(sol.z, opts.tau, 1e-1);
  REQUIRE(support.freqs.size() == 2);
  CHECK(std::abs(support.freqs[0] - f1) < 1e-3);
  CHECK(std::abs(support.freqs[1] - f2) < 1e-3);

  auto oracle = dense_grid_peaks(sol.z, 0.9 * opts.tau, 1000000);
  // every estimated frequency has an oracle peak nearby
  for (double f : support.freqs) {
    const bool found = std::any_of(oracle.begin(), oracle.end(), [&](double g) {
      return circular_distance(f, g) < 1e-4;
    });
    CHECK(found);
  }
}

TEST_CASE("debias projects onto the detected span") {
  HsdChannelTruth truth;
  Observation obs = make_observation(20, 10, 2, 15.0, 52, &truth);

  SupportEstimate empty;
  CHECK(debias(obs, truth.D, truth.diffuse.c_d, empty).isZero(0.0));

  // noiseless with exact support and exact diffuse coordinates
  Observation clean = observe(truth.h, obs.pilots, 0.0, 1);
  SupportEstimate exact;
  for (const auto& path : truth.paths) exact.freqs.push_back(path.f);
  std::sort(exact.freqs.begin(), exact.freqs.end());
  CVec refit = debias(clean, truth.D, truth.diffuse.c_d, exact);
  CHECK((refit - truth.h_s).norm() <= 1e-8 * (1.0 + truth.h_s.norm()));
}

TEST_CASE("debias with a full-rank support reproduces the ridge residual") {
  HsdChannelTruth truth;
  Observation obs = make_observation(8, 4, 1, 10.0, 53, &truth);
  SupportEstimate full;
  for (int k = 0; k < 8; ++k) full.freqs.push_back(static_cast<double>(k) / 8);
  CVec out = debias(obs, truth.D, truth.diffuse.c_d, full);
  CVec want = obs.r - truth.D * truth.diffuse.c_d;
  CHECK((out - want).norm() <= 1e-10 * (1.0 + want.norm()));
}

TEST_CASE("pipeline_hals on a noiseless single atom") {
  const int n = 24;
  CVec h = cx(1.1, -0.4) * atom(0.37, n);
  Pilots p = qpsk_pilots(n, 11);
  Observation obs = observe(h, p, 0.0, 12);
  HalsOptions opts;
  opts.tau = 1e-3 * n;
  opts.lambda = 1.0;
  ChannelEstimate est = pipeline_anm(obs, opts);
  CHECK(est.diag.converged);
  CHECK(nmse(h, est.h_hat) <= 1e-3);
  REQUIRE(est.support.has_value());
  CHECK(est.support->freqs.size() == 1);
}

TEST_CASE("pipeline_hals with huge tau reduces to the ridge path") {
  HsdChannelTruth truth;
  Observation obs = make_observation(16, 8, 2, 10.0, 54, &truth, 0.05);
  HalsOptions opts;
  opts.tau = 2.0 * std::sqrt(16.0) * obs.r.norm();
  opts.lambda = 0.7;
  ChannelEstimate est = pipeline_hals(obs, truth.D, opts);
  CVec ridge_only = ridge_diffuse(obs.r, CVec::Zero(16), truth.D, opts.lambda);
  CHECK((est.h_hat - truth.D * ridge_only).norm() <=
        1e-5 * (1.0 + est.h_hat.norm()));
  CHECK(est.h_s_hat.norm() <= 1e-5 * obs.r.norm());
}

TEST_CASE("pipeline determinism and composition invariant") {
  HsdChannelTruth truth;
  Observation obs = make_observation(20, 10, 3, 10.0, 55, &truth);
  HalsOptions opts;
  opts.tau = 2.0;
  opts.lambda = 0.8;
  ChannelEstimate a = pipeline_hals(obs, truth.D, opts);
  ChannelEstimate b = pipeline_hals(obs, truth.D, opts);
  CHECK((a.h_hat - b.h_hat).norm() == 0.0);
  CHECK((a.h_hat - (a.h_s_hat + a.h_d_hat)).norm() <=
        1e-12 * (1.0 + a.h_hat.norm()));

  ChannelEstimate anm = pipeline_anm(obs, opts);
  CHECK(anm.h_d_hat.isZero(0.0));
  HalsOptions off = opts;
  off.diffuse_enabled = false;
  ChannelEstimate hals_off = pipeline_hals(obs, truth.D, off);
  CHECK((anm.h_hat - hals_off.h_hat).norm() == 0.0);
}

TEST_CASE("least_squares echoes the demodulated observation") {
  HsdChannelTruth truth;
  Observation obs = make_observation(12, 6, 2, 10.0, 56, &truth);
  ChannelEstimate est = least_squares(obs);
  CHECK((est.h_hat - obs.r).norm() == 0.0);
  CHECK((est.h_s_hat - obs.r).norm() == 0.0);
  CHECK(est.h_d_hat.isZero(0.0));
  CHECK_FALSE(est.support.has_value());

  Observation clean = observe(truth.h, obs.pilots, 0.0, 1);
  CHECK((least_squares(clean).h_hat - truth.h).norm() < 1e-13 * truth.h.norm());
}

TEST_CASE("genie closed form properties") {
  HsdChannelTruth truth;
  Observation obs = make_observation(16, 8, 3, 10.0, 57, &truth);

  // pure sparse noiseless input lands entirely in the sparse slot
  Observation clean = observe(truth.h_s, obs.pilots, 0.0, 1);
  ChannelEstimate pure = genie(clean, truth.G, truth.D, 0.5);
  CHECK((pure.h_s_hat - truth.h_s).norm() <= 1e-9 * (1.0 + truth.h_s.norm()));
  CHECK(pure.h_d_hat.norm() <= 1e-9 * (1.0 + truth.h_s.norm()));

  // enormous mu sends the diffuse block to zero
  ChannelEstimate stiff = genie(obs, truth.G, truth.D, 1e12);
  CHECK(stiff.h_d_hat.norm() <= 1e-9 * obs.r.norm());
  CMat p_g = projector(truth.G);
  CHECK((stiff.h_s_hat - p_g * obs.r).norm() <= 1e-9 * obs.r.norm());

  CHECK_THROWS_AS(genie(obs, truth.G, truth.D, 0.0), std::invalid_argument);
}

TEST_CASE("genie matches the stacked normal-equations oracle") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    HsdChannelTruth truth;
    Observation obs = make_observation(20, 10, 3, 10.0, 200 + seed, &truth, 0.03);
    const double mu = 0.4;
    ChannelEstimate est = genie(obs, truth.G, truth.D, mu);

    // direct regularized least squares on the stacked coordinates
    const auto m = truth.G.cols();
    const auto l = truth.D.cols();
    CMat sys(m + l, m + l);
    sys.topLeftCorner(m, m) = truth.G.adjoint() * truth.G;
    sys.topRightCorner(m, l) = truth.G.adjoint() * truth.D;
    sys.bottomLeftCorner(l, m) = truth.D.adjoint() * truth.G;
    sys.bottomRightCorner(l, l) =
        truth.D.adjoint() * truth.D + mu * CMat::Identity(l, l);
    CVec rhs(m + l);
    rhs.head(m) = truth.G.adjoint() * obs.r;
    rhs.tail(l) = truth.D.adjoint() * obs.r;
    CVec stacked = sys.colPivHouseholderQr().solve(rhs);
    CVec hs_oracle = truth.G * stacked.head(m);
    CVec hd_oracle = truth.D * stacked.tail(l);

    CHECK((est.h_s_hat - hs_oracle).norm() <= 1e-8 * (1.0 + hs_oracle.norm()));
    CHECK((est.h_d_hat - hd_oracle).norm() <= 1e-8 * (1.0 + hd_oracle.norm()));
  }
}

TEST_CASE("genie minimizes the regularized objective") {
  HsdChannelTruth truth;
  Observation obs = make_observation(14, 7, 2, 10.0, 58, &truth);
  const double mu = 0.6;
  ChannelEstimate est = genie(obs, truth.G, truth.D, mu);

  // recover coordinates for the objective evaluation
  CVec c_ss = truth.G.colPivHouseholderQr().solve(est.h_s_hat);
  CVec c_dd = truth.D.colPivHouseholderQr().solve(est.h_d_hat);
  auto objective = [&](const CVec& cs, const CVec& cd) {
    return (obs.r - truth.G * cs - truth.D * cd).squaredNorm() +
           mu * cd.squaredNorm();
  };
  const double base = objective(c_ss, c_dd);
  Rng rng(59);
  for (int rep = 0; rep < 100; ++rep) {
    CVec cs = c_ss + 1e-3 * random_cvec(rng, truth.G.cols());
    CVec cd = c_dd + 1e-3 * random_cvec(rng, truth.D.cols());
    CHECK(objective(cs, cd) >= base - 1e-10);
  }
}

TEST_CASE("debiased error decomposes into subspace and noise parts") {
  // N*mse_db = ||P_perp(h_s + D(c_d - c_d_hat))||^2 + ||P w||^2 with
  // w the realized demodulated noise.
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    HsdChannelTruth truth;
    Observation obs = make_observation(24, 12, 3, 10.0, 300 + seed, &truth);
    const Hyperparams hp = default_hyperparams(
        obs.sigma, 24, 12, std::max(truth.diffuse.c_d.norm(), 1e-9));
    HalsOptions opts;
    opts.tau = hp.tau;
    opts.lambda = hp.lambda;
    ChannelEstimate est = pipeline_hals(obs, truth.D, opts);

    const CVec w = obs.r - truth.h;  // realized S^{-1} n
    CMat g_hat = support_matrix(est.support->freqs, 24);
    CMat p = projector(g_hat);
    CMat p_perp = CMat::Identity(24, 24) - p;
    // reconstruct c_d_hat from the diffuse component estimate
    CVec c_d_hat = truth.D.colPivHouseholderQr().solve(est.h_d_hat);

    const double lhs = (truth.h - est.h_hat).squaredNorm();
    const double rhs =
        (p_perp * (truth.h_s + truth.D * (truth.diffuse.c_d - c_d_hat)))
            .squaredNorm() +
        (p * w).squaredNorm();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
  }
}

TEST_SUITE_END();

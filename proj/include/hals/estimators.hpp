#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hals/channel.hpp"
#include "hals/ofdm.hpp"
#include "hals/solver.hpp"
#include "hals/types.hpp"

namespace hals {

/// Frequencies where the dual polynomial magnitude reaches (1-delta)*tau.
struct SupportEstimate {
  std::vector<double> freqs;        ///< strictly increasing, in [0, 1)
  std::vector<double> peak_values;  ///< |<z, a(f)>| at each frequency
  double delta = 0.0;
  bool truncated = false;  ///< true when peaks beyond the N-1 cap were dropped
};

enum class Method { hals, anm, ls, genie };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

/// Solver/report numbers carried along for benchmarking.
struct EstimateDiagnostics {
  bool converged = true;
  int iterations = 0;
  double duality_gap = 0.0;        ///< |primal - dual| / (1 + |primal|)
  double kkt_max_residual = 0.0;   ///< max of the relative KKT residuals
  bool energy_bound_ok = true;
  double tau = 0.0;
  double lambda = 0.0;
  CVec raw_h_s;  ///< pre-debias sparse estimate, when a solve ran
};

struct ChannelEstimate {
  CVec h_hat;
  CVec h_s_hat;
  CVec h_d_hat;
  Method method = Method::ls;
  std::optional<SupportEstimate> support;
  double runtime_ms = 0.0;
  EstimateDiagnostics diag;
};

/// Local maxima of |<z, a(f)>| at level (1-delta)*tau, merged within
/// 1/(4N) (larger peak wins) and capped at N-1 frequencies.
SupportEstimate estimate_support(const CVec& z, double tau, double delta = 1e-2,
                                 int oversample = 64);

/// Amplitude refit: project r - D c_d onto the span of the estimated atoms.
/// An empty support gives the zero vector.
CVec debias(const Observation& obs, const CMat& D, const CVec& c_d_hat,
            const SupportEstimate& support);

/// Full estimator: solve, recover the dual, detect support, refit, compose
/// h_hat = h_s_debiased + D c_d.
ChannelEstimate pipeline_hals(const Observation& obs, const CMat& D,
                              const HalsOptions& opts);

/// Atomic-norm-only estimator (no diffuse basis), debiased the same way.
ChannelEstimate pipeline_anm(const Observation& obs, const HalsOptions& opts);

/// h_hat = S^{-1} y. The whole estimate is booked under h_s_hat.
ChannelEstimate least_squares(const Observation& obs);

/// Closed-form oracle that knows the true sparse support G, the diffuse
/// basis D, and regularizes the diffuse coordinates with mu > 0.
ChannelEstimate genie(const Observation& obs, const CMat& G, const CMat& D,
                      double mu);

}  // namespace hals

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hals/types.hpp"

namespace hals {

/// Synthetic channel parameters. Tap spacing delta_t only matters through
/// the ratio tau/delta_t and the normalized frequencies.
struct ChannelConfig {
  int N = 50;             ///< subcarrier count
  int L = 40;             ///< diffuse tap count
  int m = 4;              ///< specular path count
  double omega = 0.05;    ///< per-tap power decay rate
  double beta = 0.01;     ///< diffuse power scale
  double delta_t = 1.0;   ///< tap interval (seconds)
  std::uint64_t seed = 0;
  /// Optional rejection sampling so path frequencies are >= 1/N apart.
  bool enforce_separation = false;

  double symbol_time() const { return static_cast<double>(L) * delta_t; }
  void validate() const;
};

/// One resolvable multipath arrival. f = (T_s - tau) / T_s in [0, 1].
struct SparsePath {
  double tau = 0.0;
  cx alpha{0.0, 0.0};
  double f = 0.0;
};

/// Per-tap scattering gains gamma_r and their basis coordinates
/// c_d = sqrt(N) * [gamma_0, gamma_{L-1}, ..., gamma_1].
struct DiffuseGains {
  CVec gamma;
  CVec c_d;
};

/// Ground truth for one sampled channel: components, bases, and the
/// composed frequency response h = h_s + h_d.
struct HsdChannelTruth {
  ChannelConfig config;
  std::vector<SparsePath> paths;
  DiffuseGains diffuse;
  CVec h_s;
  CVec h_d;
  CVec h;
  CMat D;  ///< N x L diffuse basis
  CMat G;  ///< N x m true sparse support basis, columns (1/sqrt(N)) a(f_i)
};

/// Complex sinusoid a(f) with entries e^{j 2 pi f n}, n = 0..N-1.
/// Throws std::invalid_argument for f outside [0, 1].
CVec atom(double f, int n);

/// N x L basis with columns (1/sqrt(N)) a(l/L); each column has unit norm.
CMat diffuse_basis(int n, int l);

/// Sum of alpha_i * a(f_i, N) over the given paths.
CVec sparse_freq_response(const std::vector<SparsePath>& paths, int n);

/// N x |freqs| matrix with columns (1/sqrt(N)) a(f). Empty input gives a
/// zero-column matrix.
CMat support_matrix(const std::vector<double>& freqs, int n);

/// Draw one channel: delays uniform on (0, L*delta_t), Rayleigh path gains
/// with variance e^{-omega tau/delta_t}, tap gains CN(0, beta e^{-omega r}).
/// Deterministic for a fixed config seed.
HsdChannelTruth sample_hsd(const ChannelConfig& cfg);

/// Read "index,re,im" CSV rows, sort by index, return the first n samples.
CVec load_trace(const std::string& path, int n);

/// Generator covariance of the sparse path gains, diag(e^{-omega tau_i/dt}).
CMat sparse_gain_cov(const HsdChannelTruth& truth);

/// Generator covariance of the tap gains in c_d order:
/// beta * diag(1, e^{-omega (L-1)}, e^{-omega (L-2)}, ..., e^{-omega}).
CMat diffuse_gain_cov(const ChannelConfig& cfg);

}  // namespace hals

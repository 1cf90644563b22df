#pragma once

#include <cstdint>

#include "hals/types.hpp"

namespace hals {

/// Unit-modulus pilot symbols; the pilot matrix S = diag(s) is never
/// materialized.
struct Pilots {
  CVec s;
};

/// Received subcarrier samples y = S h + n together with the demodulated
/// vector r = S^{-1} y, cached because every estimator consumes r.
struct Observation {
  CVec y;
  Pilots pilots;
  double sigma = 0.0;
  CVec r;
};

/// QPSK pilots drawn uniformly from {(+-1 +- j)/sqrt(2)}.
Pilots qpsk_pilots(int n, std::uint64_t seed);

/// y_k = s_k h_k + n_k with n_k i.i.d. CN(0, sigma^2).
Observation observe(const CVec& h, const Pilots& pilots, double sigma,
                    std::uint64_t seed);

/// Noise level realizing SNR(dB) = 10 log10(||h||^2 / (N sigma^2)).
double sigma_for_snr(const CVec& h, double snr_db);

/// ||h_true - h_est||^2 / ||h_true||^2.
double nmse(const CVec& h_true, const CVec& h_est);

}  // namespace hals

#include "hals/ofdm.hpp"

#include <cmath>

#include "hals/rng.hpp"

namespace hals {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490;
}

Pilots qpsk_pilots(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("qpsk_pilots: N must be >= 1");
  Rng rng(seed);
  Pilots p;
  p.s.resize(n);
  for (int k = 0; k < n; ++k) {
    const auto bits = rng.next_u64() & 3u;
    const double re = (bits & 1u) ? kInvSqrt2 : -kInvSqrt2;
    const double im = (bits & 2u) ? kInvSqrt2 : -kInvSqrt2;
    p.s[k] = cx(re, im);
  }
  return p;
}

Observation observe(const CVec& h, const Pilots& pilots, double sigma,
                    std::uint64_t seed) {
  if (h.size() != pilots.s.size()) {
    throw std::invalid_argument("observe: channel/pilot length mismatch");
  }
  if (sigma < 0) throw std::invalid_argument("observe: sigma must be >= 0");
  Rng rng(seed);
  Observation obs;
  obs.pilots = pilots;
  obs.sigma = sigma;
  obs.y.resize(h.size());
  for (Eigen::Index k = 0; k < h.size(); ++k) {
    obs.y[k] = pilots.s[k] * h[k] + rng.cnormal(sigma * sigma);
  }
  obs.r = obs.y.cwiseQuotient(pilots.s);
  return obs;
}

double sigma_for_snr(const CVec& h, double snr_db) {
  const double energy = h.squaredNorm();
  if (energy == 0.0) {
    throw std::invalid_argument("sigma_for_snr: zero channel");
  }
  const double n = static_cast<double>(h.size());
  return std::sqrt(energy / (n * std::pow(10.0, snr_db / 10.0)));
}

double nmse(const CVec& h_true, const CVec& h_est) {
  if (h_true.size() != h_est.size()) {
    throw std::invalid_argument("nmse: length mismatch");
  }
  const double energy = h_true.squaredNorm();
  if (energy == 0.0) {
    throw std::invalid_argument("nmse: zero reference");
  }
  return (h_true - h_est).squaredNorm() / energy;
}

}  // namespace hals

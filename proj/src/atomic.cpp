#include "hals/atomic.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cassert>
#include <cmath>

namespace hals {

cx atom_inner(const CVec& z, double f) {
  // Horner-style accumulation of sum_n z_n w^n with w = e^{-j 2 pi f}.
  const cx w(std::cos(kTwoPi * f), -std::sin(kTwoPi * f));
  cx acc(0.0, 0.0);
  for (Eigen::Index n = z.size() - 1; n >= 0; --n) {
    acc = acc * w + z[n];
  }
  return acc;
}

PolyProfile trig_profile(const CVec& z, int grid_size) {
  if (grid_size < z.size()) {
    throw std::invalid_argument("trig_profile: grid must be at least len(z)");
  }
  PolyProfile profile;
  profile.grid_size = grid_size;
  // Forward DFT of the zero-padded coefficients gives
  // X[g] = sum_n z_n e^{-j 2 pi g n / G}.
  std::vector<cx> padded(static_cast<std::size_t>(grid_size), cx(0.0, 0.0));
  for (Eigen::Index n = 0; n < z.size(); ++n) {
    padded[static_cast<std::size_t>(n)] = z[n];
  }
  std::vector<cx> spectrum(static_cast<std::size_t>(grid_size));
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, padded);
  profile.magnitude.resize(grid_size);
  for (int g = 0; g < grid_size; ++g) {
    profile.magnitude[g] = std::abs(spectrum[static_cast<std::size_t>(g)]);
  }
  return profile;
}

namespace {

/// Golden-section maximization of |<z, a(f)>|^2 on [lo, hi] (f may wrap).
std::pair<double, double> refine_peak(const CVec& z, double lo, double hi,
                                      int iters) {
  constexpr double kInvPhi = 0.6180339887498948482;
  auto mag2 = [&z](double f) {
    const cx v = atom_inner(z, f - std::floor(f));
    return std::norm(v);
  };
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = mag2(x1), f2 = mag2(x2);
  for (int it = 0; it < iters && (b - a) > 1e-15; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = mag2(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = mag2(x1);
    }
  }
  const double fm = 0.5 * (a + b);
  const double best = std::sqrt(mag2(fm));
  return {fm - std::floor(fm), best};
}

}  // namespace

std::vector<std::pair<double, double>> refined_local_maxima(const CVec& z,
                                                            int oversample,
                                                            int refine_iters,
                                                            double min_mag) {
  std::vector<std::pair<double, double>> peaks;
  const auto n = z.size();
  if (n == 0 || z.norm() == 0.0) return peaks;
  const int grid = oversample * static_cast<int>(n);
  PolyProfile profile = trig_profile(z, grid);
  const double step = 1.0 / grid;
  for (int g = 0; g < grid; ++g) {
    const double cur = profile.magnitude[g];
    const double prev = profile.magnitude[(g + grid - 1) % grid];
    const double next = profile.magnitude[(g + 1) % grid];
    // Strict on one side so flat stretches do not flag every sample.
    const bool is_max =
        (cur >= prev && cur > next) || (cur > prev && cur >= next);
    if (!is_max) continue;
    auto [f, mag] = refine_peak(z, g * step - step, g * step + step, refine_iters);
    if (mag >= min_mag) peaks.emplace_back(f, mag);
  }
  return peaks;
}

DualNormResult dual_atomic_norm(const CVec& z, int oversample,
                                int refine_iters) {
  if (oversample < 16) {
    throw std::invalid_argument("dual_atomic_norm: oversample must be >= 16");
  }
  DualNormResult result;
  result.profile_grid_size = oversample * static_cast<int>(z.size());
  if (z.size() == 0 || z.norm() == 0.0) return result;
  auto peaks = refined_local_maxima(z, oversample, refine_iters, 0.0);
  for (const auto& [f, mag] : peaks) {
    if (mag > result.value) {
      result.value = mag;
      result.argmax_f = f;
    }
  }
  // Cauchy-Schwarz: sup_f |<z, a(f)>| <= sqrt(N) ||z||.
  assert(result.value <=
         std::sqrt(static_cast<double>(z.size())) * z.norm() * (1.0 + 1e-12));
  return result;
}

}  // namespace hals

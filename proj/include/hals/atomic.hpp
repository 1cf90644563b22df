#pragma once

#include <utility>
#include <vector>

#include "hals/types.hpp"

namespace hals {

/// |<z, a(f)>| sampled on the uniform grid f = g/grid_size, g = 0..grid_size-1.
struct PolyProfile {
  int grid_size = 0;
  RVec magnitude;
};

struct DualNormResult {
  double value = 0.0;      ///< sup_f |<z, a(f)>|
  double argmax_f = 0.0;   ///< attaining frequency in [0, 1)
  int profile_grid_size = 0;
};

/// Inner product <z, a(f)> = a(f)^H z = sum_n z_n e^{-j 2 pi f n}. This
/// convention is fixed project-wide; the dual certificate checks depend on it.
cx atom_inner(const CVec& z, double f);

/// Magnitude profile of the degree-(N-1) trigonometric polynomial f ->
/// <z, a(f)> on a uniform grid (values match the zero-padded DFT exactly).
/// Requires grid_size >= len(z).
PolyProfile trig_profile(const CVec& z, int grid_size);

/// Dual atomic norm sup_f |<z, a(f)>| via a coarse grid of oversample*N
/// points plus bracketed golden-section refinement around every grid-local
/// maximum. Requires oversample >= 16.
DualNormResult dual_atomic_norm(const CVec& z, int oversample = 64,
                                int refine_iters = 60);

/// All refined local maxima of f -> |<z, a(f)>| with magnitude >= min_mag,
/// as (frequency, magnitude) pairs; frequencies are in [0, 1), unsorted.
std::vector<std::pair<double, double>> refined_local_maxima(
    const CVec& z, int oversample = 64, int refine_iters = 60,
    double min_mag = 0.0);

}  // namespace hals

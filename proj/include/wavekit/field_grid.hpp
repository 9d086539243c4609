#pragma once

#include <ostream>
#include <vector>

#include "wavekit/observables.hpp"

namespace wavekit {

/// Axis-aligned box of n^3 points centred on `center`, spacing 2 * half / n
/// per axis; point j sits at center + (j - n/2) * spacing.
struct GridBox {
  int n = 96;
  Vec3 center{};
  Vec3 half{};

  double spacing(int axis) const { return 2.0 * half[axis] / n; }
  double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }
  Vec3 point(int i, int j, int l) const;
  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
};

/// Box following the trajectory with half-widths `extent_sigmas` times the
/// dispersion-law widths at time t.
GridBox trajectory_box(const MomentsReport& m, double t, const GridOptions& opt);

/// rho, j and psi on every box point, index (i * n + j) * n + l with i along x.
std::vector<FluxDensity4> sample_field(const PacketModel& model, double t, const GridBox& box, PsiMethod method);

struct GridMoments {
  double t = 0.0;
  int n = 0;
  double norm = 0.0;        // int rho d^3x
  Vec3 mean_x{};            // int x rho / int rho
  double var_x = 0.0;       // <x^2> - <x>^2 summed over axes
  Vec3 var_axis{};
  Vec3 flux_integral{};     // int j d^3x
  double rho_peak = 0.0;
  double rho_min = 0.0;     // most negative rho seen (0 if none)
  double max_j_excess = 0.0; // max(|j| / rho - 1) where rho > 1e-6 peak
  // Largest difference to the same measurement on a coarser grid and on a
  // smaller box (zero when the estimate is switched off).
  double norm_err = 0.0;
  double mean_err = 0.0;
  double var_err = 0.0;
};

/// Spatial moments of rho at time t by trapezoid sums on a trajectory box.
/// The box grows by 1.5x at fixed spacing until the variance settles (see
/// GridOptions). Throws GridTooCoarse when the variance error exceeds
/// opt.max_rel_error.
GridMoments measure_grid_moments(const PacketModel& model, double t, const GridOptions& opt = {},
                                 const MomentsReport* known = nullptr);

void write_field_csv(std::ostream& out, const std::vector<FluxDensity4>& samples);

} // namespace wavekit

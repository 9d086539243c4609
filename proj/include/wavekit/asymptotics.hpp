#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "wavekit/observables.hpp"

namespace wavekit {

enum class AsymptoteMethod { TimeDomain, Spectral, Analytic };

std::string_view method_name(AsymptoteMethod method);
AsymptoteMethod parse_method(std::string_view name); // throws ParseError

struct TimeIntegralOptions {
  // Upper time limit; chosen as 20 |x| / sqrt(<v^2>) when empty and doubled
  // while the extrapolated tail is too large.
  std::optional<double> t_max;
  double rel_tol = 1e-6;
  // Largest tail (power-law extrapolation beyond t_max) accepted, as a
  // fraction of the accumulated integral.
  double tail_fraction = 1e-3;
  int max_doublings = 4;
  FieldOptions field{1e-10};
};

struct TimeIntegral {
  double value = 0.0;
  double error_estimate = 0.0;
  double t_max = 0.0;
  double tail = 0.0; // extrapolated contribution beyond t_max (included)
};

struct FluxIntegral {
  Vec3 value{};
  double error_estimate = 0.0;
  double t_max = 0.0;
  double tail = 0.0;
};

/// Phi(x) = int_0^inf dt j(t, x) by quadrature in time of the exact field.
/// Rest-frame models only.
FluxIntegral time_integrated_flux(const PacketModel& model, const Vec3& x, const TimeIntegralOptions& opt = {});

/// Closed-form time integral of the non-covariant Gaussian's rest-frame
/// flux: Phi = x gamma(3/2, x^2 / 2 sigma_x^2) / (2 pi^{3/2} |x|^3).
Vec3 time_integrated_flux_gaussian(const PacketModel& model, const Vec3& x);

struct SpectralOptions {
  double rel_tol = 1e-9;
  int max_subdivisions = 20000;
};

/// Radial component of Phi at distance r from the singularity-free double
/// integral over |k|, |q| (the odd part vanishes in the rest frame).
quad::QuadResult time_integrated_flux_spectral(const PacketModel& model, double r, const SpectralOptions& opt = {});

/// P(x) = int_0^inf dt rho(t, x).
TimeIntegral time_integrated_probability(const PacketModel& model, double r, AsymptoteMethod method,
                                         const TimeIntegralOptions& topt = {}, const SpectralOptions& sopt = {});

/// Debug check of the parity argument behind dropping the odd parts of Phi
/// and P: evaluates their angular kernels numerically on a (k, q) sample
/// grid and returns the largest magnitude relative to the even kernel.
struct ParityCheck {
  double flux_odd = 0.0;
  double prob_odd = 0.0;
};
ParityCheck parity_check(const PacketModel& model, double r, int angular_order = 24);

struct AsymptoteRow {
  double r = 0.0;
  double flux_norm = 0.0; // 4 pi r^2 |Phi|
  double prob_norm = 0.0; // 4 pi r^2 P / <1/|v|>
  AsymptoteMethod method = AsymptoteMethod::Spectral;
  double t_max = 0.0; // 0 for methods without a time cut
  double err = 0.0;
};

enum class AsymptoteQuantity { Flux, Probability, Both };

/// One row per (radius, method); rows are computed in parallel. Columns not
/// requested are NaN.
std::vector<AsymptoteRow> asymptote_rows(const PacketModel& model, const std::vector<double>& radii,
                                         const std::vector<AsymptoteMethod>& methods,
                                         AsymptoteQuantity what = AsymptoteQuantity::Both,
                                         const TimeIntegralOptions& topt = {}, const SpectralOptions& sopt = {});
/// Columns r,flux_norm,prob_norm,method,err; NaN columns are left empty.
void write_asymptote_csv(std::ostream& out, const std::vector<AsymptoteRow>& rows);

// ---------------------------------------------------------------- continuity

struct ContinuitySteps {
  double h_t = 0.0;
  double h_x = 0.0;
};

struct ContinuityResult {
  double residual = 0.0;
  double drho_dt = 0.0;
  double div_j = 0.0;
};

using FluxFunction = std::function<FluxDensity4(const SpacetimePoint&)>;

/// |d_t rho + div j| / (|d_t rho| + |div j| + floor) by 5-point central
/// differences.
ContinuityResult continuity_residual(const FluxFunction& flux, const SpacetimePoint& pt, const ContinuitySteps& h,
                                     double floor);

/// Steps default to 1/100 of the local width and of the time the packet
/// needs to change; floor is 1e-12 of the density scale rho_peak / time.
ContinuityResult continuity_residual(const PacketModel& model, const SpacetimePoint& pt, PsiMethod method,
                                     std::optional<ContinuitySteps> h = std::nullopt,
                                     const FieldOptions& opt = {1e-12});

ContinuitySteps default_continuity_steps(const MomentsReport& m, const Kinematics& kin, double t);

struct SphereBalance {
  double inside = 0.0; // int_{|x| < r} rho(0, x) d^3x
  double through = 0.0; // 4 pi r^2 |Phi(r)|
  double inside_err = 0.0;
  double through_err = 0.0;
};

SphereBalance sphere_flux_balance(const PacketModel& model, double r, AsymptoteMethod flux_method =
                                                                          AsymptoteMethod::Spectral);

// ------------------------------------------------------------ dispersion times

struct DispersionTimeEntry {
  double mass_eV = 0.0;
  double energy_eV = 0.0; // total energy; equal to the mass at rest
  double sigma_x_rest_m = 1e-6;
};

struct DispersionTimeRow {
  double mass_eV = 0.0;
  double gamma = 1.0;
  bool covariant = false;
  double tau_L_s = 0.0;
  double tau_T_s = 0.0;
  double tau_p_s = 0.0;
};

/// The five particles of the reference table: electron and 0.1 eV neutrino at
/// rest and at 1 GeV, and a 1 g body at rest, all with sigma_x = 1 um.
std::vector<DispersionTimeEntry> reference_table_entries();

/// Non-covariant and covariant rows for every entry, in entry order.
std::vector<DispersionTimeRow> dispersion_times_table(const std::vector<DispersionTimeEntry>& entries);
void write_dispersion_table_csv(std::ostream& out, const std::vector<DispersionTimeRow>& rows);

} // namespace wavekit

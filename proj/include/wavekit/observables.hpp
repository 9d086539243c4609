#pragma once

#include <array>
#include <complex>
#include <optional>
#include <ostream>
#include <vector>

#include "wavekit/expectation.hpp"
#include "wavekit/kinematics.hpp"
#include "wavekit/models.hpp"

namespace wavekit {

using cplx = std::complex<double>;

enum class PsiMethod { ClosedForm, Quadrature };

enum class DerivativeMethod {
  // Differentiate under the momentum integral (exact for the quadrature path,
  // analytic for the closed forms).
  Spectral,
  // 5-point central differences of psi with one Richardson step.
  FiniteDifference,
};

struct FieldOptions {
  double rel_tol = 1e-8;
  int max_subdivisions = 20000;
  // Closed forms refuse packets with sigma_p / m at or above this.
  double max_ratio = kDefaultClosedFormRatio;
  DerivativeMethod derivatives = DerivativeMethod::Spectral;
};

/// psi and its first derivatives at one spacetime point (lab frame).
struct FieldValue {
  cplx psi;
  cplx dt;
  std::array<cplx, 3> grad{};
};

struct FluxDensity4 {
  double rho = 0.0;
  Vec3 j{};
  cplx psi;
  SpacetimePoint at;
};

struct MomentsReport {
  double mean_E = 0.0;
  Vec3 mean_P{};
  Vec3 mean_v{};
  double mean_v2 = 0.0;
  double mean_inv_speed = 0.0;
  double sigma_x2 = 0.0;
  double sigma_v2 = 0.0;
  // Per Cartesian component: sigma_x2 = sum of sigma_x2_axis, likewise v.
  Vec3 sigma_x2_axis{};
  Vec3 sigma_v2_axis{};
  // Split along / across the packet axis (transverse summed over both).
  double sigma_x2_L = 0.0;
  double sigma_x2_T = 0.0;
  double sigma_v2_L = 0.0;
  double sigma_v2_T = 0.0;
  double norm_residual = 0.0;

  struct Errors {
    double norm = 0.0;
    double mean_E = 0.0;
    double mean_P = 0.0;
    double mean_v = 0.0;
    double mean_v2 = 0.0;
    double mean_inv_speed = 0.0;
    double sigma_x2 = 0.0;
  } err;
};

/// psi(t, x) = int d^3k phi(k) e^{-i(E_k t - k.x)} / ((2 pi)^3 2 E_k).
/// Points tagged Frame::Rest are first moved to the lab frame.
cplx psi(const PacketModel& model, const SpacetimePoint& pt, PsiMethod method, const FieldOptions& opt = {});

FieldValue field(const PacketModel& model, const SpacetimePoint& pt, PsiMethod method,
                 const FieldOptions& opt = {});

/// rho = i(psi* d_t psi - c.c.), j = -i(psi* grad psi - c.c.).
FluxDensity4 flux4(const PacketModel& model, const SpacetimePoint& pt, PsiMethod method,
                   const FieldOptions& opt = {});
FluxDensity4 flux_from_field(const FieldValue& f, const SpacetimePoint& pt);

MomentsReport moments(const PacketModel& model, const quad::ExpectationOptions& opt = {});

/// Classical trajectory <x>(t) = <v> t.
Vec3 trajectory(const MomentsReport& m, double t);
Vec3 trajectory(const PacketModel& model, double t);

/// Spatial standard deviations of the packet at time t along each Cartesian
/// axis, from the dispersion law.
Vec3 spatial_widths(const MomentsReport& m, double t);

struct GridOptions {
  // Points per axis (even).
  int n = 96;
  // Box half-width along each axis in units of that axis' width at time t.
  double extent_sigmas = 8.0;
  // Repeat on a coarser grid (same box) and on a 1.5x larger box (same
  // spacing); the larger difference is the reported error. While the box
  // check fails the box keeps growing, up to max_n points per axis; a box
  // that cannot grow at all is compared with a 1.5x smaller one.
  bool estimate_error = true;
  int max_n = 192;
  // GridTooCoarse when the variance error exceeds this fraction.
  double max_rel_error = 0.01;
  // Quadrature: exact superposition synthesized by FFT. ClosedForm:
  // pointwise Gaussian closed forms.
  PsiMethod method = PsiMethod::Quadrature;
};

struct DispersionCurve {
  std::vector<double> times;
  std::vector<double> sigma_x2;
  // Present when measured.
  std::vector<double> measured;
  std::vector<double> measured_err;
  // Present for Gaussian kinds (closed-form per-axis widths).
  std::vector<double> sigma_xL2;
  std::vector<double> sigma_xT2;
};

/// Closed-form longitudinal and per-axis transverse variance of the
/// Gaussian models at time t.
double gaussian_sigma_xL2(const PacketModel& model, double t);
double gaussian_sigma_xT2(const PacketModel& model, double t);

DispersionCurve dispersion_curve(const PacketModel& model, const std::vector<double>& times, bool measure,
                                 const GridOptions& grid = {});

/// Columns t,sigma_x2,measured,measured_err,sigma_xL2,sigma_xT2; absent
/// series leave their fields empty.
void write_dispersion_csv(std::ostream& out, const DispersionCurve& curve);

} // namespace wavekit

#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "wavekit/kinematics.hpp"
#include "wavekit/spline.hpp"

namespace wavekit {

enum class ModelKind {
  GaussianNoncov,
  GaussianCovExact,
  GaussianCovFactorized,
  TabulatedIsotropic,
};

std::string_view kind_name(ModelKind kind);
ModelKind parse_kind(std::string_view name); // throws ParseError

enum class CovVariant { Exact, Factorized };

// Gaussian envelopes are integrated out to this many momentum widths from the
// peak; exp(-n^2/4) is the amplitude left at the cut.
inline constexpr double kSupportSigmas = 12.0;

/// sqrt(2 E_p) (2 pi / sigma_p^2)^{3/4} exp(-(k - p)^2 / 4 sigma_p^2)
double phi_gaussian_noncov(const Vec3& k, const Kinematics& kin);

/// Covariant Gaussian. The exact variant needs the normalization constant
/// N_RG from `normalize` and throws NotNormalized without it.
double phi_gaussian_cov(const Vec3& k, const Kinematics& kin, CovVariant variant,
                        std::optional<double> n_rg = std::nullopt);

struct TableSample {
  double k = 0.0;   // eV
  double phi = 0.0; // real, >= 0
};

/// A momentum-space envelope phi(k) together with its kinematics. Immutable
/// value type; all evaluations are pure.
class PacketModel {
public:
  static PacketModel gaussian(ModelKind kind, const Kinematics& kin, bool normalize_now = true);
  static PacketModel tabulated(std::vector<TableSample> samples, const Kinematics& kin);

  ModelKind kind() const { return kind_; }
  const Kinematics& kin() const { return kin_; }

  /// phi(k) at a lab-frame momentum. Throws NotNormalized for an exact
  /// covariant model that has not been normalized.
  double amplitude(const Vec3& k) const;
  double amplitude_unchecked(const Vec3& k) const;
  /// Gradient of phi with respect to the lab-frame momentum.
  Vec3 gradient(const Vec3& k) const;

  /// Shape is a function of the packet rest-frame momentum only (exact
  /// covariant Gaussian, tabulated envelopes).
  bool boost_invariant() const;
  /// phi depends only on |k| in its rest frame and the rest-frame profile
  /// functions below are available.
  bool isotropic_at_rest() const;
  bool at_rest() const { return kin_.at_rest(); }

  /// Rest-frame radial profile f(s), s = |k*|, and its derivatives.
  double profile(double s) const;
  double profile_d1(double s) const;
  double profile_d2(double s) const;
  /// Radial support [lo, hi] of the rest-frame profile.
  double support_lo() const;
  double support_hi() const;
  /// Longitudinal stretch of the lab-frame envelope around p relative to
  /// its transverse width (1 for the non-covariant Gaussian).
  double longitudinal_stretch() const;

  bool normalized() const { return normalized_; }
  double scale() const { return scale_; }
  double norm_residual() const { return norm_residual_; }
  /// Factor applied by the most recent `normalize`.
  double normalization_factor() const { return last_factor_; }
  /// Factor applied on top of the leading-order prefactor of the closed-form
  /// Gaussian wave functions: 1 for a normalized model, f after scaled(f).
  double closed_form_scale() const;

  PacketModel scaled(double factor) const;
  const NaturalSpline& table() const { return table_; }

private:
  friend PacketModel normalize(const PacketModel& model);
  friend PacketModel model_from_table(std::vector<TableSample> samples, const Kinematics& kin);

  PacketModel(ModelKind kind, const Kinematics& kin) : kind_(kind), kin_(kin) {}

  ModelKind kind_;
  Kinematics kin_;
  NaturalSpline table_;
  double scale_ = 1.0;
  bool normalized_ = false;
  double norm_residual_ = 0.0;
  double last_factor_ = 1.0;
  double normalized_scale_ = 1.0;
};

/// Tabulated isotropic rest-frame envelope, interpolated by a natural cubic
/// spline and normalized on construction.
PacketModel model_from_table(std::vector<TableSample> samples, const Kinematics& kin);

/// Rescales the envelope so that int d^3k phi^2 / ((2 pi)^3 2 E_k) = 1.
PacketModel normalize(const PacketModel& model);

std::vector<TableSample> read_table_csv(const std::filesystem::path& path);
void write_table_csv(const std::filesystem::path& path, const std::vector<TableSample>& samples);

/// Smoothed top-hat erfc((k - edge) / width) / 2, sampled on `n` points over
/// [0, edge + 7 width]. The analytic edge keeps the spatial tails Gaussian.
std::vector<TableSample> smooth_top_hat_samples(double edge, double width, int n);

} // namespace wavekit

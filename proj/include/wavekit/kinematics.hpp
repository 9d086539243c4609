#pragma once

#include "wavekit/vec3.hpp"

namespace wavekit {

// Default bound on sigma_p / m for the narrow-packet closed forms; the energy
// expansion behind them is not trusted beyond it.
inline constexpr double kDefaultClosedFormRatio = 0.2;

/// Kinematic parameters of a packet: mass, mean momentum and momentum width,
/// plus every derived quantity. Energies in eV, times and lengths in 1/eV.
struct Kinematics {
  double m = 1.0;
  Vec3 p{};
  double sigma_p = 0.01;

  double E_p = 1.0;
  double gamma = 1.0;
  Vec3 v{};
  double sigma_x2 = 0.0; // 1 / (4 sigma_p^2)
  double tau = 0.0;      // 2 sigma_x^2 m
  double tau_L = 0.0;    // gamma^3 tau
  double tau_T = 0.0;    // gamma tau
  double tau_p = 0.0;    // gamma tau
  // Longitudinal unit vector: direction of v, or the caller's choice at rest.
  Vec3 axis{0, 0, 1};

  double speed() const { return norm(v); }
  double sigma_x() const;
  bool at_rest() const { return norm2(p) == 0.0; }
};

Kinematics kinematics_from(double m, const Vec3& p, double sigma_p, const Vec3& rest_axis = {0, 0, 1});

// Throws MethodUnavailable unless sigma_p / m < max_ratio.
void require_narrow(const Kinematics& kin, double max_ratio = kDefaultClosedFormRatio);

enum class Frame { Rest, Lab };

struct SpacetimePoint {
  double t = 0.0;
  Vec3 x{};
  Frame frame = Frame::Lab;
};

struct FourMomentum {
  double E = 0.0;
  Vec3 k{};
};

// Lorentz transformation into a frame moving with velocity `velocity`
// (|velocity| < 1). Applies to coordinates (t, x) and momenta (E, k) alike.
FourMomentum lorentz_transform(const FourMomentum& a, const Vec3& velocity);

SpacetimePoint boost_to_rest(const SpacetimePoint& pt, const Kinematics& kin);
SpacetimePoint boost_to_lab(const SpacetimePoint& pt, const Kinematics& kin);

// Lab momentum k (on shell with mass kin.m) to the packet rest frame, and back.
FourMomentum momentum_to_rest(const Vec3& k, const Kinematics& kin);
FourMomentum momentum_to_lab(const Vec3& k_rest, const Kinematics& kin);

inline double on_shell_energy(double m, const Vec3& k) { return std::sqrt(norm2(k) + m * m); }

} // namespace wavekit

#pragma once

#include <functional>

#include "wavekit/models.hpp"
#include "wavekit/quadrature.hpp"

namespace wavekit::quad {

struct ExpectationOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-10;
  // Gauss-Legendre nodes in cos(theta); the azimuth uses twice as many
  // trapezoid nodes.
  int angular_order = 24;
  // Skip the radial reduction even when it applies.
  bool force_3d = false;
  int max_subdivisions = 4000;

  QuadOptions radial() const;
};

using MomentFunction = std::function<double(const Vec3&)>;
using RadialFunction = std::function<double(double)>;

/// int d^3k H(k) / ((2 pi)^3 2 E_k) for an arbitrary integrand H. Uses the
/// spherical product rule (radial adaptive x angular Gauss-trapezoid),
/// centred on the packet rest frame for boost-invariant envelopes and on p
/// otherwise. Never applies phi itself; see `expectation`.
QuadResult measure_integral(const PacketModel& model, const MomentFunction& integrand,
                            const ExpectationOptions& opt = {});

/// Same measure with a radial integrand H(|k|), for models isotropic at rest
/// that are evaluated in their rest frame:
///   int dk 4 pi k^2 H(k) / ((2 pi)^3 2 E_k).
QuadResult measure_integral_radial(const PacketModel& model, const RadialFunction& integrand,
                                   const ExpectationOptions& opt = {});

/// <F> = int d^3k phi^2(k) F(k) / ((2 pi)^3 2 E_k).
QuadResult expectation(const PacketModel& model, const MomentFunction& f, const ExpectationOptions& opt = {});

/// <F> for an isotropic F(|k|). Reduces to the 1D radial integral when the
/// model is isotropic and at rest; falls back to the 3D rule otherwise.
QuadResult expectation_radial(const PacketModel& model, const RadialFunction& f,
                              const ExpectationOptions& opt = {});

} // namespace wavekit::quad

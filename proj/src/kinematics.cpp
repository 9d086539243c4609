#include "wavekit/kinematics.hpp"

#include <cmath>
#include <string>

#include "wavekit/error.hpp"

namespace wavekit {

double Kinematics::sigma_x() const { return std::sqrt(sigma_x2); }

Kinematics kinematics_from(double m, const Vec3& p, double sigma_p, const Vec3& rest_axis) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    fail(ErrorCode::NonPositiveMass, "mass must be positive and finite");
  }
  if (!(sigma_p > 0.0) || !std::isfinite(sigma_p)) {
    fail(ErrorCode::NonPositiveWidth, "sigma_p must be positive and finite");
  }
  if (!is_finite(p)) {
    fail(ErrorCode::InvalidArgument, "momentum must be finite");
  }

  Kinematics kin;
  kin.m = m;
  kin.p = p;
  kin.sigma_p = sigma_p;
  kin.E_p = on_shell_energy(m, p);
  kin.gamma = kin.E_p / m;
  kin.v = p / kin.E_p;
  kin.sigma_x2 = 1.0 / (4.0 * sigma_p * sigma_p);
  kin.tau = 2.0 * kin.sigma_x2 * m;
  kin.tau_T = kin.gamma * kin.tau;
  kin.tau_L = kin.gamma * kin.gamma * kin.tau_T;
  kin.tau_p = kin.tau_T;

  const double pn = norm(p);
  if (pn > 0.0) {
    kin.axis = p / pn;
  } else {
    const double an = norm(rest_axis);
    if (!(an > 0.0) || !std::isfinite(an)) {
      fail(ErrorCode::InvalidArgument, "rest-frame axis must be a nonzero finite vector");
    }
    kin.axis = rest_axis / an;
  }
  return kin;
}

void require_narrow(const Kinematics& kin, double max_ratio) {
  const double ratio = kin.sigma_p / kin.m;
  if (!(ratio < max_ratio)) {
    fail(ErrorCode::MethodUnavailable,
         "closed forms need sigma_p/m < " + std::to_string(max_ratio) + " (got " +
             std::to_string(ratio) + ")");
  }
}

FourMomentum lorentz_transform(const FourMomentum& a, const Vec3& velocity) {
  const double beta2 = norm2(velocity);
  if (beta2 == 0.0) {
    return a;
  }
  const double g = 1.0 / std::sqrt(1.0 - beta2);
  const double beta = std::sqrt(beta2);
  const Vec3 n = velocity / beta;
  const double along = dot(n, a.k);
  FourMomentum out;
  out.E = g * (a.E - beta * along);
  const double along_new = g * (along - beta * a.E);
  out.k = a.k + (along_new - along) * n;
  return out;
}

SpacetimePoint boost_to_rest(const SpacetimePoint& pt, const Kinematics& kin) {
  if (pt.frame != Frame::Lab) {
    fail(ErrorCode::FrameMismatch, "boost_to_rest expects a lab-frame point");
  }
  const FourMomentum out = lorentz_transform({pt.t, pt.x}, kin.v);
  return {out.E, out.k, Frame::Rest};
}

SpacetimePoint boost_to_lab(const SpacetimePoint& pt, const Kinematics& kin) {
  if (pt.frame != Frame::Rest) {
    fail(ErrorCode::FrameMismatch, "boost_to_lab expects a rest-frame point");
  }
  const FourMomentum out = lorentz_transform({pt.t, pt.x}, -kin.v);
  return {out.E, out.k, Frame::Lab};
}

FourMomentum momentum_to_rest(const Vec3& k, const Kinematics& kin) {
  return lorentz_transform({on_shell_energy(kin.m, k), k}, kin.v);
}

FourMomentum momentum_to_lab(const Vec3& k_rest, const Kinematics& kin) {
  return lorentz_transform({on_shell_energy(kin.m, k_rest), k_rest}, -kin.v);
}

} // namespace wavekit

#include "wavekit/expectation.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace wavekit::quad {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPiCubed = 8.0 * kPi * kPi * kPi;

struct AngularRule {
  std::vector<Vec3> dirs;
  std::vector<double> weights; // sum to 4 pi
};

AngularRule make_angular_rule(int order, const Vec3& axis) {
  const GaussRule& gl = gauss_legendre(order);
  const int nphi = 2 * order;
  const Vec3 e1 = orthogonal_unit(axis);
  const Vec3 e2 = cross(axis, e1);
  AngularRule rule;
  rule.dirs.reserve(static_cast<std::size_t>(order) * nphi);
  rule.weights.reserve(rule.dirs.capacity());
  for (int i = 0; i < order; ++i) {
    const double c = gl.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * kPi * (j + 0.5) / nphi;
      rule.dirs.push_back(c * axis + (s * std::cos(phi)) * e1 + (s * std::sin(phi)) * e2);
      rule.weights.push_back(gl.weights[i] * 2.0 * kPi / nphi);
    }
  }
  return rule;
}

int radial_segments(const PacketModel& model) {
  if (model.kind() == ModelKind::TabulatedIsotropic) {
    const int pieces = static_cast<int>(model.table().knots().size()) - 1;
    return std::clamp(pieces, 4, 512);
  }
  return 4;
}

} // namespace

QuadOptions ExpectationOptions::radial() const {
  QuadOptions q;
  q.abs_tol = abs_tol;
  q.rel_tol = rel_tol;
  q.max_subdivisions = max_subdivisions;
  return q;
}

QuadResult measure_integral(const PacketModel& model, const MomentFunction& integrand,
                            const ExpectationOptions& opt) {
  const Kinematics& kin = model.kin();
  const AngularRule rule = make_angular_rule(opt.angular_order, kin.axis);
  const double lo = model.support_lo();
  const double hi = model.support_hi();

  if (model.boost_invariant()) {
    // d^3k / E is invariant: integrate over the rest-frame momentum.
    auto radial = [&](double s) {
      const double e_star = std::sqrt(s * s + kin.m * kin.m);
      double sum = 0.0;
      for (std::size_t i = 0; i < rule.dirs.size(); ++i) {
        const FourMomentum lab = momentum_to_lab(s * rule.dirs[i], kin);
        sum += rule.weights[i] * integrand(lab.k);
      }
      return s * s * sum / (kTwoPiCubed * 2.0 * e_star);
    };
    return integrate_adaptive(radial, lo, hi, opt.radial(), radial_segments(model));
  }

  const double stretch = model.longitudinal_stretch();
  auto radial = [&](double q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.dirs.size(); ++i) {
      const Vec3 d = q * rule.dirs[i];
      const double along = dot(d, kin.axis);
      const Vec3 k = kin.p + d + ((stretch - 1.0) * along) * kin.axis;
      sum += rule.weights[i] * integrand(k) / (2.0 * on_shell_energy(kin.m, k));
    }
    return stretch * q * q * sum / kTwoPiCubed;
  };
  return integrate_adaptive(radial, lo, hi, opt.radial(), radial_segments(model));
}

QuadResult measure_integral_radial(const PacketModel& model, const RadialFunction& integrand,
                                   const ExpectationOptions& opt) {
  const double m = model.kin().m;
  auto radial = [&](double k) {
    return 4.0 * kPi * k * k * integrand(k) / (kTwoPiCubed * 2.0 * std::sqrt(k * k + m * m));
  };
  return integrate_adaptive(radial, model.support_lo(), model.support_hi(), opt.radial(),
                            radial_segments(model));
}

QuadResult expectation(const PacketModel& model, const MomentFunction& f, const ExpectationOptions& opt) {
  return measure_integral(
      model,
      [&](const Vec3& k) {
        const double a = model.amplitude(k);
        return a * a * f(k);
      },
      opt);
}

QuadResult expectation_radial(const PacketModel& model, const RadialFunction& f, const ExpectationOptions& opt) {
  if (!opt.force_3d && model.isotropic_at_rest() && model.at_rest()) {
    return measure_integral_radial(
        model,
        [&](double k) {
          const double a = model.profile(k);
          return a * a * f(k);
        },
        opt);
  }
  return expectation(model, [&](const Vec3& k) { return f(norm(k)); }, opt);
}

} // namespace wavekit::quad

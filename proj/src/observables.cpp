#include "wavekit/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <numbers>

#include "wavekit/error.hpp"
#include "wavekit/field_grid.hpp"
#include "wavekit/quadrature.hpp"

namespace wavekit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

bool is_gaussian(ModelKind kind) { return kind != ModelKind::TabulatedIsotropic; }

SpacetimePoint as_lab(const SpacetimePoint& pt, const Kinematics& kin) {
  return pt.frame == Frame::Lab ? pt : boost_to_lab(pt, kin);
}

// Closed-form Gaussian wave functions with analytic log-derivatives. Both
// models share one shape: separate longitudinal / transverse widths and
// spreading times.
FieldValue closed_form_field(const PacketModel& model, double t, const Vec3& x, const FieldOptions& opt) {
  if (!is_gaussian(model.kind())) {
    fail(ErrorCode::MethodUnavailable, "closed-form wave function exists only for Gaussian envelopes");
  }
  const Kinematics& kin = model.kin();
  require_narrow(kin, opt.max_ratio);
  const bool covariant = model.kind() != ModelKind::GaussianNoncov;
  const Vec3& n = kin.axis;
  const double v = kin.speed();
  const double sx2 = kin.sigma_x2;
  const double sl2 = covariant ? sx2 / (kin.gamma * kin.gamma) : sx2;
  const double st2 = sx2;
  const double tl = covariant ? kin.tau_p : kin.tau_L;
  const double tt = covariant ? kin.tau_p : kin.tau_T;
  const double norm_mass = covariant ? kin.m : kin.E_p;
  const double c = model.closed_form_scale() /
                   (std::pow(2.0 * kPi, 0.75) * std::sqrt(2.0 * norm_mass) * std::pow(sx2, 0.75));

  const double dl = dot(n, x) - v * t;
  const Vec3 dt_vec = x - dot(n, x) * n;
  const double dt2 = norm2(dt_vec);
  const cplx zl = 1.0 + kI * (t / tl);
  const cplx zt = 1.0 + kI * (t / tt);
  const cplx al = 1.0 / (4.0 * sl2 * zl);
  const cplx at = 1.0 / (4.0 * st2 * zt);
  const double plane = kin.E_p * t - dot(kin.p, x);

  const cplx expo = -kI * plane - al * (dl * dl) - at * dt2;
  FieldValue f;
  f.psi = c / (std::sqrt(zl) * zt) * std::exp(expo);

  const cplx rl = (kI / tl) / zl;
  const cplx rt = (kI / tt) / zt;
  const cplx dlog_t = -0.5 * rl - rt - kI * kin.E_p + 2.0 * al * v * dl + al * rl * (dl * dl) + at * rt * dt2;
  f.dt = f.psi * dlog_t;
  for (int i = 0; i < 3; ++i) {
    const cplx g = kI * kin.p[i] - 2.0 * al * dl * n[i] - 2.0 * at * dt_vec[i];
    f.grad[i] = f.psi * g;
  }
  return f;
}

quad::QuadOptions field_quad_options(const FieldOptions& opt, double scale) {
  quad::QuadOptions q;
  q.rel_tol = opt.rel_tol;
  // Points far out in the tails have tiny values; do not chase relative
  // accuracy below this fraction of the packet's peak amplitude.
  // The 1e-12 floor sits just above the rounding noise of the cancelling
  // oscillatory sum.
  q.abs_tol = std::max(opt.rel_tol * 1e-6, 1e-12) * scale;
  q.max_subdivisions = opt.max_subdivisions;
  return q;
}

// Rest-frame field of an isotropic profile f(|k|):
//   psi = (1 / 2 pi^2) int dk k^2 j0(k r) f(k) e^{-i E t} / (2 E)
// with d/dt and d/dr taken under the integral.
struct RadialField {
  cplx psi;
  cplx dt;
  cplx dr;
};

RadialField rest_radial_field(const PacketModel& model, double t, double r, const FieldOptions& opt) {
  const double m = model.kin().m;
  const double lo = model.support_lo();
  const double hi = model.support_hi();
  auto integrand = [&](double k) {
    const double e = std::sqrt(k * k + m * m);
    const double f = model.profile(k);
    // e^{-i (E - m) t}; the e^{-i m t} factor is applied afterwards.
    const double de = k * k / (e + m);
    const cplx phase = std::polar(1.0, -de * t);
    const double kr = k * r;
    const cplx base = phase * (k * k * f / (2.0 * e));
    quad::CArray<3> out;
    const double j0 = quad::spherical_j0(kr);
    out[0] = base * j0;
    out[1] = base * (-kI * e * j0);
    out[2] = base * (-k * quad::spherical_j1(kr));
    return out;
  };
  const double scale = quad::composite_gauss(
      [&](double k) {
        const double e = std::sqrt(k * k + m * m);
        return k * k * std::abs(model.profile(k)) * std::max(1.0, e) / (2.0 * e);
      },
      lo, hi, 16, 8);
  const double span = (std::sqrt(hi * hi + m * m) - m) * std::abs(t) + hi * r;
  const int segments = std::clamp(static_cast<int>(span / 2.0) + 4, 4, 4000);
  const auto res = quad::integrate_adaptive<quad::CArray<3>>(integrand, lo, hi, field_quad_options(opt, scale),
                                                             segments);
  const cplx pre = std::polar(1.0 / (2.0 * kPi * kPi), -m * t);
  return {pre * res.value[0], pre * res.value[1], pre * res.value[2]};
}

FieldValue rest_isotropic_field(const PacketModel& model, double t, const Vec3& x, const FieldOptions& opt) {
  const double r = norm(x);
  const RadialField rf = rest_radial_field(model, t, r, opt);
  FieldValue f;
  f.psi = rf.psi;
  f.dt = rf.dt;
  if (r > 0.0) {
    for (int i = 0; i < 3; ++i) f.grad[i] = rf.dr * (x[i] / r);
  }
  return f;
}

// Boost-invariant envelope seen from the lab: evaluate in the packet rest
// frame and carry the derivatives back with the chain rule.
FieldValue boosted_field(const PacketModel& model, double t, const Vec3& x, const FieldOptions& opt) {
  const Kinematics& kin = model.kin();
  const SpacetimePoint rest = boost_to_rest({t, x, Frame::Lab}, kin);
  const FieldValue fr = rest_isotropic_field(model, rest.t, rest.x, opt);
  const Vec3& n = kin.axis;
  const double g = kin.gamma;
  const double v = kin.speed();
  cplx dl_rest = 0.0;
  for (int i = 0; i < 3; ++i) dl_rest += fr.grad[i] * n[i];
  FieldValue f;
  f.psi = fr.psi;
  f.dt = g * fr.dt - g * v * dl_rest;
  const cplx dl_lab = -g * v * fr.dt + g * dl_rest;
  for (int i = 0; i < 3; ++i) {
    // Transverse part unchanged, longitudinal part replaced.
    f.grad[i] = fr.grad[i] + (dl_lab - dl_rest) * n[i];
  }
  return f;
}

// Envelopes with axial symmetry about p (non-covariant and factorized
// Gaussians in a moving frame): the azimuth integrates to a Bessel J0,
//   psi = e^{i(p.x - E_p t)} / (4 pi^2) int dq_L int dq_T q_T phi J0(q_T rho)
//         e^{i q_L x_L - i (E - E_p) t} / (2 E).
FieldValue axial_field(const PacketModel& model, double t, const Vec3& x, const FieldOptions& opt) {
  const Kinematics& kin = model.kin();
  const Vec3& n = kin.axis;
  const double p = norm(kin.p);
  const double xl = dot(n, x);
  const Vec3 xt_vec = x - xl * n;
  const double rho = norm(xt_vec);
  const Vec3 e1 = rho > 0.0 ? xt_vec / rho : orthogonal_unit(n);
  const double ql_max = kSupportSigmas * kin.sigma_p * model.longitudinal_stretch();
  const double qt_max = kSupportSigmas * kin.sigma_p;

  auto envelope = [&](double ql, double qt) {
    const Vec3 k = (p + ql) * n + qt * e1;
    return model.amplitude(k);
  };
  const double scale = quad::composite_gauss(
      [&](double ql) {
        return quad::composite_gauss(
            [&](double qt) {
              const double kk = (p + ql) * (p + ql) + qt * qt;
              return qt * std::abs(envelope(ql, qt)) / (2.0 * std::sqrt(kk + kin.m * kin.m));
            },
            0.0, qt_max, 8, 8);
      },
      -ql_max, ql_max, 8, 8) / (4.0 * kPi * kPi);
  // The derivative components carry an extra factor of up to E.
  const quad::QuadOptions qopt = field_quad_options(opt, scale * 4.0 * kPi * kPi * std::max(1.0, kin.E_p));
  quad::QuadOptions inner_opt = qopt;
  inner_opt.throw_on_failure = false;
  inner_opt.rel_tol *= 0.1;
  inner_opt.abs_tol *= 0.1 / (2.0 * ql_max);

  const double speed = kin.speed();
  const double span_l = ql_max * std::abs(xl - speed * t) + ql_max * ql_max * std::abs(t) / kin.E_p;
  const double span_t = qt_max * rho + qt_max * qt_max * std::abs(t) / kin.E_p;
  const int seg_l = std::clamp(static_cast<int>(span_l / 2.0) + 4, 4, 2000);
  const int seg_t = std::clamp(static_cast<int>(span_t / 2.0) + 2, 2, 2000);

  auto outer = [&](double ql) {
    auto inner = [&](double qt) {
      const double kk_minus_pp = 2.0 * p * ql + ql * ql + qt * qt;
      const double e = std::sqrt((p + ql) * (p + ql) + qt * qt + kin.m * kin.m);
      const double de = kk_minus_pp / (e + kin.E_p);
      const cplx phase = std::polar(1.0, ql * xl - de * t);
      const cplx base = phase * (qt * envelope(ql, qt) / (2.0 * e));
      const double j0 = std::cyl_bessel_j(0.0, qt * rho);
      const double j1 = std::cyl_bessel_j(1.0, qt * rho);
      quad::CArray<4> out;
      out[0] = base * j0;
      out[1] = base * (-kI * e * j0);
      out[2] = base * (kI * (p + ql) * j0);
      out[3] = base * (-qt * j1);
      return out;
    };
    return quad::integrate_adaptive<quad::CArray<4>>(inner, 0.0, qt_max, inner_opt, seg_t).value;
  };
  const auto res = quad::integrate_adaptive<quad::CArray<4>>(outer, -ql_max, ql_max, qopt, seg_l);
  const cplx pre = std::polar(1.0 / (4.0 * kPi * kPi), dot(kin.p, x) - kin.E_p * t);
  FieldValue f;
  f.psi = pre * res.value[0];
  f.dt = pre * res.value[1];
  const cplx dl = pre * res.value[2];
  const cplx drho = pre * res.value[3];
  for (int i = 0; i < 3; ++i) f.grad[i] = dl * n[i] + (rho > 0.0 ? drho * e1[i] : cplx{});
  return f;
}

FieldValue spectral_field(const PacketModel& model, double t, const Vec3& x, PsiMethod method,
                          const FieldOptions& opt) {
  if (method == PsiMethod::ClosedForm) {
    return closed_form_field(model, t, x, opt);
  }
  if (model.at_rest()) {
    return rest_isotropic_field(model, t, x, opt);
  }
  if (model.boost_invariant()) {
    return boosted_field(model, t, x, opt);
  }
  return axial_field(model, t, x, opt);
}

// Derivatives by 5-point central differences with one Richardson step.
FieldValue finite_difference_field(const PacketModel& model, double t, const Vec3& x, PsiMethod method,
                                   const FieldOptions& opt) {
  const Kinematics& kin = model.kin();
  auto value = [&](double tt, const Vec3& xx) { return spectral_field(model, tt, xx, method, opt).psi; };
  auto stencil = [](auto&& f, double h) { return (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h); };
  auto richardson = [&](auto&& f, double h) { return (16.0 * stencil(f, h) - stencil(f, 2.0 * h)) / 15.0; };

  double len = kin.sigma_x();
  if (norm(kin.p) > 0.0) len = std::min(len, 2.0 * kPi / norm(kin.p));
  const double hx = 0.02 * len;
  const double ht = 0.02 * std::min(kin.tau, 2.0 * kPi / kin.E_p);

  FieldValue f;
  f.psi = value(t, x);
  f.dt = richardson([&](double d) { return value(t + d, x); }, ht);
  for (int i = 0; i < 3; ++i) {
    f.grad[i] = richardson(
        [&](double d) {
          Vec3 y = x;
          y[i] += d;
          return value(t, y);
        },
        hx);
  }
  return f;
}

} // namespace

FieldValue field(const PacketModel& model, const SpacetimePoint& pt, PsiMethod method, const FieldOptions& opt) {
  const SpacetimePoint lab = as_lab(pt, model.kin());
  if (!std::isfinite(lab.t) || !is_finite(lab.x)) {
    fail(ErrorCode::InvalidArgument, "spacetime point must be finite");
  }
  if (method == PsiMethod::ClosedForm && !is_gaussian(model.kind())) {
    fail(ErrorCode::MethodUnavailable, "closed-form wave function exists only for Gaussian envelopes");
  }
  if (opt.derivatives == DerivativeMethod::FiniteDifference) {
    return finite_difference_field(model, lab.t, lab.x, method, opt);
  }
  return spectral_field(model, lab.t, lab.x, method, opt);
}

cplx psi(const PacketModel& model, const SpacetimePoint& pt, PsiMethod method, const FieldOptions& opt) {
  FieldOptions o = opt;
  o.derivatives = DerivativeMethod::Spectral;
  return field(model, pt, method, o).psi;
}

FluxDensity4 flux_from_field(const FieldValue& f, const SpacetimePoint& pt) {
  FluxDensity4 out;
  out.psi = f.psi;
  out.at = pt;
  out.rho = -2.0 * std::imag(std::conj(f.psi) * f.dt);
  for (int i = 0; i < 3; ++i) out.j[i] = 2.0 * std::imag(std::conj(f.psi) * f.grad[i]);
  return out;
}

FluxDensity4 flux4(const PacketModel& model, const SpacetimePoint& pt, PsiMethod method, const FieldOptions& opt) {
  const SpacetimePoint lab = as_lab(pt, model.kin());
  return flux_from_field(field(model, lab, method, opt), lab);
}

MomentsReport moments(const PacketModel& model, const quad::ExpectationOptions& opt) {
  const Kinematics& kin = model.kin();
  const double m = kin.m;
  MomentsReport r;

  if (!opt.force_3d && model.isotropic_at_rest() && model.at_rest()) {
    auto radial = [&](auto&& f) { return quad::expectation_radial(model, f, opt); };
    const auto norm_res = radial([](double) { return 1.0; });
    const auto e = radial([m](double k) { return std::sqrt(k * k + m * m); });
    const auto v2 = radial([m](double k) { return k * k / (k * k + m * m); });
    const auto inv = radial([m](double k) { return std::sqrt(k * k + m * m) / k; });
    // sigma_x^2 = -int phi laplacian(phi) / ((2 pi)^3 2E), radial Laplacian.
    const auto sx = quad::measure_integral_radial(
        model,
        [&](double k) {
          if (k <= 0.0) return 0.0;
          return -model.profile(k) * (model.profile_d2(k) + 2.0 * model.profile_d1(k) / k);
        },
        opt);
    r.norm_residual = std::abs(norm_res.value - 1.0);
    r.mean_E = e.value;
    r.mean_v2 = v2.value;
    r.mean_inv_speed = inv.value;
    r.sigma_x2 = sx.value;
    r.sigma_v2 = v2.value;
    r.sigma_x2_axis = {sx.value / 3.0, sx.value / 3.0, sx.value / 3.0};
    r.sigma_v2_axis = {v2.value / 3.0, v2.value / 3.0, v2.value / 3.0};
    r.sigma_x2_L = sx.value / 3.0;
    r.sigma_x2_T = 2.0 * sx.value / 3.0;
    r.sigma_v2_L = v2.value / 3.0;
    r.sigma_v2_T = 2.0 * v2.value / 3.0;
    r.err = {norm_res.error_estimate, e.error_estimate, 0.0, 0.0, v2.error_estimate, inv.error_estimate,
             sx.error_estimate};
    return r;
  }

  auto ex = [&](auto&& f) { return quad::expectation(model, f, opt); };
  const Vec3& n = kin.axis;
  const auto norm_res = ex([](const Vec3&) { return 1.0; });
  const auto e = ex([m](const Vec3& k) { return on_shell_energy(m, k); });
  const auto v2 = ex([m](const Vec3& k) { return norm2(k) / (norm2(k) + m * m); });
  const auto inv = ex([m](const Vec3& k) { return on_shell_energy(m, k) / norm(k); });
  const auto vl2 = ex([m, &n](const Vec3& k) {
    const double vl = dot(k, n) / on_shell_energy(m, k);
    return vl * vl;
  });
  r.norm_residual = std::abs(norm_res.value - 1.0);
  r.mean_E = e.value;
  r.mean_v2 = v2.value;
  r.mean_inv_speed = inv.value;
  r.err.norm = norm_res.error_estimate;
  r.err.mean_E = e.error_estimate;
  r.err.mean_v2 = v2.error_estimate;
  r.err.mean_inv_speed = inv.error_estimate;

  for (int i = 0; i < 3; ++i) {
    const auto pi = ex([i](const Vec3& k) { return k[i]; });
    const auto vi = ex([m, i](const Vec3& k) { return k[i] / on_shell_energy(m, k); });
    const auto vi2 = ex([m, i](const Vec3& k) {
      const double v = k[i] / on_shell_energy(m, k);
      return v * v;
    });
    // sigma_x^2 along axis i: int [(d_i phi)^2 - phi d_i phi k_i / E^2] / ((2 pi)^3 2E)
    const auto sxi = quad::measure_integral(
        model,
        [&model, m, i](const Vec3& k) {
          const double a = model.amplitude(k);
          const double g = model.gradient(k)[i];
          return g * g - a * g * k[i] / (norm2(k) + m * m);
        },
        opt);
    r.mean_P[i] = pi.value;
    r.mean_v[i] = vi.value;
    r.sigma_v2_axis[i] = vi2.value - vi.value * vi.value;
    r.sigma_x2_axis[i] = sxi.value;
    r.err.mean_P = std::max(r.err.mean_P, pi.error_estimate);
    r.err.mean_v = std::max(r.err.mean_v, vi.error_estimate);
    r.err.sigma_x2 += sxi.error_estimate;
  }
  const auto sxl = quad::measure_integral(
      model,
      [&model, m, &n](const Vec3& k) {
        const double a = model.amplitude(k);
        const double g = dot(model.gradient(k), n);
        return g * g - a * g * dot(k, n) / (norm2(k) + m * m);
      },
      opt);
  r.sigma_x2 = r.sigma_x2_axis.x + r.sigma_x2_axis.y + r.sigma_x2_axis.z;
  r.sigma_v2 = r.mean_v2 - norm2(r.mean_v);
  const double vl = dot(r.mean_v, n);
  r.sigma_x2_L = sxl.value;
  r.sigma_x2_T = r.sigma_x2 - sxl.value;
  r.sigma_v2_L = vl2.value - vl * vl;
  r.sigma_v2_T = r.sigma_v2 - r.sigma_v2_L;
  return r;
}

Vec3 trajectory(const MomentsReport& m, double t) { return t * m.mean_v; }

Vec3 trajectory(const PacketModel& model, double t) { return trajectory(moments(model), t); }

Vec3 spatial_widths(const MomentsReport& m, double t) {
  Vec3 w;
  for (int i = 0; i < 3; ++i) w[i] = std::sqrt(m.sigma_x2_axis[i] + m.sigma_v2_axis[i] * t * t);
  return w;
}

double gaussian_sigma_xL2(const PacketModel& model, double t) {
  const Kinematics& kin = model.kin();
  switch (model.kind()) {
  case ModelKind::GaussianNoncov:
    return kin.sigma_x2 * (1.0 + t * t / (kin.tau_L * kin.tau_L));
  case ModelKind::GaussianCovExact:
  case ModelKind::GaussianCovFactorized:
    return kin.sigma_x2 / (kin.gamma * kin.gamma) * (1.0 + t * t / (kin.tau_p * kin.tau_p));
  case ModelKind::TabulatedIsotropic:
    break;
  }
  fail(ErrorCode::MethodUnavailable, "longitudinal/transverse closed forms exist only for Gaussian envelopes");
}

double gaussian_sigma_xT2(const PacketModel& model, double t) {
  const Kinematics& kin = model.kin();
  switch (model.kind()) {
  case ModelKind::GaussianNoncov:
    return kin.sigma_x2 * (1.0 + t * t / (kin.tau_T * kin.tau_T));
  case ModelKind::GaussianCovExact:
  case ModelKind::GaussianCovFactorized:
    return kin.sigma_x2 * (1.0 + t * t / (kin.tau_p * kin.tau_p));
  case ModelKind::TabulatedIsotropic:
    break;
  }
  fail(ErrorCode::MethodUnavailable, "longitudinal/transverse closed forms exist only for Gaussian envelopes");
}

DispersionCurve dispersion_curve(const PacketModel& model, const std::vector<double>& times, bool measure,
                                 const GridOptions& grid) {
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      fail(ErrorCode::InvalidArgument, "dispersion times must be finite and >= 0");
    }
  }
  const MomentsReport mr = moments(model);
  DispersionCurve c;
  c.times = times;
  for (double t : times) {
    c.sigma_x2.push_back(mr.sigma_x2 + mr.sigma_v2 * t * t);
    if (is_gaussian(model.kind())) {
      c.sigma_xL2.push_back(gaussian_sigma_xL2(model, t));
      c.sigma_xT2.push_back(gaussian_sigma_xT2(model, t));
    }
    if (measure) {
      const GridMoments g = measure_grid_moments(model, t, grid, &mr);
      c.measured.push_back(g.var_x);
      c.measured_err.push_back(g.var_err);
    }
  }
  return c;
}

void write_dispersion_csv(std::ostream& out, const DispersionCurve& curve) {
  auto field = [](const std::vector<double>& v, std::size_t i) {
    if (i >= v.size()) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    return std::string(buf);
  };
  out << "t,sigma_x2,measured,measured_err,sigma_xL2,sigma_xT2\n";
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    out << field(curve.times, i) << ',' << field(curve.sigma_x2, i) << ',' << field(curve.measured, i) << ','
        << field(curve.measured_err, i) << ',' << field(curve.sigma_xL2, i) << ',' << field(curve.sigma_xT2, i)
        << '\n';
  }
}

} // namespace wavekit

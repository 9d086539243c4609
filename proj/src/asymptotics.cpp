#include "wavekit/asymptotics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "wavekit/error.hpp"
#include "wavekit/parallel.hpp"
#include "wavekit/quadrature.hpp"
#include "wavekit/units.hpp"

namespace wavekit {

namespace {

constexpr double kPi = std::numbers::pi;

void require_rest(const PacketModel& model) {
  if (!model.at_rest()) {
    fail(ErrorCode::NotRestFrame, "time-integrated asymptotics are defined in the packet rest frame (p = 0)");
  }
}

void require_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    fail(ErrorCode::InvalidArgument, "radius must be finite and > 0");
  }
}

quad::QuadOptions time_quad_options(const TimeIntegralOptions& opt) {
  quad::QuadOptions q;
  q.rel_tol = opt.rel_tol;
  q.abs_tol = 1e-300;
  return q;
}

// Power-law extrapolation of the integrand beyond T from two samples.
double tail_beyond(const std::function<double(double)>& f, double T) {
  const double f2 = f(T);
  if (f2 == 0.0) return 0.0;
  const double f1 = f(0.8 * T);
  if (f1 == 0.0 || (f1 > 0.0) != (f2 > 0.0) || std::abs(f1) <= std::abs(f2)) {
    return std::numeric_limits<double>::infinity();
  }
  const double n = std::log(f1 / f2) / std::log(1.25);
  if (n <= 1.05) return std::numeric_limits<double>::infinity();
  return f2 * T / (n - 1.0);
}

TimeIntegral integrate_in_time(const std::function<double(double)>& f, double auto_t_max,
                               const TimeIntegralOptions& opt) {
  double T = opt.t_max.value_or(auto_t_max);
  if (!(T > 0.0) || !std::isfinite(T)) {
    fail(ErrorCode::InvalidArgument, "T_max must be finite and > 0");
  }
  const quad::QuadOptions qopt = time_quad_options(opt);
  auto first = quad::integrate_adaptive(f, 0.0, T, qopt, 16);
  double total = first.value;
  double err = first.error_estimate;
  const int doublings = opt.t_max ? 0 : opt.max_doublings;
  for (int d = 0;; ++d) {
    const double tail = tail_beyond(f, T);
    if (std::abs(tail) <= opt.tail_fraction * std::abs(total)) {
      return {total + tail, err + 0.5 * std::abs(tail), T, tail};
    }
    if (d >= doublings) {
      fail(ErrorCode::TailNotConverged, "time integral tail beyond T_max = " + std::to_string(T) +
                                            " exceeds " + std::to_string(opt.tail_fraction) +
                                            " of the accumulated value");
    }
    auto more = quad::integrate_adaptive(f, T, 2.0 * T, qopt, 16);
    total += more.value;
    err += more.error_estimate;
    T *= 2.0;
  }
}

double auto_t_max(const PacketModel& model, double r) {
  const MomentsReport m = moments(model);
  return 20.0 * r / std::sqrt(m.mean_v2);
}

// sin(u r) / u, with its Taylor series near u = 0.
double sinc_kernel(double u, double r) {
  const double z = u * r;
  if (std::abs(z) < 1e-4) {
    const double z2 = z * z;
    return r * (1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0))));
  }
  return std::sin(z) / u;
}

} // namespace

std::string_view method_name(AsymptoteMethod method) {
  switch (method) {
  case AsymptoteMethod::TimeDomain: return "time-domain";
  case AsymptoteMethod::Spectral: return "spectral";
  case AsymptoteMethod::Analytic: return "analytic";
  }
  return "unknown";
}

AsymptoteMethod parse_method(std::string_view name) {
  for (auto m : {AsymptoteMethod::TimeDomain, AsymptoteMethod::Spectral, AsymptoteMethod::Analytic}) {
    if (name == method_name(m)) return m;
  }
  fail(ErrorCode::ParseError, "unknown method '" + std::string(name) + "'");
}

FluxIntegral time_integrated_flux(const PacketModel& model, const Vec3& x, const TimeIntegralOptions& opt) {
  require_rest(model);
  const double r = norm(x);
  require_radius(r);
  const Vec3 dir = x / r;
  auto f = [&](double t) { return dot(flux4(model, {t, x, Frame::Lab}, PsiMethod::Quadrature, opt.field).j, dir); };
  const TimeIntegral ti = integrate_in_time(f, auto_t_max(model, r), opt);
  return {ti.value * dir, ti.error_estimate, ti.t_max, ti.tail};
}

Vec3 time_integrated_flux_gaussian(const PacketModel& model, const Vec3& x) {
  if (model.kind() != ModelKind::GaussianNoncov) {
    fail(ErrorCode::MethodUnavailable, "closed-form time-integrated flux exists for the non-covariant Gaussian only");
  }
  require_rest(model);
  const double r = norm(x);
  require_radius(r);
  const double a = r * r / (2.0 * model.kin().sigma_x2);
  const double sa = std::sqrt(a);
  const double lower_gamma = 0.5 * std::sqrt(kPi) * std::erf(sa) - sa * std::exp(-a);
  const double s = model.closed_form_scale();
  return (s * s * lower_gamma / (2.0 * std::pow(kPi, 1.5) * r * r * r)) * x;
}

quad::QuadResult time_integrated_flux_spectral(const PacketModel& model, double r, const SpectralOptions& opt) {
  require_rest(model);
  require_radius(r);
  const double m = model.kin().m;
  const double lo = model.support_lo();
  const double hi = model.support_hi();
  auto energy = [m](double k) { return std::sqrt(k * k + m * m); };
  // k phi(k) (1/E_k + 1/E_q) q phi(q): split as a(k) b(q) + b(k) a(q).
  auto kphi = [&](double k) { return k * model.profile(k); };

  const double a1 = quad::composite_gauss([&](double k) { return std::abs(kphi(k)); }, lo, hi, 16, 8);
  const double a2 = quad::composite_gauss([&](double k) { return std::abs(kphi(k)) / energy(k); }, lo, hi, 16, 8);
  const double scale = 2.0 * r * a1 * a2;

  quad::QuadOptions outer_opt;
  outer_opt.rel_tol = opt.rel_tol;
  outer_opt.abs_tol = 1e-3 * opt.rel_tol * scale;
  outer_opt.max_subdivisions = opt.max_subdivisions;
  quad::QuadOptions inner_opt = outer_opt;
  inner_opt.rel_tol = 0.1 * opt.rel_tol;
  inner_opt.abs_tol = 1e-4 * opt.rel_tol * scale / (hi - lo);

  const int segments = std::clamp(static_cast<int>(hi * r / 3.0) + 2, 2, 2000);
  auto outer = [&](double k) {
    const double fk = kphi(k);
    if (fk == 0.0) return 0.0;
    const double ek = energy(k);
    auto inner = [&](double q) {
      const double fq = kphi(q);
      const double kernel = sinc_kernel(k + q, r) - sinc_kernel(k - q, r);
      return fq * (1.0 / ek + 1.0 / energy(q)) * kernel;
    };
    const int seg_lo = std::max(1, static_cast<int>(segments * (k - lo) / (hi - lo)));
    const int seg_hi = std::max(1, segments - seg_lo);
    const double left = quad::integrate_adaptive(inner, lo, k, inner_opt, seg_lo).value;
    const double right = quad::integrate_adaptive(inner, k, hi, inner_opt, seg_hi).value;
    return fk * (left + right);
  };
  const auto res = quad::integrate_adaptive(outer, lo, hi, outer_opt, segments);
  const double pre = -1.0 / (32.0 * std::pow(kPi, 4) * r * r);
  return {pre * res.value, std::abs(pre) * res.error_estimate, res.evaluations, res.converged};
}

TimeIntegral time_integrated_probability(const PacketModel& model, double r, AsymptoteMethod method,
                                         const TimeIntegralOptions& topt, const SpectralOptions& sopt) {
  require_rest(model);
  require_radius(r);
  if (method == AsymptoteMethod::Spectral) {
    // P = (1 / 2 r^2 (2 pi)^3) [int k phi^2 - int k phi^2 cos(2 k r)]
    const double lo = model.support_lo();
    const double hi = model.support_hi();
    auto g = [&](double k) {
      const double f = model.profile(k);
      return k * f * f;
    };
    quad::QuadOptions q;
    q.rel_tol = sopt.rel_tol;
    q.max_subdivisions = sopt.max_subdivisions;
    const double plain_scale = quad::composite_gauss(g, lo, hi, 16, 8);
    q.abs_tol = 1e-3 * sopt.rel_tol * plain_scale;
    const auto plain = quad::integrate_adaptive(g, lo, hi, q, 4);
    const auto osc = quad::integrate_oscillatory(g, 2.0 * r, lo, hi, quad::Weight::Cos, q);
    const double pre = 1.0 / (2.0 * r * r * 8.0 * kPi * kPi * kPi);
    return {pre * (plain.value - osc.value), pre * (plain.error_estimate + osc.error_estimate), 0.0, 0.0};
  }
  const PsiMethod psi_method = method == AsymptoteMethod::Analytic ? PsiMethod::ClosedForm : PsiMethod::Quadrature;
  const Vec3 x{0.0, 0.0, r};
  auto f = [&](double t) { return flux4(model, {t, x, Frame::Lab}, psi_method, topt.field).rho; };
  return integrate_in_time(f, auto_t_max(model, r), topt);
}

ParityCheck parity_check(const PacketModel& model, double r, int angular_order) {
  require_rest(model);
  require_radius(r);
  const double lo = model.support_lo();
  const double hi = model.support_hi();
  const int order = std::max(angular_order, static_cast<int>(hi * r) + 20);
  const quad::GaussRule& gl = quad::gauss_legendre(order);
  const int nphi = 2 * order;
  const Vec3 x = (r / 3.0) * Vec3{1.0, 2.0, 2.0};

  struct Sphere {
    double c0 = 0.0, s0 = 0.0;
    Vec3 cn{}, sn{};
  };
  auto sphere = [&](double k) {
    Sphere s;
    for (int i = 0; i < order; ++i) {
      const double ct = gl.nodes[i];
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (int j = 0; j < nphi; ++j) {
        const double ph = 2.0 * kPi * (j + 0.5) / nphi;
        const Vec3 n{st * std::cos(ph), st * std::sin(ph), ct};
        const double w = gl.weights[i] * 2.0 * kPi / nphi;
        const double a = k * dot(n, x);
        s.c0 += w * std::cos(a);
        s.s0 += w * std::sin(a);
        s.cn += (w * std::cos(a)) * n;
        s.sn += (w * std::sin(a)) * n;
      }
    }
    return s;
  };
  constexpr int samples = 6;
  std::vector<Sphere> sph(samples);
  std::vector<double> ks(samples);
  for (int i = 0; i < samples; ++i) {
    ks[i] = lo + (hi - lo) * (i + 0.5) / samples;
    sph[i] = sphere(ks[i]);
  }
  ParityCheck out;
  const double full = 16.0 * kPi * kPi;
  for (int i = 0; i < samples; ++i) {
    for (int j = 0; j < samples; ++j) {
      const Sphere& a = sph[i];
      const Sphere& b = sph[j];
      // int dn1 dn2 (k n1 + q n2) cos(k n1.x - q n2.x)
      const Vec3 odd_flux = ks[i] * (a.cn * b.c0 + a.sn * b.s0) + ks[j] * (a.c0 * b.cn + a.s0 * b.sn);
      // int dn1 dn2 sin(k n1.x - q n2.x)
      const double odd_prob = a.s0 * b.c0 - a.c0 * b.s0;
      out.flux_odd = std::max(out.flux_odd, norm(odd_flux) / (full * (ks[i] + ks[j])));
      out.prob_odd = std::max(out.prob_odd, std::abs(odd_prob) / full);
    }
  }
  return out;
}

std::vector<AsymptoteRow> asymptote_rows(const PacketModel& model, const std::vector<double>& radii,
                                         const std::vector<AsymptoteMethod>& methods, AsymptoteQuantity what,
                                         const TimeIntegralOptions& topt, const SpectralOptions& sopt) {
  require_rest(model);
  for (double r : radii) require_radius(r);
  const bool want_flux = what != AsymptoteQuantity::Probability;
  const bool want_prob = what != AsymptoteQuantity::Flux;
  const double inv_speed = moments(model).mean_inv_speed;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<AsymptoteRow> rows(radii.size() * methods.size());
  parallel_for(rows.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t idx = b; idx < e; ++idx) {
      const double r = radii[idx / methods.size()];
      const AsymptoteMethod method = methods[idx % methods.size()];
      const double area = 4.0 * kPi * r * r;
      AsymptoteRow row;
      row.r = r;
      row.method = method;
      row.flux_norm = nan;
      row.prob_norm = nan;
      if (want_flux) {
        double flux = 0.0;
        double flux_err = 0.0;
        if (method == AsymptoteMethod::Spectral) {
          const auto res = time_integrated_flux_spectral(model, r, sopt);
          flux = res.value;
          flux_err = res.error_estimate;
        } else if (method == AsymptoteMethod::TimeDomain) {
          const FluxIntegral res = time_integrated_flux(model, {0.0, 0.0, r}, topt);
          flux = res.value.z;
          flux_err = res.error_estimate;
          row.t_max = res.t_max;
        } else {
          flux = time_integrated_flux_gaussian(model, {0.0, 0.0, r}).z;
        }
        row.flux_norm = area * std::abs(flux);
        row.err += area * flux_err;
      }
      if (want_prob) {
        const TimeIntegral prob = time_integrated_probability(model, r, method, topt, sopt);
        row.t_max = std::max(row.t_max, prob.t_max);
        row.prob_norm = area * prob.value / inv_speed;
        row.err += area * prob.error_estimate / inv_speed;
      }
      rows[idx] = row;
    }
  });
  return rows;
}

void write_asymptote_csv(std::ostream& out, const std::vector<AsymptoteRow>& rows) {
  auto field = [](double v) {
    if (std::isnan(v)) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "r,flux_norm,prob_norm,method,err\n";
  for (const auto& row : rows) {
    out << field(row.r) << ',' << field(row.flux_norm) << ',' << field(row.prob_norm) << ','
        << method_name(row.method) << ',' << field(row.err) << '\n';
  }
}

ContinuityResult continuity_residual(const FluxFunction& flux, const SpacetimePoint& pt, const ContinuitySteps& h,
                                     double floor) {
  if (!(h.h_t > 0.0) || !(h.h_x > 0.0)) {
    fail(ErrorCode::InvalidArgument, "continuity steps must be > 0");
  }
  auto stencil = [](auto&& f, double step) {
    return (f(-2.0) - 8.0 * f(-1.0) + 8.0 * f(1.0) - f(2.0)) / (12.0 * step);
  };
  ContinuityResult out;
  out.drho_dt = stencil(
      [&](double s) {
        SpacetimePoint q = pt;
        q.t += s * h.h_t;
        return flux(q).rho;
      },
      h.h_t);
  for (int a = 0; a < 3; ++a) {
    out.div_j += stencil(
        [&](double s) {
          SpacetimePoint q = pt;
          q.x[a] += s * h.h_x;
          return flux(q).j[a];
        },
        h.h_x);
  }
  out.residual = std::abs(out.drho_dt + out.div_j) / (std::abs(out.drho_dt) + std::abs(out.div_j) + floor);
  return out;
}

ContinuitySteps default_continuity_steps(const MomentsReport& m, const Kinematics& kin, double t) {
  const Vec3 w = spatial_widths(m, t);
  const double width = std::min({w.x, w.y, w.z});
  const double speed = std::max(norm(m.mean_v), std::sqrt(m.mean_v2));
  ContinuitySteps h;
  h.h_x = 0.01 * width;
  h.h_t = 0.01 * std::min(width / speed, kin.tau);
  return h;
}

ContinuityResult continuity_residual(const PacketModel& model, const SpacetimePoint& pt, PsiMethod method,
                                     std::optional<ContinuitySteps> h, const FieldOptions& opt) {
  const SpacetimePoint lab = pt.frame == Frame::Lab ? pt : boost_to_lab(pt, model.kin());
  const MomentsReport m = moments(model);
  const ContinuitySteps steps = h.value_or(default_continuity_steps(m, model.kin(), lab.t));
  const double rho_peak = std::abs(flux4(model, {lab.t, trajectory(m, lab.t), Frame::Lab}, method, opt).rho);
  const double floor = 1e-12 * rho_peak / (100.0 * steps.h_t);
  return continuity_residual([&](const SpacetimePoint& q) { return flux4(model, q, method, opt); }, lab, steps,
                             floor);
}

SphereBalance sphere_flux_balance(const PacketModel& model, double r, AsymptoteMethod flux_method) {
  require_rest(model);
  require_radius(r);
  SphereBalance out;
  const FieldOptions fopt{1e-10};
  auto shell = [&](double s) {
    const double rho = flux4(model, {0.0, {0.0, 0.0, s}, Frame::Lab}, PsiMethod::Quadrature, fopt).rho;
    return 4.0 * kPi * s * s * rho;
  };
  quad::QuadOptions q;
  q.rel_tol = 1e-8;
  q.abs_tol = 1e-12;
  const auto inside = quad::integrate_adaptive(shell, 0.0, r, q, 8);
  out.inside = inside.value;
  out.inside_err = inside.error_estimate;
  const double area = 4.0 * kPi * r * r;
  switch (flux_method) {
  case AsymptoteMethod::Spectral: {
    const auto res = time_integrated_flux_spectral(model, r);
    out.through = area * std::abs(res.value);
    out.through_err = area * res.error_estimate;
    break;
  }
  case AsymptoteMethod::TimeDomain: {
    const FluxIntegral res = time_integrated_flux(model, {0.0, 0.0, r});
    out.through = area * norm(res.value);
    out.through_err = area * res.error_estimate;
    break;
  }
  case AsymptoteMethod::Analytic:
    out.through = area * norm(time_integrated_flux_gaussian(model, {0.0, 0.0, r}));
    break;
  }
  return out;
}

std::vector<DispersionTimeEntry> reference_table_entries() {
  constexpr double electron = 0.51099895e6;
  constexpr double neutrino = 0.1;
  const double gram = UnitSystem::eV_per_gram;
  return {
      {electron, electron, 1e-6}, {electron, 1e9, 1e-6}, {neutrino, neutrino, 1e-6},
      {neutrino, 1e9, 1e-6},      {gram, gram, 1e-6},
  };
}

std::vector<DispersionTimeRow> dispersion_times_table(const std::vector<DispersionTimeEntry>& entries) {
  std::vector<DispersionTimeRow> rows;
  for (const auto& e : entries) {
    if (!(e.energy_eV >= e.mass_eV)) {
      fail(ErrorCode::InvalidArgument, "total energy must be at least the mass");
    }
    if (!(e.sigma_x_rest_m > 0.0)) {
      fail(ErrorCode::NonPositiveWidth, "sigma_x must be > 0");
    }
    const double sigma_x = convert(e.sigma_x_rest_m, Unit::Meter, Unit::InverseEV);
    const double p = std::sqrt((e.energy_eV - e.mass_eV) * (e.energy_eV + e.mass_eV));
    const Kinematics kin = kinematics_from(e.mass_eV, {0.0, 0.0, p}, 1.0 / (2.0 * sigma_x));
    auto seconds = [](double t) { return convert(t, Unit::InverseEV, Unit::Second); };
    rows.push_back({e.mass_eV, kin.gamma, false, seconds(kin.tau_L), seconds(kin.tau_T), seconds(kin.tau_p)});
    rows.push_back({e.mass_eV, kin.gamma, true, seconds(kin.tau_p), seconds(kin.tau_p), seconds(kin.tau_p)});
  }
  return rows;
}

void write_dispersion_table_csv(std::ostream& out, const std::vector<DispersionTimeRow>& rows) {
  char line[256];
  out << "mass_eV,gamma,model,tau_L_s,tau_T_s,tau_p_s\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%s,%.17g,%.17g,%.17g\n", r.mass_eV, r.gamma,
                  r.covariant ? "covariant" : "non-covariant", r.tau_L_s, r.tau_T_s, r.tau_p_s);
    out << line;
  }
}

} // namespace wavekit

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "json.hpp"
#include "wavekit/asymptotics.hpp"
#include "wavekit/field_grid.hpp"
#include "wavekit/observables.hpp"

using namespace wavekit;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Kinematics rest_kin() { return kinematics_from(1.0, {}, 0.01); }

PacketModel top_hat(const Kinematics& kin) {
  return PacketModel::tabulated(smooth_top_hat_samples(0.02, 0.004, 400), kin);
}

// Grid-measured variance against sigma_x^2 + sigma_v^2 t^2.
Verdict dispersion_law() {
  const Kinematics kin = rest_kin();
  const std::vector<double> times{0.0, 0.5 * kin.tau, kin.tau, 2.0 * kin.tau, 5.0 * kin.tau};
  const std::vector<std::pair<std::string, PacketModel>> models{
      {"noncov", PacketModel::gaussian(ModelKind::GaussianNoncov, kin)},
      {"cov-factorized", PacketModel::gaussian(ModelKind::GaussianCovFactorized, kin)},
      {"top-hat", top_hat(kin)},
  };
  Verdict v{true, ""};
  for (const auto& [name, model] : models) {
    const auto start = std::chrono::steady_clock::now();
    const DispersionCurve c = dispersion_curve(model, times, true);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      worst = std::max(worst, std::abs(c.measured[i] - c.sigma_x2[i]) / c.sigma_x2[i]);
    }
    v.pass = v.pass && worst <= 0.01 && secs < 120.0;
    v.detail += name + " max rel dev " + fmt("%.2e", worst) + " (" + fmt("%.1f", secs) + " s); ";
  }
  return v;
}

// Closed forms vs quadrature at 20 random points per model, t <= 2 tau.
Verdict closed_form_fidelity() {
  const Kinematics kin = rest_kin();
  Verdict v{true, ""};
  for (auto kind : {ModelKind::GaussianNoncov, ModelKind::GaussianCovExact}) {
    const PacketModel g = PacketModel::gaussian(kind, kin);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double t = 2.0 * kin.tau * u(rng);
      const double width = std::sqrt(kin.sigma_x2 * (1.0 + t * t / (kin.tau * kin.tau)));
      Vec3 dir{n(rng), n(rng), n(rng)};
      dir = dir / norm(dir);
      const SpacetimePoint pt{t, (2.0 * width * std::cbrt(u(rng))) * dir, Frame::Lab};
      const cplx a = psi(g, pt, PsiMethod::ClosedForm);
      const cplx b = psi(g, pt, PsiMethod::Quadrature);
      worst = std::max(worst, std::abs(a - b) / std::abs(b));
    }
    v.pass = v.pass && worst <= 1e-3;
    v.detail += std::string(kind_name(kind)) + " max rel dev " + fmt("%.2e", worst) + "; ";
  }
  return v;
}

double axis_width(const PacketModel& m) { return std::sqrt(moments(m).sigma_x2 / 3.0); }

// 4 pi r^2 |Phi| at r = 10 sigma_x by both methods.
Verdict flux_asymptote() {
  const Kinematics kin = rest_kin();
  Verdict v{true, ""};
  const std::vector<std::pair<std::string, PacketModel>> models{
      {"noncov", PacketModel::gaussian(ModelKind::GaussianNoncov, kin)},
      {"top-hat", top_hat(kin)},
  };
  for (const auto& [name, model] : models) {
    const double r = 10.0 * axis_width(model);
    const auto rows =
        asymptote_rows(model, {r}, {AsymptoteMethod::TimeDomain, AsymptoteMethod::Spectral}, AsymptoteQuantity::Flux);
    const AsymptoteRow& td = rows[0];
    const AsymptoteRow& sp = rows[1];
    const bool in_band = std::abs(td.flux_norm - 1.0) <= 0.02 && std::abs(sp.flux_norm - 1.0) <= 0.02;
    const double diff = std::abs(td.flux_norm - sp.flux_norm);
    const bool agree = diff <= td.err + sp.err;
    v.pass = v.pass && in_band && agree;
    v.detail += name + " r=" + fmt("%.0f", r) + " time-domain " + fmt("%.7f", td.flux_norm) + " spectral " +
                fmt("%.7f", sp.flux_norm) + " |diff| " + fmt("%.1e", diff) + " <= err " +
                fmt("%.1e", td.err + sp.err) + (agree ? "" : " (NOT within errors)") + "; ";
  }
  return v;
}

// 4 pi r^2 P / <1/|v|> at r = 10 sigma_x and the Maxwell oracle for <1/|v|>.
Verdict probability_asymptote() {
  const Kinematics kin = rest_kin();
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianNoncov, kin);
  const double oracle = (kin.m / kin.sigma_p) * std::sqrt(2.0 / kPi);
  const double inv_speed = moments(g).mean_inv_speed;
  const double oracle_dev = std::abs(inv_speed - oracle) / oracle;
  const auto rows = asymptote_rows(g, {500.0}, {AsymptoteMethod::Spectral, AsymptoteMethod::TimeDomain},
                                   AsymptoteQuantity::Probability);
  bool pass = oracle_dev <= 5e-3;
  std::string detail = "<1/|v|> " + fmt("%.4f", inv_speed) + " vs " + fmt("%.4f", oracle) + " (" +
                       fmt("%.1e", oracle_dev) + "); ";
  for (const auto& row : rows) {
    pass = pass && std::abs(row.prob_norm - 1.0) <= 0.05;
    detail += std::string(method_name(row.method)) + " " + fmt("%.5f", row.prob_norm) + "; ";
  }
  return {pass, detail};
}

// Ratio of the covariant to the non-covariant longitudinal growth factor at
// 100 tau_L, gamma = 10.
Verdict longitudinal_spreading() {
  const double gamma = 10.0;
  const Kinematics kin = kinematics_from(1.0, {0.0, 0.0, std::sqrt(gamma * gamma - 1.0)}, 0.01);
  const PacketModel noncov = PacketModel::gaussian(ModelKind::GaussianNoncov, kin);
  const PacketModel cov = PacketModel::gaussian(ModelKind::GaussianCovFactorized, kin);
  const double t = 100.0 * kin.tau_L;
  auto growth = [t](const PacketModel& m) { return std::sqrt(gaussian_sigma_xL2(m, t) / gaussian_sigma_xL2(m, 0.0)); };
  const double ratio = growth(cov) / growth(noncov);
  return {std::abs(ratio / (gamma * gamma) - 1.0) <= 0.05,
          "sigma_xL(t)/sigma_xL(0): covariant/non-covariant = " + fmt("%.3f", ratio) + " vs gamma^2 = 100"};
}

// Reference table against published order-of-magnitude estimates.
Verdict reference_table() {
  const auto rows = dispersion_times_table(reference_table_entries());
  const double year = 3.15576e7;
  // tau_L, tau_T (non-covariant) and tau_p (covariant) per entry, seconds.
  const double published[5][3] = {
      {5e-8, 5e-8, 5e-8}, {4e2, 1e-4, 1e-4}, {1e-14, 1e-14, 1e-14}, {1e16, 1e-4, 1e-4},
      {3e11 * year, 3e11 * year, 3e11 * year},
  };
  const double published_gamma[5] = {1.0, 2e3, 1.0, 1e10, 1.0};
  bool pass = rows.size() == 10;
  double worst_factor = 1.0;
  double worst_ratio = 0.0;
  for (int e = 0; e < 5 && pass; ++e) {
    const DispersionTimeRow& nc = rows[2 * e];
    const DispersionTimeRow& cv = rows[2 * e + 1];
    const double got[3] = {nc.tau_L_s, nc.tau_T_s, cv.tau_p_s};
    for (int c = 0; c < 3; ++c) {
      worst_factor = std::max({worst_factor, got[c] / published[e][c], published[e][c] / got[c]});
    }
    worst_factor = std::max({worst_factor, nc.gamma / published_gamma[e], published_gamma[e] / nc.gamma});
    worst_ratio = std::max(worst_ratio, std::abs(nc.tau_L_s / nc.tau_T_s / (nc.gamma * nc.gamma) - 1.0));
  }
  pass = pass && worst_factor <= 5.0 && worst_ratio <= 1e-12;
  return {pass, "largest factor to the published estimates " + fmt("%.2f", worst_factor) + "; max |tau_L/tau_T/gamma^2 - 1| " +
                    fmt("%.1e", worst_ratio)};
}

// Continuity residuals at 50 random points (seed 1) through the command line.
Verdict continuity() {
  Verdict v{true, ""};
  struct Case {
    const char* model;
    const char* psi;
    double limit;
  };
  for (const Case& c : {Case{"gaussian-noncov", "quadrature", 1e-6}, Case{"gaussian-noncov", "closed-form", 1e-3},
                        Case{"gaussian-cov-exact", "quadrature", 1e-6},
                        Case{"gaussian-cov-exact", "closed-form", 1e-3}}) {
    const char* argv[] = {"wavekit", "continuity", "--model", c.model, "--psi", c.psi, "--samples", "50", "--seed", "1"};
    std::ostringstream out, err;
    const int code = cli::run(10, argv, out, err);
    if (code != 0) return {false, err.str()};
    const auto doc = nlohmann::json::parse(out.str());
    const double worst = doc["results"]["max"].get<double>();
    v.pass = v.pass && worst <= c.limit;
    v.detail += std::string(c.model) + "/" + c.psi + " max " + fmt("%.1e", worst) + "; ";
  }
  return v;
}

Verdict conservation() {
  const Kinematics rest = rest_kin();
  const Kinematics lab = kinematics_from(1.0, {0.0, 0.0, 0.5}, 0.01);
  double worst_norm = 0.0;
  double worst_flux = 0.0;
  bool energy_ok = true;
  for (const Kinematics& kin : {rest, lab}) {
    for (auto kind : {ModelKind::GaussianNoncov, ModelKind::GaussianCovExact, ModelKind::GaussianCovFactorized}) {
      const PacketModel g = PacketModel::gaussian(kind, kin);
      const MomentsReport m = moments(g);
      energy_ok = energy_ok && m.mean_E >= kin.m;
      GridOptions opt;
      opt.n = 48;
      for (double t : {0.0, kin.tau_p, 3.0 * kin.tau_p}) {
        const GridMoments gm = measure_grid_moments(g, t, opt, &m);
        worst_norm = std::max(worst_norm, std::abs(gm.norm - 1.0));
        worst_flux = std::max(worst_flux, norm(gm.flux_integral - m.mean_v));
      }
    }
  }
  const MomentsReport mr = moments(PacketModel::gaussian(ModelKind::GaussianNoncov, rest));
  const double split = std::abs(mr.sigma_v2_L - mr.mean_v2 / 3.0);
  const bool pass = worst_norm <= 1e-3 && worst_flux <= 1e-3 && energy_ok && split <= 1e-6;
  return {pass, "max |norm - 1| " + fmt("%.1e", worst_norm) + "; max |int j - <v>| " + fmt("%.1e", worst_flux) +
                    "; <E> >= m " + (energy_ok ? "yes" : "NO") + "; |<v_L^2> - <v^2>/3| " + fmt("%.1e", split)};
}

Verdict sphere_balance() {
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianNoncov, rest_kin());
  const SphereBalance b = sphere_flux_balance(g, 500.0);
  const bool pass = std::abs(b.inside - 1.0) <= 0.02 && std::abs(b.through - 1.0) <= 0.02;
  return {pass, "P(0, r) " + fmt("%.8f", b.inside) + ", 4 pi r^2 |Phi| " + fmt("%.8f", b.through)};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"dispersion law", dispersion_law},
      {"closed-form fidelity", closed_form_fidelity},
      {"flux asymptote", flux_asymptote},
      {"probability asymptote", probability_asymptote},
      {"longitudinal spreading", longitudinal_spreading},
      {"dispersion-time table", reference_table},
      {"continuity residual", continuity},
      {"conservation", conservation},
      {"sphere balance", sphere_balance},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("[%s] %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

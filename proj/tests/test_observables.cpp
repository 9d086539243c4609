#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "wavekit/observables.hpp"
#include "wavekit/quadrature.hpp"

using namespace wavekit;

namespace {

constexpr double kPi = std::numbers::pi;

// Brute-force psi, d_t psi and grad psi: a fixed tensor-product Gauss rule
// over a Cartesian box of +-half around the envelope peak.
FieldValue brute_force_field(const PacketModel& model, double t, const Vec3& x, double half, int panels) {
  const auto& rule = quad::gauss_legendre(16);
  const Kinematics& kin = model.kin();
  std::vector<double> nodes, weights;
  const double width = 2.0 * half / panels;
  for (int p = 0; p < panels; ++p) {
    const double c = -half + (p + 0.5) * width;
    for (int i = 0; i < 16; ++i) {
      nodes.push_back(c + 0.5 * width * rule.nodes[i]);
      weights.push_back(0.5 * width * rule.weights[i]);
    }
  }
  // Longitudinal axis of the lab envelope may be stretched (factorized /
  // exact covariant): cover gamma times more along the motion.
  const double stretch = model.longitudinal_stretch();
  cplx psi = 0.0, dt = 0.0;
  std::array<cplx, 3> grad{};
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      for (std::size_t c = 0; c < nodes.size(); ++c) {
        const Vec3 q{nodes[a], nodes[b], stretch * nodes[c]};
        const Vec3 k = kin.p + q;
        const double e = on_shell_energy(kin.m, k);
        const double w = weights[a] * weights[b] * weights[c] * stretch;
        const cplx term = w * model.amplitude(k) / (2.0 * e) * std::polar(1.0, dot(k, x) - e * t);
        psi += term;
        dt += cplx{0.0, -e} * term;
        for (int i = 0; i < 3; ++i) grad[i] += cplx{0.0, k[i]} * term;
      }
    }
  }
  const double pre = 1.0 / (8.0 * kPi * kPi * kPi);
  return {pre * psi, pre * dt, {pre * grad[0], pre * grad[1], pre * grad[2]}};
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST_CASE("closed-form psi at the origin") {
  const Kinematics kin = kinematics_from(1.0, {}, 0.01);
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianNoncov, kin);
  const double sx = 50.0;
  const double expected = 1.0 / (std::pow(2 * kPi, 0.75) * std::sqrt(2.0) * std::pow(sx, 1.5));
  const cplx cf = psi(g, {0.0, {}, Frame::Lab}, PsiMethod::ClosedForm);
  CHECK(cf.real() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(cf.imag()) < 1e-20);
  CHECK(expected == doctest::Approx(5.040e-4).epsilon(1e-3));
  const cplx q = psi(g, {0.0, {}, Frame::Lab}, PsiMethod::Quadrature);
  CHECK(rel(q, cf) < 1e-3);
}

TEST_CASE("Gaussian tail of psi") {
  const Kinematics kin = kinematics_from(1.0, {}, 0.01);
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianNoncov, kin);
  const cplx peak = psi(g, {0.0, {}, Frame::Lab}, PsiMethod::ClosedForm);
  const cplx far = psi(g, {0.0, {0, 0, 500.0}, Frame::Lab}, PsiMethod::ClosedForm);
  CHECK(std::abs(far) / std::abs(peak) == doctest::Approx(std::exp(-25.0)).epsilon(1e-10));
  const cplx mid = psi(g, {0.0, {0, 200.0, 0}, Frame::Lab}, PsiMethod::Quadrature);
  CHECK(std::abs(mid) / std::abs(peak) == doctest::Approx(std::exp(-4.0)).epsilon(1e-3));
}

TEST_CASE("closed forms agree with quadrature in the rest frame") {
  const Kinematics kin = kinematics_from(1.0, {}, 0.01);
  for (auto kind : {ModelKind::GaussianNoncov, ModelKind::GaussianCovExact}) {
    const PacketModel g = PacketModel::gaussian(kind, kin);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double t = (u(rng) + 1.0) * kin.tau;
      const double w = std::sqrt(kin.sigma_x2 * (1 + t * t / (kin.tau * kin.tau)));
      const SpacetimePoint pt{t, {1.5 * w * u(rng), 1.5 * w * u(rng), 1.5 * w * u(rng)}, Frame::Lab};
      worst = std::max(worst, rel(psi(g, pt, PsiMethod::ClosedForm), psi(g, pt, PsiMethod::Quadrature)));
    }
    CHECK(worst <= 1e-3);
  }
}

TEST_CASE("flux density of the rest-frame Gaussian") {
  const Kinematics kin = kinematics_from(1.0, {}, 0.01);
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianNoncov, kin);
  for (auto method : {PsiMethod::ClosedForm, PsiMethod::Quadrature}) {
    const FluxDensity4 f = flux4(g, {3000.0, {}, Frame::Lab}, method);
    CHECK(norm(f.j) <= 1e-12 * f.rho);
    CHECK(f.rho > 0.0);
  }
  // j = x (t / tau) exp(-x^2 / 2 s^2 (1 + t^2/tau^2)) / ((2 pi)^{3/2} 2 m s^5 (1 + t^2/tau^2)^{5/2})
  const double s = 50.0, tau = 5000.0, m = 1.0;
  for (double t : {2500.0, 5000.0, 12000.0}) {
    const Vec3 x{10.0, 20.0, -30.0};
    const double z = 1 + t * t / (tau * tau);
    const double mag = (t / tau) * std::exp(-norm2(x) / (2 * s * s * z)) /
                       (std::pow(2 * kPi, 1.5) * 2 * m * std::pow(s, 5) * std::pow(z, 2.5));
    const FluxDensity4 f = flux4(g, {t, x, Frame::Lab}, PsiMethod::ClosedForm);
    for (int a = 0; a < 3; ++a) CHECK(f.j[a] == doctest::Approx(mag * x[a]).epsilon(1e-10));
  }
}

TEST_CASE("quadrature fields match a brute-force 3D sum") {
  const Kinematics lab = kinematics_from(1.0, {0.0, 0.0, 0.5}, 0.01);
  std::vector<PacketModel> models;
  for (auto kind : {ModelKind::GaussianNoncov, ModelKind::GaussianCovExact, ModelKind::GaussianCovFactorized}) {
    models.push_back(PacketModel::gaussian(kind, lab));
  }
  models.push_back(PacketModel::tabulated(smooth_top_hat_samples(0.02, 0.004, 400), lab));
  const Kinematics rest = kinematics_from(1.0, {}, 0.01);
  models.push_back(PacketModel::tabulated(smooth_top_hat_samples(0.02, 0.004, 400), rest));
  for (const auto& m : models) {
    const double t = 1500.0;
    const Vec3 x = t * lab.v * (m.at_rest() ? 0.0 : 1.0) + Vec3{20.0, -35.0, 40.0};
    const double half = m.kind() == ModelKind::TabulatedIsotropic ? 0.05 : 0.1;
    const FieldValue ref = brute_force_field(m, t, x, half, 10);
    const FieldValue got = field(m, {t, x, Frame::Lab}, PsiMethod::Quadrature);
    CAPTURE(kind_name(m.kind()));
    CHECK(rel(got.psi, ref.psi) < 1e-6);
    CHECK(rel(got.dt, ref.dt) < 1e-6);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(got.grad[i] - ref.grad[i]) < 1e-6 * std::abs(ref.dt));
  }
}

TEST_CASE("finite-difference derivatives agree with the spectral ones") {
  const Kinematics lab = kinematics_from(1.0, {0.0, 0.3, 0.0}, 0.01);
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianCovFactorized, lab);
  const SpacetimePoint pt{800.0, {10.0, 800.0 * 0.287 + 30.0, -25.0}, Frame::Lab};
  for (auto method : {PsiMethod::ClosedForm, PsiMethod::Quadrature}) {
    FieldOptions fd;
    fd.rel_tol = 1e-12;
    fd.derivatives = DerivativeMethod::FiniteDifference;
    FieldOptions sp;
    sp.rel_tol = 1e-12;
    const FieldValue a = field(g, pt, method, sp);
    const FieldValue b = field(g, pt, method, fd);
    CHECK(rel(b.dt, a.dt) < 1e-6);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(b.grad[i] - a.grad[i]) < 1e-6 * std::abs(a.dt));
  }
}

TEST_CASE("rest-frame points are boosted before evaluation") {
  const Kinematics lab = kinematics_from(1.0, {0.0, 0.0, 0.75}, 0.01);
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianCovExact, lab);
  const SpacetimePoint rest_pt{100.0, {5.0, 0.0, -12.0}, Frame::Rest};
  const SpacetimePoint lab_pt = boost_to_lab(rest_pt, lab);
  // psi is a Lorentz scalar.
  CHECK(rel(psi(g, rest_pt, PsiMethod::Quadrature), psi(g, lab_pt, PsiMethod::Quadrature)) < 1e-12);
}

TEST_CASE("moments of the rest-frame Gaussian") {
  const Kinematics kin = kinematics_from(1.0, {}, 0.01);
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianNoncov, kin);
  const MomentsReport m = moments(g);
  CHECK(m.sigma_x2 == doctest::Approx(3.0 / (4.0 * 1e-4)).epsilon(1e-3));
  CHECK(m.mean_inv_speed == doctest::Approx(std::sqrt(2.0 / kPi) / 0.01).epsilon(5e-3));
  CHECK(m.mean_E == doctest::Approx(1.0 + 1.5e-4).epsilon(1e-7));
  CHECK(m.mean_E >= 1.0);
  CHECK(norm(m.mean_v) == 0.0);
  CHECK(norm(m.mean_P) == 0.0);
  CHECK(m.norm_residual <= 1e-8);
  CHECK(m.sigma_v2 == doctest::Approx(m.mean_v2).epsilon(1e-15));
  CHECK(m.sigma_v2_L == doctest::Approx(m.sigma_v2 / 3.0).epsilon(1e-10));
  for (int a = 0; a < 3; ++a) CHECK(m.sigma_x2_axis[a] == doctest::Approx(m.sigma_x2 / 3.0).epsilon(1e-12));
}

TEST_CASE("moments of moving packets") {
  const Kinematics lab = kinematics_from(1.0, {0.0, 0.0, 0.75}, 0.01);
  for (auto kind : {ModelKind::GaussianNoncov, ModelKind::GaussianCovExact, ModelKind::GaussianCovFactorized}) {
    const MomentsReport m = moments(PacketModel::gaussian(kind, lab));
    CAPTURE(kind_name(kind));
    CHECK(m.mean_v.z == doctest::Approx(0.6).epsilon(1e-3));
    CHECK(std::abs(m.mean_v.x) < 1e-12);
    CHECK(m.mean_P.z == doctest::Approx(0.75).epsilon(1e-3));
    CHECK(m.mean_E >= 1.25);
    CHECK(m.sigma_x2 == doctest::Approx(m.sigma_x2_L + m.sigma_x2_T).epsilon(1e-12));
    CHECK(m.sigma_v2 == doctest::Approx(m.sigma_v2_L + m.sigma_v2_T).epsilon(1e-10));
    // The transverse velocity spread is sigma_p^2 / E_p^2 per axis; the
    // longitudinal one is smaller by the velocity Jacobian (1/gamma^3)^2 of
    // the non-covariant envelope, by 1/gamma^4 overall for covariant ones.
    CHECK(m.sigma_v2_T == doctest::Approx(2.0 * 1e-4 / (1.25 * 1.25)).epsilon(2e-3));
  }
}

TEST_CASE("trajectory follows the mean velocity") {
  MomentsReport m;
  m.mean_v = {0.0, 0.0, 0.6};
  CHECK(norm(trajectory(m, 10.0) - Vec3{0, 0, 6}) < 1e-15);
  CHECK(norm(trajectory(m, 0.0)) == 0.0);
}

TEST_CASE("dispersion curves") {
  const Kinematics rest = kinematics_from(1.0, {}, 0.01);
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianNoncov, rest);
  const MomentsReport m = moments(g);
  const DispersionCurve c = dispersion_curve(g, {0.0, 5000.0}, false);
  CHECK(c.sigma_x2[0] == m.sigma_x2);
  CHECK(c.sigma_x2[1] == doctest::Approx(m.sigma_x2 + m.sigma_v2 * 25e6).epsilon(1e-15));
  CHECK(c.measured.empty());

  const Kinematics lab = kinematics_from(1.0, {0.0, 0.0, std::sqrt(99.0)}, 0.01); // gamma = 10
  const PacketModel cov = PacketModel::gaussian(ModelKind::GaussianCovFactorized, lab);
  CHECK(gaussian_sigma_xL2(cov, lab.tau_p) == doctest::Approx(2.0 * gaussian_sigma_xL2(cov, 0.0)).epsilon(1e-14));
  const double late = 1e6 * lab.tau_p;
  CHECK(std::sqrt(gaussian_sigma_xL2(cov, late) / gaussian_sigma_xT2(cov, late)) ==
        doctest::Approx(1.0 / lab.gamma).epsilon(1e-10));

  std::ostringstream os;
  write_dispersion_csv(os, c);
  CHECK(os.str().rfind("t,sigma_x2,measured,measured_err,sigma_xL2,sigma_xT2\n0,", 0) == 0);
  CHECK_THROWS_AS(dispersion_curve(g, {-1.0}, false), Error);
}

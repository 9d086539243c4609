#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "wavekit/expectation.hpp"
#include "wavekit/quadrature.hpp"

using namespace wavekit;
using namespace wavekit::quad;

namespace {

constexpr double kPi = std::numbers::pi;

QuadOptions tight(double rel = 1e-13, double abs = 1e-15) {
  QuadOptions o;
  o.rel_tol = rel;
  o.abs_tol = abs;
  return o;
}

} // namespace

TEST_CASE("adaptive integration of polynomials and Gaussian moments") {
  const auto r = integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0, tight());
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const double s = 0.01;
  const auto g = integrate_adaptive([s](double k) { return std::exp(-k * k / (2 * s * s)) * k * k; }, 0.0,
                                    std::numeric_limits<double>::infinity(), tight(1e-12, 1e-22));
  CHECK(g.value == doctest::Approx(s * s * s * std::sqrt(kPi / 2)).epsilon(1e-10));
  CHECK(g.value == doctest::Approx(1.2533e-6).epsilon(1e-4));
}

TEST_CASE("adaptive integration reports failures") {
  auto nan_at_half = [](double x) { return x > 0.4 && x < 0.6 ? std::nan("") : x; };
  try {
    integrate_adaptive(nan_at_half, 0.0, 1.0);
    FAIL("expected NonFiniteIntegrand");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteIntegrand);
  }

  QuadOptions few = tight(1e-14, 0.0);
  few.max_subdivisions = 3;
  auto rough = [](double x) { return std::sqrt(std::abs(x - 0.3)); };
  try {
    integrate_adaptive(rough, 0.0, 1.0, few);
    FAIL("expected MaxSubdivisions");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MaxSubdivisions);
  }
  few.throw_on_failure = false;
  const auto r = integrate_adaptive(rough, 0.0, 1.0, few);
  CHECK_FALSE(r.converged);
  CHECK(r.error_estimate > 0.0);
  CHECK_THROWS_AS(integrate_adaptive(rough, 1.0, 0.0), Error);
}

TEST_CASE("complex bundles are integrated in one pass") {
  auto f = [](double x) {
    CArray<2> out;
    out[0] = std::polar(1.0, x);
    out[1] = cplx{x, -x * x};
    return out;
  };
  const auto r = integrate_adaptive<CArray<2>>(f, 0.0, kPi, tight());
  CHECK(std::abs(r.value[0] - cplx{0.0, 2.0}) < 1e-13);
  CHECK(std::abs(r.value[1] - cplx{kPi * kPi / 2, -kPi * kPi * kPi / 3}) < 1e-12);
}

TEST_CASE("Gauss-Legendre rules are exact to degree 2n - 1") {
  for (int n : {2, 5, 16, 40}) {
    const GaussRule& g = gauss_legendre(n);
    double wsum = 0.0;
    double moment = 0.0;
    for (int i = 0; i < n; ++i) {
      wsum += g.weights[i];
      moment += g.weights[i] * std::pow(g.nodes[i], 2 * n - 2);
    }
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(moment == doctest::Approx(2.0 / (2 * n - 1)).epsilon(1e-12));
  }
  CHECK(composite_gauss([](double x) { return std::exp(x); }, 0.0, 1.0, 4, 8) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("spherical Bessel functions match their closed forms") {
  auto j2 = [](double x) { return (3.0 / (x * x) - 1.0) * std::sin(x) / x - 3.0 * std::cos(x) / (x * x); };
  auto j3 = [](double x) {
    return (15.0 / (x * x * x) - 6.0 / x) * std::sin(x) / x - (15.0 / (x * x) - 1.0) * std::cos(x) / x;
  };
  for (double x : {1e-3, 0.3, 2.0, 7.5, 40.0, 333.0}) {
    std::array<double, 6> j{};
    spherical_bessel(5, x, j);
    CHECK(j[0] == doctest::Approx(std::sin(x) / x).epsilon(1e-12));
    CHECK(spherical_j0(x) == doctest::Approx(std::sin(x) / x).epsilon(1e-12));
    CHECK(spherical_j1(x) == doctest::Approx(std::sin(x) / (x * x) - std::cos(x) / x).epsilon(1e-10));
    if (x > 0.1) {
      CHECK(j[2] == doctest::Approx(j2(x)).epsilon(1e-9));
      CHECK(j[3] == doctest::Approx(j3(x)).epsilon(1e-8));
    }
  }
  // Small argument: j_l(x) ~ x^l / (2l + 1)!!
  std::array<double, 6> j{};
  spherical_bessel(5, 1e-4, j);
  CHECK(j[5] == doctest::Approx(std::pow(1e-4, 5) / 10395.0).epsilon(1e-6));
}

TEST_CASE("oscillatory integrals") {
  const auto unit = integrate_oscillatory_sin([](double) { return 1.0; }, 1.0, 0.0, kPi, tight());
  CHECK(unit.value == doctest::Approx(2.0).epsilon(1e-12));

  const auto zero = integrate_oscillatory_sin([](double k) { return std::exp(-k); }, 0.0, 0.0, 5.0);
  CHECK(zero.value == 0.0);

  // Filon path vs a brute-force fixed rule with ~40 nodes per period.
  auto g = [](double k) { return std::exp(-k * k / 2); };
  const double w = 50.0;
  const auto filon = integrate_oscillatory_sin(g, w, 0.0, 10.0, tight(1e-12, 1e-14));
  const double brute = composite_gauss([&](double k) { return g(k) * std::sin(w * k); }, 0.0, 10.0, 2000, 20);
  CHECK(filon.value == doctest::Approx(brute).epsilon(1e-8));
  // Dawson-function asymptotics: int_0^inf e^{-k^2/2} sin(wk) ~ 1/w + 1/w^3 + 3/w^5.
  CHECK(filon.value == doctest::Approx(1 / w + 1 / (w * w * w) + 3 / std::pow(w, 5)).epsilon(1e-6));

  // Cosine weight has a closed form: sqrt(pi/2) e^{-w^2/2}.
  const auto cosine = integrate_oscillatory(g, 3.0, 0.0, 12.0, Weight::Cos, tight(1e-12, 1e-15));
  CHECK(cosine.value == doctest::Approx(std::sqrt(kPi / 2) * std::exp(-4.5)).epsilon(1e-9));
}

TEST_CASE("expectation values of the rest-frame Gaussian") {
  const Kinematics kin = kinematics_from(1.0, {}, 0.01);
  const PacketModel g = PacketModel::gaussian(ModelKind::GaussianNoncov, kin);
  ExpectationOptions opt;
  const auto one = expectation(g, [](const Vec3&) { return 1.0; }, opt);
  CHECK(one.value == doctest::Approx(1.0).epsilon(1e-8));

  // Small-width expansions: <E> = m + 3 s^2 / 2m, <v^2> = 3 s^2 / m^2.
  const auto e = expectation_radial(g, [](double k) { return std::sqrt(k * k + 1.0); });
  CHECK(e.value == doctest::Approx(1.00015).epsilon(1e-7));
  const auto v2 = expectation_radial(g, [](double k) { return k * k / (k * k + 1.0); });
  CHECK(v2.value == doctest::Approx(3e-4).epsilon(1e-3));

  // The 3D product rule reproduces the radial reduction.
  opt.force_3d = true;
  const auto e3 = expectation_radial(g, [](double k) { return std::sqrt(k * k + 1.0); }, opt);
  CHECK(e3.value == doctest::Approx(e.value).epsilon(1e-12));
}

TEST_CASE("the measure is normalized for moving packets of every kind") {
  const Kinematics kin = kinematics_from(1.0, {0.3, 0.0, 0.4}, 0.01);
  for (auto kind : {ModelKind::GaussianNoncov, ModelKind::GaussianCovExact, ModelKind::GaussianCovFactorized}) {
    const PacketModel g = PacketModel::gaussian(kind, kin);
    const auto one = expectation(g, [](const Vec3&) { return 1.0; });
    CHECK(one.value == doctest::Approx(1.0).epsilon(1e-8));
    // Mean momentum of a symmetric envelope sits at p to O(sigma_p^2).
    const auto px = expectation(g, [](const Vec3& k) { return k.x; });
    CHECK(px.value == doctest::Approx(0.3).epsilon(1e-3));
  }
}

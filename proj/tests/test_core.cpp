#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "wavekit/error.hpp"
#include "wavekit/json_writer.hpp"
#include "wavekit/kinematics.hpp"
#include "wavekit/parallel.hpp"
#include "wavekit/spline.hpp"
#include "wavekit/units.hpp"

using namespace wavekit;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a wavekit::Error");
  return ErrorCode::InvalidArgument;
}

// Textbook boost along a unit direction n with speed v.
SpacetimePoint lorentz_reference(double t, const Vec3& x, const Vec3& n, double v) {
  const double g = 1.0 / std::sqrt(1.0 - v * v);
  const double xl = dot(x, n);
  SpacetimePoint out;
  out.t = g * (t - v * xl);
  out.x = x + ((g - 1.0) * xl - g * v * t) * n;
  return out;
}

} // namespace

TEST_CASE("kinematics at rest collapse to the simple formulas") {
  const Kinematics k = kinematics_from(1.0, {0, 0, 0}, 0.01);
  CHECK(k.gamma == 1.0);
  CHECK(norm(k.v) == 0.0);
  CHECK(k.E_p == 1.0);
  CHECK(k.sigma_x2 == doctest::Approx(2500.0).epsilon(1e-14));
  CHECK(k.tau == doctest::Approx(5000.0).epsilon(1e-14));
  CHECK(k.tau_L == k.tau);
  CHECK(k.tau_T == k.tau);
}

TEST_CASE("3-4-5 kinematics") {
  const Kinematics k = kinematics_from(1.0, {0, 0, 0.75}, 0.01);
  CHECK(k.E_p == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(k.v.z == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(k.v.x == 0.0);
  CHECK(k.gamma == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(norm(k.axis - Vec3{0, 0, 1}) < 1e-15);
}

TEST_CASE("electron at 1 GeV: gamma and the exact tau ratios") {
  const double m = 0.51099895e6;
  const double e = 1e9;
  const double p = std::sqrt((e - m) * (e + m));
  const Kinematics k = kinematics_from(m, {p, 0, 0}, 1.0);
  CHECK(k.gamma == doctest::Approx(e / m).epsilon(1e-12));
  CHECK(k.gamma == doctest::Approx(1957.0).epsilon(1e-3));
  CHECK(k.tau_L / k.tau_T == doctest::Approx(k.gamma * k.gamma).epsilon(1e-12));
  CHECK(k.tau_T == k.tau_p);
  CHECK(k.speed() < 1.0);
}

TEST_CASE("kinematics reject invalid input") {
  CHECK(code_of([] { kinematics_from(0.0, {}, 0.01); }) == ErrorCode::NonPositiveMass);
  CHECK(code_of([] { kinematics_from(-1.0, {}, 0.01); }) == ErrorCode::NonPositiveMass);
  CHECK(code_of([] { kinematics_from(1.0, {}, 0.0); }) == ErrorCode::NonPositiveWidth);
  CHECK(code_of([] { kinematics_from(1.0, {NAN, 0, 0}, 0.01); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { require_narrow(kinematics_from(1.0, {}, 0.3)); }) == ErrorCode::MethodUnavailable);
  require_narrow(kinematics_from(1.0, {}, 0.1));
}

TEST_CASE("boost of a point matches the textbook transformation") {
  const Kinematics k = kinematics_from(1.0, {0, 0, 0.75}, 0.01);
  const SpacetimePoint r = boost_to_rest({1.0, {0, 0, 0}, Frame::Lab}, k);
  CHECK(r.frame == Frame::Rest);
  CHECK(r.t == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(r.x.z == doctest::Approx(-0.75).epsilon(1e-14));
  CHECK(std::abs(r.x.x) < 1e-15);

  const Kinematics oblique = kinematics_from(2.0, {0.3, -0.4, 1.1}, 0.01);
  const Vec3 n = oblique.v / norm(oblique.v);
  const SpacetimePoint pt{3.0, {1.0, 2.0, -0.5}, Frame::Lab};
  const SpacetimePoint ref = lorentz_reference(pt.t, pt.x, n, norm(oblique.v));
  const SpacetimePoint got = boost_to_rest(pt, oblique);
  CHECK(got.t == doctest::Approx(ref.t).epsilon(1e-13));
  CHECK(norm(got.x - ref.x) < 1e-13);
}

TEST_CASE("boost at rest is the identity and round trips are exact") {
  const Kinematics rest = kinematics_from(1.0, {}, 0.01);
  const SpacetimePoint p{2.0, {1, 2, 3}, Frame::Lab};
  const SpacetimePoint q = boost_to_rest(p, rest);
  CHECK(q.t == p.t);
  CHECK(norm(q.x - p.x) == 0.0);

  const Kinematics k = kinematics_from(1.0, {0.2, 0.5, -0.9}, 0.01);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const SpacetimePoint a{u(rng), {u(rng), u(rng), u(rng)}, Frame::Lab};
    const SpacetimePoint b = boost_to_lab(boost_to_rest(a, k), k);
    worst = std::max({worst, std::abs(b.t - a.t), norm(b.x - a.x)});
  }
  CHECK(worst <= 1e-12);
  CHECK(code_of([&] { boost_to_lab({0, {}, Frame::Lab}, k); }) == ErrorCode::FrameMismatch);
}

TEST_CASE("momenta map to the rest frame on shell") {
  const Kinematics k = kinematics_from(1.0, {0, 0, 0.75}, 0.01);
  const FourMomentum peak = momentum_to_rest(k.p, k);
  CHECK(peak.E == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(norm(peak.k) < 1e-14);
  const Vec3 ks{0.1, -0.2, 0.3};
  const FourMomentum lab = momentum_to_lab(ks, k);
  CHECK(lab.E == doctest::Approx(on_shell_energy(1.0, lab.k)).epsilon(1e-14));
  CHECK(norm(momentum_to_rest(lab.k, k).k - ks) < 1e-14);
}

TEST_CASE("unit conversions use hbar and hbar c") {
  CHECK(convert(1.0, Unit::InverseEV, Unit::Second) == doctest::Approx(6.582119569e-16).epsilon(1e-15));
  CHECK(convert(1e-6, Unit::Meter, Unit::InverseEV) == doctest::Approx(1e-6 / 1.97326980e-7).epsilon(1e-14));
  CHECK(convert(1e-6, Unit::Meter, Unit::InverseEV) == doctest::Approx(5.0677).epsilon(1e-4));
  const double t = 1234.5;
  CHECK(convert(convert(t, Unit::InverseEV, Unit::Second), Unit::Second, Unit::InverseEV) ==
        doctest::Approx(t).epsilon(1e-15));
  CHECK(convert(1.0, Unit::Gram, Unit::EV) == doctest::Approx(5.6095886e32).epsilon(1e-7));
  CHECK(seconds_to_years(3.15576e7) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(code_of([] { convert(1.0, Unit::Second, Unit::EV); }) == ErrorCode::UnsupportedUnitPair);
}

TEST_CASE("error codes classify convergence failures") {
  CHECK(code_name(ErrorCode::GridTooCoarse) == "GridTooCoarse");
  CHECK(is_convergence_failure(ErrorCode::MaxSubdivisions));
  CHECK(is_convergence_failure(ErrorCode::TailNotConverged));
  CHECK(is_convergence_failure(ErrorCode::GridTooCoarse));
  CHECK_FALSE(is_convergence_failure(ErrorCode::InvalidArgument));
  CHECK_FALSE(is_convergence_failure(ErrorCode::NonPositiveMass));
}

TEST_CASE("json writer keeps key order and prints 17 digits") {
  Json doc = Json::object();
  doc.set("b", 0.1);
  doc.set("a", Json::Array{1, "x\"y", nullptr, true});
  doc.set("nan", std::nan(""));
  doc.set("b", 2.5); // replaces in place
  CHECK(doc.dump(0) == R"({"b":2.5,"a":[1,"x\"y",null,true],"nan":null})");
  Json one = Json::object();
  one.set("v", 0.1);
  CHECK(one.dump(0) == R"({"v":0.10000000000000001})");
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  for (int workers : {1, 3, 8}) {
    set_worker_count(workers);
    CHECK(worker_count() == workers);
    std::vector<int> hits(1001, 0);
    parallel_for(hits.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t, std::size_t) { fail(ErrorCode::IoError, "boom"); }), Error);
  set_worker_count(0);
}

TEST_CASE("natural spline interpolates and vanishes outside its support") {
  std::vector<double> x, y;
  for (int i = 0; i <= 10; ++i) {
    x.push_back(0.1 * i);
    y.push_back(2.0 - 3.0 * 0.1 * i);
  }
  const NaturalSpline s(x, y);
  CHECK(s.value(0.37) == doctest::Approx(2.0 - 3.0 * 0.37).epsilon(1e-14));
  CHECK(s.first_derivative(0.55) == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(std::abs(s.second_derivative(0.55)) < 1e-10);
  CHECK(s.value(0.3) == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(s.value(-0.01) == 0.0);
  CHECK(s.value(1.01) == 0.0);

  // Smooth data: interpolation error falls like h^4 away from the ends.
  std::vector<double> xs, ys;
  for (int i = 0; i <= 200; ++i) {
    xs.push_back(0.01 * i);
    ys.push_back(std::sin(xs.back()));
  }
  const NaturalSpline smooth(xs, ys);
  CHECK(smooth.value(1.234) == doctest::Approx(std::sin(1.234)).epsilon(1e-9));
  CHECK_THROWS_AS(NaturalSpline({1.0}, {1.0}), Error);
}

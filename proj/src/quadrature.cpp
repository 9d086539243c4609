#include "wavekit/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace wavekit::quad {

namespace {

GaussRule build_gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 0 ? 1.0 : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    // Recompute derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - (n == 1 ? 1.0 : p0)) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    rule.nodes[n / 2] = 0.0;
  }
  return rule;
}

} // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1) {
    fail(ErrorCode::InvalidArgument, "Gauss-Legendre order must be >= 1");
  }
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<GaussRule>(build_gauss_legendre(n));
  }
  return *slot;
}

void spherical_bessel(int lmax, double x, std::span<double> out) {
  if (static_cast<int>(out.size()) < lmax + 1) {
    fail(ErrorCode::InvalidArgument, "spherical_bessel output span too small");
  }
  if (x <= 1.0) {
    double lead = 1.0; // x^l / (2l+1)!!
    for (int l = 0; l <= lmax; ++l) {
      if (l > 0) {
        lead *= x / (2.0 * l + 1.0);
      }
      double term = lead;
      double sum = term;
      const double z = -0.5 * x * x;
      for (int k = 1; k < 30; ++k) {
        term *= z / (k * (2.0 * l + 2.0 * k + 1.0));
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) {
          break;
        }
      }
      out[l] = sum;
    }
    return;
  }
  // Miller's downward recurrence, normalized with sum_l (2l+1) j_l^2 = 1.
  const int start = lmax + 30 + static_cast<int>(x);
  std::vector<double> j(start + 2, 0.0);
  j[start + 1] = 0.0;
  j[start] = 1.0;
  for (int l = start; l >= 1; --l) {
    j[l - 1] = (2.0 * l + 1.0) / x * j[l] - j[l + 1];
    // Keep values well inside the range where their squares are finite.
    if (std::abs(j[l - 1]) > 1e100) {
      for (int q = l - 1; q <= start + 1; ++q) {
        j[q] *= 1e-100;
      }
    }
  }
  double norm_sum = 0.0;
  for (int l = 0; l <= start; ++l) {
    norm_sum += (2.0 * l + 1.0) * j[l] * j[l];
  }
  double scale = 1.0 / std::sqrt(norm_sum);
  // Fix the overall sign against the closed forms of j_0 or j_1.
  const double j0 = std::sin(x) / x;
  const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
  const bool use_j0 = std::abs(j0) >= std::abs(j1);
  const double ref = use_j0 ? j0 : j1;
  const double got = use_j0 ? j[0] : j[1];
  if ((ref < 0.0) != (got < 0.0)) {
    scale = -scale;
  }
  for (int l = 0; l <= lmax; ++l) {
    out[l] = j[l] * scale;
  }
}

double spherical_j0(double x) {
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0));
  }
  return std::sin(x) / x;
}

double spherical_j1(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)));
  }
  return (std::sin(x) / x - std::cos(x)) / x;
}

namespace detail {

void filon_weights(double omega, double a, double b, Weight weight, std::span<double> nodes_out,
                   std::span<double> weights_out) {
  constexpr int n = kFilonNodes;
  const GaussRule& rule = gauss_legendre(n);
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double theta = omega * h;

  std::array<double, n> jl{};
  spherical_bessel(n - 1, theta, jl);
  std::array<double, n> moment{}; // (2l+1) j_l(theta) trig(omega c + l pi / 2)
  const double s = std::sin(omega * c);
  const double co = std::cos(omega * c);
  for (int l = 0; l < n; ++l) {
    // sin/cos(omega c + l pi/2) cycles through (s, c, -s, -c) / (c, -s, -c, s).
    double trig = 0.0;
    switch (l % 4) {
    case 0: trig = weight == Weight::Sin ? s : co; break;
    case 1: trig = weight == Weight::Sin ? co : -s; break;
    case 2: trig = weight == Weight::Sin ? -s : -co; break;
    default: trig = weight == Weight::Sin ? -co : s; break;
    }
    moment[l] = (2.0 * l + 1.0) * jl[l] * trig;
  }
  for (int i = 0; i < n; ++i) {
    const double xi = rule.nodes[i];
    double p0 = 1.0;
    double p1 = xi;
    double acc = moment[0] * p0 + moment[1] * p1;
    for (int l = 2; l < n; ++l) {
      const double p2 = ((2.0 * l - 1.0) * xi * p1 - (l - 1.0) * p0) / l;
      acc += moment[l] * p2;
      p0 = p1;
      p1 = p2;
    }
    nodes_out[i] = c + h * xi;
    weights_out[i] = h * rule.weights[i] * acc;
  }
}

} // namespace detail

} // namespace wavekit::quad

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "wavekit/error.hpp"

namespace wavekit::quad {

using cplx = std::complex<double>;

/// Fixed-size bundle of complex values integrated in one pass (a field and its
/// derivatives share every integrand evaluation).
template <std::size_t N>
struct CArray {
  std::array<cplx, N> c{};

  cplx& operator[](std::size_t i) { return c[i]; }
  const cplx& operator[](std::size_t i) const { return c[i]; }

  CArray& operator+=(const CArray& o) {
    for (std::size_t i = 0; i < N; ++i) c[i] += o.c[i];
    return *this;
  }
  CArray& operator-=(const CArray& o) {
    for (std::size_t i = 0; i < N; ++i) c[i] -= o.c[i];
    return *this;
  }
  CArray& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  CArray& operator*=(cplx s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  friend CArray operator+(CArray a, const CArray& b) { return a += b; }
  friend CArray operator-(CArray a, const CArray& b) { return a -= b; }
  friend CArray operator*(CArray a, double s) { return a *= s; }
  friend CArray operator*(double s, CArray a) { return a *= s; }
  friend CArray operator*(CArray a, cplx s) { return a *= s; }
  friend CArray operator*(cplx s, CArray a) { return a *= s; }
};

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const cplx& x) { return std::abs(x); }
template <std::size_t N>
double magnitude(const CArray<N>& a) {
  double m = 0.0;
  for (const auto& x : a.c) m = std::max(m, std::abs(x));
  return m;
}

inline bool all_finite(double x) { return std::isfinite(x); }
inline bool all_finite(const cplx& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); }
template <std::size_t N>
bool all_finite(const CArray<N>& a) {
  for (const auto& x : a.c) {
    if (!all_finite(x)) return false;
  }
  return true;
}

template <class T>
struct QuadResultT {
  T value{};
  double error_estimate = 0.0;
  long evaluations = 0;
  bool converged = false;
};

using QuadResult = QuadResultT<double>;
using ComplexQuadResult = QuadResultT<cplx>;

struct QuadOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  int max_subdivisions = 20000;
  // When false a non-converged result is returned with converged = false
  // instead of throwing MaxSubdivisions.
  bool throw_on_failure = true;

  double target(double value_magnitude) const { return std::max(abs_tol, rel_tol * value_magnitude); }
};

struct GaussRule {
  std::vector<double> nodes;   // on [-1, 1], ascending
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule; results are cached per n.
const GaussRule& gauss_legendre(int n);

// Spherical Bessel functions j_0 .. j_lmax at x >= 0 (series for small x,
// normalized Miller recurrence otherwise).
void spherical_bessel(int lmax, double x, std::span<double> out);
double spherical_j0(double x);
double spherical_j1(double x);

enum class Weight { Sin, Cos };

// Degree at which the Filon path switches on: omega * (b - a) >= this.
inline constexpr double kFilonThreshold = 20.0;

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Segment {
  double a;
  double b;
  T value;
  double error;
  friend bool operator<(const Segment& l, const Segment& r) {
    // Max-heap on error; ties broken by position so the order is reproducible.
    if (l.error != r.error) return l.error < r.error;
    return l.a > r.a;
  }
};

template <class T, class F>
T checked_eval(F& f, double x) {
  T y = f(x);
  if (!all_finite(y)) {
    fail(ErrorCode::NonFiniteIntegrand, "integrand is not finite at x = " + std::to_string(x));
  }
  return y;
}

// One Gauss-Kronrod 15-point panel with the QUADPACK error heuristic.
template <class T, class F>
Segment<T> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = checked_eval<T>(f, c);
  T resk = fc * kWgk[7];
  T resg = fc * kWg[3];
  double resabs = magnitude(fc) * kWgk[7];
  std::array<T, 7> f1{};
  std::array<T, 7> f2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    f1[j] = checked_eval<T>(f, c - dx);
    f2[j] = checked_eval<T>(f, c + dx);
    const T sum = f1[j] + f2[j];
    resk += sum * kWgk[j];
    resabs += kWgk[j] * (magnitude(f1[j]) + magnitude(f2[j]));
    if (j % 2 == 1) {
      resg += sum * kWg[j / 2];
    }
  }
  const T mean = resk * 0.5;
  double resasc = kWgk[7] * magnitude(fc - mean);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (magnitude(f1[j] - mean) + magnitude(f2[j] - mean));
  }
  resk *= h;
  resabs *= std::abs(h);
  resasc *= std::abs(h);
  double err = magnitude((resk - resg * h));
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(err, 50.0 * eps * resabs);
  }
  return {a, b, resk, err};
}

template <class T, class Rule>
QuadResultT<T> adaptive_driver(Rule&& rule, double a, double b, int evals_per_rule, int min_segments,
                               const QuadOptions& opt) {
  std::priority_queue<Segment<T>> heap;
  const int n0 = std::max(1, min_segments);
  const double width = (b - a) / n0;
  for (int i = 0; i < n0; ++i) {
    const double lo = a + i * width;
    const double hi = (i == n0 - 1) ? b : a + (i + 1) * width;
    heap.push(rule(lo, hi));
  }
  long evals = static_cast<long>(n0) * evals_per_rule;

  auto totals = [&heap]() {
    // Sum in a fixed (position) order so the result does not depend on heap layout.
    std::vector<Segment<T>> segs;
    auto copy = heap;
    while (!copy.empty()) {
      segs.push_back(copy.top());
      copy.pop();
    }
    std::sort(segs.begin(), segs.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
    T value{};
    double err = 0.0;
    for (const auto& s : segs) {
      value += s.value;
      err += s.error;
    }
    return std::pair<T, double>{value, err};
  };

  T total{};
  double total_err = 0.0;
  {
    auto copy = heap;
    while (!copy.empty()) {
      total += copy.top().value;
      total_err += copy.top().error;
      copy.pop();
    }
  }

  int segments = n0;
  bool converged = total_err <= opt.target(magnitude(total));
  while (!converged) {
    if (segments >= opt.max_subdivisions) {
      break;
    }
    Segment<T> worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      break; // interval cannot be split further in floating point
    }
    heap.pop();
    Segment<T> left = rule(worst.a, mid);
    Segment<T> right = rule(mid, worst.b);
    evals += 2L * evals_per_rule;
    total += (left.value + right.value) - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++segments;
    if (segments % 64 == 0) {
      // Refresh running sums to keep cancellation drift out of the stopping test.
      auto [v, e] = totals();
      total = v;
      total_err = e;
    }
    converged = total_err <= opt.target(magnitude(total));
  }

  auto [value, err] = totals();
  QuadResultT<T> out;
  out.value = value;
  out.error_estimate = err;
  out.evaluations = evals;
  out.converged = err <= opt.target(magnitude(value));
  if (!out.converged && opt.throw_on_failure) {
    fail(ErrorCode::MaxSubdivisions, "adaptive quadrature did not reach tolerance (error estimate " +
                                         std::to_string(err) + ")");
  }
  return out;
}

// Filon-type panel rule: g is interpolated at Gauss-Legendre nodes and the
// Legendre moments of the trigonometric weight are taken exactly,
//   int_{-1}^{1} P_l(x) e^{i theta x} dx = 2 i^l j_l(theta).
inline constexpr int kFilonNodes = 16;

void filon_weights(double omega, double a, double b, Weight weight, std::span<double> nodes_out,
                   std::span<double> weights_out);

template <class T, class F>
Segment<T> filon_panel(F& g, double omega, double a, double b, Weight weight) {
  std::array<double, kFilonNodes> x{};
  std::array<double, kFilonNodes> w{};
  filon_weights(omega, a, b, weight, x, w);
  T sum{};
  for (int i = 0; i < kFilonNodes; ++i) {
    sum += checked_eval<T>(g, x[i]) * w[i];
  }
  return {a, b, sum, 0.0};
}

} // namespace detail

/// Adaptive Gauss-Kronrod (7/15) integration with bisection of the worst
/// segment. b may be +infinity; the tail is mapped by k = a + u / (1 - u).
template <class T = double, class F>
QuadResultT<T> integrate_adaptive(F&& f, double a, double b, const QuadOptions& opt = {},
                                  int min_segments = 1) {
  if (std::isnan(a) || std::isnan(b) || a > b) {
    fail(ErrorCode::InvalidArgument, "integration limits must satisfy a <= b");
  }
  if (a == b) {
    return {T{}, 0.0, 0, true};
  }
  if (std::isinf(b)) {
    if (std::isinf(a)) {
      fail(ErrorCode::InvalidArgument, "lower limit must be finite");
    }
    auto mapped = [&f, a](double u) -> T {
      const double s = 1.0 - u;
      return f(a + u / s) * (1.0 / (s * s));
    };
    auto rule = [&mapped](double lo, double hi) { return detail::gk15<T>(mapped, lo, hi); };
    return detail::adaptive_driver<T>(rule, 0.0, 1.0, 15, min_segments, opt);
  }
  auto rule = [&f](double lo, double hi) { return detail::gk15<T>(f, lo, hi); };
  return detail::adaptive_driver<T>(rule, a, b, 15, min_segments, opt);
}

/// Integral of g(k) * sin(omega k) (or cos) over [a, b]. Uses the Filon-type
/// panel rule with adaptive bisection when omega * (b - a) >= 20, plain
/// adaptive quadrature of the product otherwise.
template <class T = double, class F>
QuadResultT<T> integrate_oscillatory(F&& g, double omega, double a, double b, Weight weight,
                                     const QuadOptions& opt = {}) {
  if (!(omega >= 0.0) || std::isinf(omega)) {
    fail(ErrorCode::InvalidArgument, "oscillation frequency must be finite and >= 0");
  }
  if (std::isnan(a) || std::isnan(b) || a > b || std::isinf(a) || std::isinf(b)) {
    fail(ErrorCode::InvalidArgument, "oscillatory integration needs finite limits a <= b");
  }
  if (a == b || (omega == 0.0 && weight == Weight::Sin)) {
    return {T{}, 0.0, 0, true};
  }
  if (omega * (b - a) < kFilonThreshold) {
    auto prod = [&g, omega, weight](double k) -> T {
      const double s = weight == Weight::Sin ? std::sin(omega * k) : std::cos(omega * k);
      return g(k) * s;
    };
    return integrate_adaptive<T>(prod, a, b, opt);
  }
  // Estimate on a panel = fine rule on its halves; error = |halves - whole|.
  auto rule = [&g, omega, weight](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    auto whole = detail::filon_panel<T>(g, omega, lo, hi, weight);
    auto left = detail::filon_panel<T>(g, omega, lo, mid, weight);
    auto right = detail::filon_panel<T>(g, omega, mid, hi, weight);
    detail::Segment<T> s{lo, hi, left.value + right.value, 0.0};
    s.error = magnitude(s.value - whole.value);
    return s;
  };
  const int min_panels = 4;
  return detail::adaptive_driver<T>(rule, a, b, 3 * detail::kFilonNodes, min_panels, opt);
}

template <class T = double, class F>
QuadResultT<T> integrate_oscillatory_sin(F&& g, double omega, double a, double b,
                                         const QuadOptions& opt = {}) {
  return integrate_oscillatory<T>(std::forward<F>(g), omega, a, b, Weight::Sin, opt);
}

/// Fixed-order composite Gauss-Legendre sum of f over [a, b] with `panels`
/// equal panels of `order` nodes each.
template <class T = double, class F>
T composite_gauss(F&& f, double a, double b, int panels, int order) {
  const GaussRule& rule = gauss_legendre(order);
  const double width = (b - a) / panels;
  T sum{};
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * width;
    for (int i = 0; i < order; ++i) {
      sum += f(c + 0.5 * width * rule.nodes[i]) * (0.5 * width * rule.weights[i]);
    }
  }
  return sum;
}

} // namespace wavekit::quad

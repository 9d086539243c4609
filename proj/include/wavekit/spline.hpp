#pragma once

#include <span>
#include <vector>

namespace wavekit {

/// Natural cubic spline through (x_i, y_i). Evaluations outside [x_0, x_n]
/// return zero, matching an envelope with compact support.
class NaturalSpline {
public:
  NaturalSpline() = default;
  NaturalSpline(std::vector<double> x, std::vector<double> y);

  double value(double x) const;
  double first_derivative(double x) const;
  double second_derivative(double x) const;

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  std::span<const double> knots() const { return x_; }
  std::span<const double> values() const { return y_; }
  bool empty() const { return x_.empty(); }

private:
  std::size_t segment(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_; // second derivatives at the knots
};

} // namespace wavekit

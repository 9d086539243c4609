#include "wavekit/models.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "wavekit/error.hpp"
#include "wavekit/expectation.hpp"

namespace wavekit {

namespace {

constexpr double kPi = std::numbers::pi;

// (2 pi / sigma_p^2)^{3/4}
double gaussian_prefactor(double sigma_p) { return std::pow(2.0 * kPi / (sigma_p * sigma_p), 0.75); }

// Minkowski square (p - k)^2 / (4 sigma_p^2) for on-shell p and k, written
// through the rest-frame momentum k* to avoid cancellation:
//   (p - k)^2 = 2 m (m - E*) = -2 m |k*|^2 / (E* + m).
double covariant_exponent(const Vec3& k, const Kinematics& kin) {
  const FourMomentum rest = momentum_to_rest(k, kin);
  const double s2 = norm2(rest.k);
  const double e_star = std::sqrt(s2 + kin.m * kin.m);
  return -kin.m * s2 / (2.0 * kin.sigma_p * kin.sigma_p * (e_star + kin.m));
}

double factorized_exponent(const Vec3& k, const Kinematics& kin) {
  const double kl = dot(k, kin.axis);
  const Vec3 kt = k - kl * kin.axis;
  const double dl = kl - norm(kin.p);
  const double s2 = kin.sigma_p * kin.sigma_p;
  return -dl * dl / (4.0 * s2 * kin.gamma * kin.gamma) - norm2(kt) / (4.0 * s2);
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

double parse_double(const std::string& text, int line) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": not a number: '" + text + "'");
  }
  return value;
}

} // namespace

std::string_view kind_name(ModelKind kind) {
  switch (kind) {
  case ModelKind::GaussianNoncov: return "gaussian-noncov";
  case ModelKind::GaussianCovExact: return "gaussian-cov-exact";
  case ModelKind::GaussianCovFactorized: return "gaussian-cov-factorized";
  case ModelKind::TabulatedIsotropic: return "tabulated-isotropic";
  }
  return "unknown";
}

ModelKind parse_kind(std::string_view name) {
  for (auto kind : {ModelKind::GaussianNoncov, ModelKind::GaussianCovExact, ModelKind::GaussianCovFactorized,
                    ModelKind::TabulatedIsotropic}) {
    if (name == kind_name(kind)) {
      return kind;
    }
  }
  if (name == "tabulated") {
    return ModelKind::TabulatedIsotropic;
  }
  fail(ErrorCode::ParseError, "unknown model kind '" + std::string(name) + "'");
}

double phi_gaussian_noncov(const Vec3& k, const Kinematics& kin) {
  const double d2 = norm2(k - kin.p);
  return std::sqrt(2.0 * kin.E_p) * gaussian_prefactor(kin.sigma_p) *
         std::exp(-d2 / (4.0 * kin.sigma_p * kin.sigma_p));
}

double phi_gaussian_cov(const Vec3& k, const Kinematics& kin, CovVariant variant, std::optional<double> n_rg) {
  if (variant == CovVariant::Factorized) {
    return std::sqrt(2.0 * kin.m) * gaussian_prefactor(kin.sigma_p) * std::exp(factorized_exponent(k, kin));
  }
  if (!n_rg) {
    fail(ErrorCode::NotNormalized, "exact covariant envelope needs N_RG from normalize()");
  }
  return *n_rg * std::exp(covariant_exponent(k, kin));
}

PacketModel PacketModel::gaussian(ModelKind kind, const Kinematics& kin, bool normalize_now) {
  if (kind == ModelKind::TabulatedIsotropic) {
    fail(ErrorCode::InvalidArgument, "tabulated models are built with model_from_table");
  }
  PacketModel model(kind, kin);
  if (kind != ModelKind::GaussianCovExact) {
    // The closed-form prefactors are already normalized to leading order.
    model.normalized_ = true;
  }
  if (normalize_now) {
    model = normalize(model);
  }
  return model;
}

PacketModel PacketModel::tabulated(std::vector<TableSample> samples, const Kinematics& kin) {
  return model_from_table(std::move(samples), kin);
}

double PacketModel::amplitude_unchecked(const Vec3& k) const {
  switch (kind_) {
  case ModelKind::GaussianNoncov:
    return scale_ * phi_gaussian_noncov(k, kin_);
  case ModelKind::GaussianCovFactorized:
    return scale_ * phi_gaussian_cov(k, kin_, CovVariant::Factorized);
  case ModelKind::GaussianCovExact:
    return scale_ * std::exp(covariant_exponent(k, kin_));
  case ModelKind::TabulatedIsotropic: {
    const FourMomentum rest = momentum_to_rest(k, kin_);
    return scale_ * table_.value(norm(rest.k));
  }
  }
  return 0.0;
}

double PacketModel::amplitude(const Vec3& k) const {
  if (kind_ == ModelKind::GaussianCovExact && !normalized_) {
    fail(ErrorCode::NotNormalized, "exact covariant envelope used before normalize()");
  }
  return amplitude_unchecked(k);
}

Vec3 PacketModel::gradient(const Vec3& k) const {
  const double s2 = kin_.sigma_p * kin_.sigma_p;
  switch (kind_) {
  case ModelKind::GaussianNoncov:
    return (-amplitude_unchecked(k) / (2.0 * s2)) * (k - kin_.p);
  case ModelKind::GaussianCovFactorized: {
    const double phi = amplitude_unchecked(k);
    const double kl = dot(k, kin_.axis);
    const Vec3 kt = k - kl * kin_.axis;
    const double dl = kl - norm(kin_.p);
    const double sl2 = s2 * kin_.gamma * kin_.gamma;
    return phi * ((-dl / (2.0 * sl2)) * kin_.axis - kt / (2.0 * s2));
  }
  case ModelKind::GaussianCovExact: {
    const double phi = amplitude_unchecked(k);
    const double ek = on_shell_energy(kin_.m, k);
    return (-phi / (2.0 * s2)) * ((kin_.E_p / ek) * k - kin_.p);
  }
  case ModelKind::TabulatedIsotropic: {
    const FourMomentum rest = momentum_to_rest(k, kin_);
    const double s = norm(rest.k);
    if (s < 1e-300) {
      return {};
    }
    const double beta = kin_.speed();
    Vec3 jt = rest.k;
    if (beta > 0.0) {
      const double along = dot(kin_.axis, rest.k);
      const double ek = on_shell_energy(kin_.m, k);
      jt += ((kin_.gamma - 1.0) * along) * kin_.axis - (kin_.gamma * beta * along / ek) * k;
    }
    return (scale_ * table_.first_derivative(s) / s) * jt;
  }
  }
  return {};
}

bool PacketModel::boost_invariant() const {
  return kind_ == ModelKind::GaussianCovExact || kind_ == ModelKind::TabulatedIsotropic;
}

bool PacketModel::isotropic_at_rest() const { return boost_invariant() || at_rest(); }

double PacketModel::profile(double s) const {
  if (!isotropic_at_rest()) {
    fail(ErrorCode::MethodUnavailable, "rest-frame profile needs a model isotropic at rest");
  }
  const double s2 = kin_.sigma_p * kin_.sigma_p;
  switch (kind_) {
  case ModelKind::GaussianNoncov:
  case ModelKind::GaussianCovFactorized:
    return scale_ * std::sqrt(2.0 * kin_.m) * gaussian_prefactor(kin_.sigma_p) * std::exp(-s * s / (4.0 * s2));
  case ModelKind::GaussianCovExact: {
    const double e = std::sqrt(s * s + kin_.m * kin_.m);
    return scale_ * std::exp(-kin_.m * s * s / (2.0 * s2 * (e + kin_.m)));
  }
  case ModelKind::TabulatedIsotropic:
    return scale_ * table_.value(s);
  }
  return 0.0;
}

double PacketModel::profile_d1(double s) const {
  const double s2 = kin_.sigma_p * kin_.sigma_p;
  switch (kind_) {
  case ModelKind::GaussianNoncov:
  case ModelKind::GaussianCovFactorized:
    return -s / (2.0 * s2) * profile(s);
  case ModelKind::GaussianCovExact: {
    const double e = std::sqrt(s * s + kin_.m * kin_.m);
    return -kin_.m * s / (2.0 * s2 * e) * profile(s);
  }
  case ModelKind::TabulatedIsotropic:
    return scale_ * table_.first_derivative(s);
  }
  return 0.0;
}

double PacketModel::profile_d2(double s) const {
  const double s2 = kin_.sigma_p * kin_.sigma_p;
  switch (kind_) {
  case ModelKind::GaussianNoncov:
  case ModelKind::GaussianCovFactorized:
    return (s * s / (4.0 * s2 * s2) - 1.0 / (2.0 * s2)) * profile(s);
  case ModelKind::GaussianCovExact: {
    const double m = kin_.m;
    const double e = std::sqrt(s * s + m * m);
    const double g1 = -m * s / (2.0 * s2 * e);
    const double g2 = -m * m * m / (2.0 * s2 * e * e * e);
    return (g2 + g1 * g1) * profile(s);
  }
  case ModelKind::TabulatedIsotropic:
    return scale_ * table_.second_derivative(s);
  }
  return 0.0;
}

double PacketModel::support_lo() const {
  return kind_ == ModelKind::TabulatedIsotropic ? table_.front() : 0.0;
}

double PacketModel::support_hi() const {
  const double n = kSupportSigmas;
  switch (kind_) {
  case ModelKind::GaussianNoncov:
  case ModelKind::GaussianCovFactorized:
    return n * kin_.sigma_p;
  case ModelKind::GaussianCovExact: {
    // m (E - m) / (2 sigma_p^2) = n^2 / 4
    const double m = kin_.m;
    const double e = m + n * n * kin_.sigma_p * kin_.sigma_p / (2.0 * m);
    return std::sqrt(e * e - m * m);
  }
  case ModelKind::TabulatedIsotropic:
    return table_.back();
  }
  return 0.0;
}

double PacketModel::longitudinal_stretch() const {
  return kind_ == ModelKind::GaussianNoncov ? 1.0 : kin_.gamma;
}

double PacketModel::closed_form_scale() const {
  if (kind_ == ModelKind::TabulatedIsotropic) {
    fail(ErrorCode::MethodUnavailable, "no closed form for tabulated envelopes");
  }
  return scale_ / normalized_scale_;
}

PacketModel PacketModel::scaled(double factor) const {
  PacketModel out = *this;
  out.scale_ *= factor;
  return out;
}

PacketModel model_from_table(std::vector<TableSample> samples, const Kinematics& kin) {
  if (samples.size() < 8) {
    fail(ErrorCode::TooFewSamples, "tabulated envelope needs at least 8 samples (got " +
                                       std::to_string(samples.size()) + ")");
  }
  std::vector<double> ks, phis;
  ks.reserve(samples.size());
  phis.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.k) || !std::isfinite(s.phi)) {
      fail(ErrorCode::InvalidArgument, "non-finite table entry at row " + std::to_string(i));
    }
    if (s.phi < 0.0) {
      fail(ErrorCode::NegativeAmplitude, "negative amplitude at row " + std::to_string(i));
    }
    if (i == 0 && s.k < 0.0) {
      fail(ErrorCode::NonMonotoneGrid, "momentum grid must start at k >= 0");
    }
    if (i > 0 && !(s.k > samples[i - 1].k)) {
      fail(ErrorCode::NonMonotoneGrid, "momentum grid not strictly increasing at row " + std::to_string(i));
    }
    ks.push_back(s.k);
    phis.push_back(s.phi);
  }
  PacketModel model(ModelKind::TabulatedIsotropic, kin);
  model.table_ = NaturalSpline(std::move(ks), std::move(phis));
  model.normalized_ = true;
  return normalize(model);
}

PacketModel normalize(const PacketModel& model) {
  PacketModel work = model;
  work.normalized_ = true; // lets amplitude() run while measuring the norm
  quad::ExpectationOptions opt;
  opt.rel_tol = 1e-12;
  auto norm_of = [&opt](const PacketModel& m) {
    if (m.isotropic_at_rest() && m.at_rest()) {
      return quad::expectation_radial(m, [](double) { return 1.0; }, opt);
    }
    return quad::expectation(m, [](const Vec3&) { return 1.0; }, opt);
  };
  const quad::QuadResult raw = norm_of(work);
  if (!std::isfinite(raw.value) || !(raw.value > 0.0)) {
    fail(ErrorCode::DivergentNorm, "normalization integral is not finite and positive");
  }
  const double factor = 1.0 / std::sqrt(raw.value);
  work.scale_ *= factor;
  work.last_factor_ = factor;
  work.normalized_scale_ = work.scale_;
  const quad::QuadResult check = norm_of(work);
  work.norm_residual_ = std::abs(check.value - 1.0);
  if (!(work.norm_residual_ <= 1e-8)) {
    fail(ErrorCode::DivergentNorm, "normalization residual " + std::to_string(work.norm_residual_) +
                                       " above 1e-8");
  }
  return work;
}

std::vector<TableSample> read_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::IoError, "cannot open table file " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || trim(line) != "k_eV,phi") {
    fail(ErrorCode::ParseError, "table file must start with header 'k_eV,phi'");
  }
  std::vector<TableSample> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected 'k,phi'");
    }
    out.push_back({parse_double(trim(line.substr(0, comma)), lineno),
                   parse_double(trim(line.substr(comma + 1)), lineno)});
  }
  return out;
}

void write_table_csv(const std::filesystem::path& path, const std::vector<TableSample>& samples) {
  std::ofstream out(path);
  if (!out) {
    fail(ErrorCode::IoError, "cannot write table file " + path.string());
  }
  out.precision(17);
  out << "k_eV,phi\n";
  for (const auto& s : samples) {
    out << s.k << ',' << s.phi << '\n';
  }
}

std::vector<TableSample> smooth_top_hat_samples(double edge, double width, int n) {
  if (!(width > 0.0) || !(edge >= 5.0 * width) || n < 8) {
    fail(ErrorCode::InvalidArgument, "smooth top-hat needs width > 0, edge >= 5 width and n >= 8");
  }
  std::vector<TableSample> out;
  out.reserve(n);
  const double k_end = edge + 7.0 * width;
  for (int i = 0; i < n; ++i) {
    const double k = k_end * i / (n - 1);
    out.push_back({k, 0.5 * std::erfc((k - edge) / width)});
  }
  return out;
}

} // namespace wavekit

#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "wavekit/asymptotics.hpp"
#include "wavekit/error.hpp"
#include "wavekit/field_grid.hpp"
#include "wavekit/json_writer.hpp"
#include "wavekit/parallel.hpp"
#include "wavekit/units.hpp"

namespace wavekit::cli {

namespace {

const std::vector<std::string> kCommands = {"moments", "evolve", "dispersion", "flux-asymptote",
                                            "prob-asymptote", "table1", "continuity"};

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::InvalidArgument, message);
}

PsiMethod parse_psi(const std::string& name) {
  if (name == "quadrature") return PsiMethod::Quadrature;
  if (name == "closed-form") return PsiMethod::ClosedForm;
  fail(ErrorCode::ParseError, "unknown psi method '" + name + "' (quadrature | closed-form)");
}

std::vector<AsymptoteMethod> parse_methods(const std::string& name) {
  if (name == "both") return {AsymptoteMethod::TimeDomain, AsymptoteMethod::Spectral};
  return {parse_method(name)};
}

std::string default_format(const std::string& command) {
  return command == "moments" || command == "continuity" ? "json" : "csv";
}

Json vec_json(const Vec3& v) { return Json(Json::Array{v.x, v.y, v.z}); }

Json doubles_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push(x);
  return a;
}

Json config_json(const RunConfig& cfg) {
  Json c = Json::object();
  c.set("command", cfg.command);
  c.set("model", cfg.model);
  c.set("mass", cfg.mass);
  c.set("momentum", doubles_json(cfg.momentum));
  c.set("sigma_p", cfg.sigma_p);
  if (!cfg.table.empty()) c.set("table", cfg.table);
  if (!cfg.top_hat.empty()) c.set("top_hat", doubles_json(cfg.top_hat));
  Json tol = Json::object();
  tol.set("field", cfg.field_tol);
  tol.set("moment_rel", cfg.moment_rel_tol);
  tol.set("moment_abs", cfg.moment_abs_tol);
  tol.set("time", cfg.time_tol);
  tol.set("spectral", cfg.spectral_tol);
  c.set("tolerances", std::move(tol));
  c.set("grid", cfg.grid);
  c.set("extent", cfg.extent);
  c.set("format", cfg.format);
  c.set("threads", worker_count());
  if (cfg.command == "evolve") {
    c.set("t", cfg.t);
    c.set("psi", cfg.psi);
  } else if (cfg.command == "dispersion") {
    c.set("times", doubles_json(cfg.times));
    c.set("tau_units", cfg.tau_units);
    c.set("measure", cfg.measure);
  } else if (cfg.command == "flux-asymptote" || cfg.command == "prob-asymptote") {
    c.set("radii", doubles_json(cfg.radii));
    c.set("method", cfg.method);
    c.set("t_max", cfg.t_max ? Json(*cfg.t_max) : Json());
  } else if (cfg.command == "continuity") {
    c.set("samples", cfg.samples);
    c.set("seed", static_cast<long long>(cfg.seed));
    c.set("psi", cfg.psi);
  }
  return c;
}

std::string report(const RunConfig& cfg, Json results, Json errors) {
  Json doc = Json::object();
  doc.set("config", config_json(cfg));
  doc.set("results", std::move(results));
  doc.set("errors", std::move(errors));
  return doc.dump(2) + "\n";
}

quad::ExpectationOptions expectation_options(const RunConfig& cfg) {
  quad::ExpectationOptions e;
  e.rel_tol = cfg.moment_rel_tol;
  e.abs_tol = cfg.moment_abs_tol;
  return e;
}

FieldOptions field_options(const RunConfig& cfg) {
  FieldOptions f;
  f.rel_tol = cfg.field_tol;
  return f;
}

GridOptions grid_options(const RunConfig& cfg) {
  GridOptions g;
  g.n = cfg.grid;
  g.extent_sigmas = cfg.extent;
  g.max_n = std::max(g.max_n, cfg.grid);
  return g;
}

// ------------------------------------------------------------------ commands

std::string cmd_moments(const RunConfig& cfg, const PacketModel& model) {
  const MomentsReport m = moments(model, expectation_options(cfg));
  const Kinematics& kin = model.kin();
  Json r = Json::object();
  r.set("mean_E", m.mean_E);
  r.set("mean_P", vec_json(m.mean_P));
  r.set("mean_v", vec_json(m.mean_v));
  r.set("mean_v2", m.mean_v2);
  r.set("mean_inv_speed", m.mean_inv_speed);
  r.set("sigma_x2", m.sigma_x2);
  r.set("sigma_v2", m.sigma_v2);
  r.set("sigma_x2_axis", vec_json(m.sigma_x2_axis));
  r.set("sigma_v2_axis", vec_json(m.sigma_v2_axis));
  r.set("sigma_x2_L", m.sigma_x2_L);
  r.set("sigma_x2_T", m.sigma_x2_T);
  r.set("sigma_v2_L", m.sigma_v2_L);
  r.set("sigma_v2_T", m.sigma_v2_T);
  r.set("norm_residual", m.norm_residual);
  Json e = Json::object();
  e.set("norm", m.err.norm);
  e.set("mean_E", m.err.mean_E);
  e.set("mean_P", m.err.mean_P);
  e.set("mean_v", m.err.mean_v);
  e.set("mean_v2", m.err.mean_v2);
  e.set("mean_inv_speed", m.err.mean_inv_speed);
  e.set("sigma_x2", m.err.sigma_x2);
  r.set("error_estimates", std::move(e));
  Json k = Json::object();
  k.set("E_p", kin.E_p);
  k.set("gamma", kin.gamma);
  k.set("v", vec_json(kin.v));
  k.set("tau", kin.tau);
  k.set("tau_L", kin.tau_L);
  k.set("tau_T", kin.tau_T);
  k.set("tau_p", kin.tau_p);
  r.set("kinematics", std::move(k));
  return report(cfg, std::move(r), Json::array());
}

std::string cmd_evolve(const RunConfig& cfg, const PacketModel& model) {
  require(cfg.format == "csv", "evolve writes CSV only");
  const std::vector<double> times = parse_range(cfg.t);
  const MomentsReport m = moments(model, expectation_options(cfg));
  const GridOptions g = grid_options(cfg);
  const PsiMethod method = parse_psi(cfg.psi);
  std::vector<FluxDensity4> all;
  for (double t : times) {
    const auto samples = sample_field(model, t, trajectory_box(m, t, g), method);
    all.insert(all.end(), samples.begin(), samples.end());
  }
  std::ostringstream os;
  write_field_csv(os, all);
  return os.str();
}

std::string cmd_dispersion(const RunConfig& cfg, const PacketModel& model) {
  std::vector<double> times = cfg.times;
  if (cfg.tau_units) {
    const double tau = model.kin().tau;
    for (double& t : times) t *= tau;
  }
  const DispersionCurve c = dispersion_curve(model, times, cfg.measure, grid_options(cfg));
  if (cfg.format == "csv") {
    std::ostringstream os;
    write_dispersion_csv(os, c);
    return os.str();
  }
  Json r = Json::object();
  r.set("t", doubles_json(c.times));
  r.set("sigma_x2", doubles_json(c.sigma_x2));
  if (!c.measured.empty()) {
    r.set("measured", doubles_json(c.measured));
    r.set("measured_err", doubles_json(c.measured_err));
  }
  if (!c.sigma_xL2.empty()) {
    r.set("sigma_xL2", doubles_json(c.sigma_xL2));
    r.set("sigma_xT2", doubles_json(c.sigma_xT2));
  }
  return report(cfg, std::move(r), Json::array());
}

std::string cmd_asymptote(const RunConfig& cfg, const PacketModel& model, AsymptoteQuantity what) {
  TimeIntegralOptions topt;
  topt.rel_tol = cfg.time_tol;
  topt.t_max = cfg.t_max;
  topt.field.rel_tol = std::min(cfg.field_tol, 1e-10);
  SpectralOptions sopt;
  sopt.rel_tol = cfg.spectral_tol;
  const auto rows = asymptote_rows(model, cfg.radii, parse_methods(cfg.method), what, topt, sopt);
  if (cfg.format == "csv") {
    std::ostringstream os;
    write_asymptote_csv(os, rows);
    return os.str();
  }
  Json r = Json::array();
  for (const auto& row : rows) {
    Json o = Json::object();
    o.set("r", row.r);
    o.set("flux_norm", row.flux_norm);
    o.set("prob_norm", row.prob_norm);
    o.set("method", std::string(method_name(row.method)));
    o.set("t_max", row.t_max);
    o.set("err", row.err);
    r.push(std::move(o));
  }
  return report(cfg, std::move(r), Json::array());
}

std::string cmd_table1(const RunConfig& cfg) {
  const auto rows = dispersion_times_table(reference_table_entries());
  if (cfg.format == "csv") {
    std::ostringstream os;
    write_dispersion_table_csv(os, rows);
    return os.str();
  }
  Json r = Json::array();
  for (const auto& row : rows) {
    Json o = Json::object();
    o.set("mass_eV", row.mass_eV);
    o.set("gamma", row.gamma);
    o.set("model", row.covariant ? "covariant" : "non-covariant");
    o.set("tau_L_s", row.tau_L_s);
    o.set("tau_T_s", row.tau_T_s);
    o.set("tau_p_s", row.tau_p_s);
    o.set("tau_p_years", seconds_to_years(row.tau_p_s));
    r.push(std::move(o));
  }
  return report(cfg, std::move(r), Json::array());
}

std::string cmd_continuity(const RunConfig& cfg, const PacketModel& model) {
  require(cfg.format == "json", "continuity writes JSON only");
  const PsiMethod method = parse_psi(cfg.psi);
  const Kinematics& kin = model.kin();
  const MomentsReport m = moments(model, expectation_options(cfg));
  const double t_span = 2.0 * (kin.at_rest() ? kin.tau : kin.tau_p);

  // Points uniform in t in [0, 2 tau] and uniform in a ball of radius
  // 3 sigma(t) (narrowest axis) around the trajectory.
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<SpacetimePoint> points;
  for (int i = 0; i < cfg.samples; ++i) {
    const double t = 0.5 * (unit(rng) + 1.0) * t_span;
    Vec3 d;
    do {
      d = {unit(rng), unit(rng), unit(rng)};
    } while (norm2(d) > 1.0);
    const Vec3 w = spatial_widths(m, t);
    points.push_back({t, trajectory(m, t) + (3.0 * std::min({w.x, w.y, w.z})) * d, Frame::Lab});
  }
  FieldOptions fopt = field_options(cfg);
  fopt.rel_tol = std::min(fopt.rel_tol, 1e-12);
  std::vector<double> res(points.size());
  parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      res[i] = continuity_residual(model, points[i], method, std::nullopt, fopt).residual;
    }
  });

  std::vector<double> sorted = res;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t worst = static_cast<std::size_t>(std::max_element(res.begin(), res.end()) - res.begin());
  double mean = 0.0;
  for (double r : res) mean += r / static_cast<double>(res.size());
  auto quantile = [&](double q) { return sorted[static_cast<std::size_t>(q * (sorted.size() - 1) + 0.5)]; };
  auto count_above = [&](double x) { return static_cast<long>(std::count_if(res.begin(), res.end(), [x](double r) { return r > x; })); };

  Json r = Json::object();
  r.set("samples", static_cast<long>(res.size()));
  r.set("max", sorted.back());
  r.set("median", quantile(0.5));
  r.set("p90", quantile(0.9));
  r.set("mean", mean);
  r.set("above_1e-6", count_above(1e-6));
  r.set("above_1e-3", count_above(1e-3));
  Json w = Json::object();
  w.set("t", points[worst].t);
  w.set("x", vec_json(points[worst].x));
  w.set("residual", res[worst]);
  r.set("worst", std::move(w));
  Json all = Json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    Json o = Json::object();
    o.set("t", points[i].t);
    o.set("x", vec_json(points[i].x));
    o.set("residual", res[i]);
    all.push(std::move(o));
  }
  r.set("points", std::move(all));
  return report(cfg, std::move(r), Json::array());
}

std::string dispatch(const RunConfig& cfg) {
  if (cfg.command == "table1") return cmd_table1(cfg);
  const PacketModel model = build_model(cfg);
  if (cfg.command == "moments") return cmd_moments(cfg, model);
  if (cfg.command == "evolve") return cmd_evolve(cfg, model);
  if (cfg.command == "dispersion") return cmd_dispersion(cfg, model);
  if (cfg.command == "flux-asymptote") return cmd_asymptote(cfg, model, AsymptoteQuantity::Flux);
  if (cfg.command == "prob-asymptote") return cmd_asymptote(cfg, model, AsymptoteQuantity::Probability);
  return cmd_continuity(cfg, model);
}

void add_common_options(CLI::App& app, RunConfig& cfg) {
  app.add_option("--model", cfg.model,
                 "gaussian-noncov | gaussian-cov-exact | gaussian-cov-factorized | tabulated-isotropic");
  app.add_option("--mass", cfg.mass, "particle mass m (eV)");
  app.add_option("--momentum", cfg.momentum, "central momentum px,py,pz (eV)")->delimiter(',')->expected(3);
  app.add_option("--sigma-p", cfg.sigma_p, "momentum width (eV)");
  app.add_option("--table", cfg.table, "envelope table, CSV with header k_eV,phi");
  app.add_option("--top-hat", cfg.top_hat, "built-in smoothed top-hat envelope: edge,width (eV)")
      ->delimiter(',')
      ->expected(2);
  app.add_option("--field-tol", cfg.field_tol, "relative tolerance of field quadratures");
  app.add_option("--moment-rel-tol", cfg.moment_rel_tol, "relative tolerance of moment integrals");
  app.add_option("--moment-abs-tol", cfg.moment_abs_tol, "absolute tolerance of moment integrals");
  app.add_option("--time-tol", cfg.time_tol, "relative tolerance of time integrals");
  app.add_option("--spectral-tol", cfg.spectral_tol, "relative tolerance of spectral integrals");
  app.add_option("--grid", cfg.grid, "grid points per axis (even)");
  app.add_option("--extent", cfg.extent, "grid half-width in widths sigma(t)");
  app.add_option("--output,-o", cfg.output, "output file (default: standard output)");
  app.add_option("--format", cfg.format, "csv | json");
  app.add_option("--threads", cfg.threads, "worker threads (0: WAVEKIT_THREADS or all cores)");
}

} // namespace

std::vector<double> parse_range(const std::string& text) {
  std::vector<double> parts;
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find(':', pos) : text.size();
    if (end == std::string::npos) break;
    double v = 0.0;
    const char* first = text.data() + pos;
    const char* last = text.data() + end;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) break;
    parts.push_back(v);
    pos = end + 1;
  }
  if (parts.size() != 3 || parts[2] < 1.0 || parts[2] != std::floor(parts[2])) {
    fail(ErrorCode::ParseError, "time range must be start:stop:n with integer n >= 1, got '" + text + "'");
  }
  const int n = static_cast<int>(parts[2]);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(n == 1 ? parts[0] : parts[0] + (parts[1] - parts[0]) * i / (n - 1));
  }
  return out;
}

void validate(const RunConfig& cfg) {
  require(std::find(kCommands.begin(), kCommands.end(), cfg.command) != kCommands.end(),
          "unknown command '" + cfg.command + "'");
  require(cfg.format == "csv" || cfg.format == "json", "format must be csv or json");
  require(cfg.threads >= 0, "threads must be >= 0");
  if (cfg.command == "table1") return;

  const ModelKind kind = parse_kind(cfg.model);
  require(std::isfinite(cfg.mass), "mass must be finite");
  if (!(cfg.mass > 0.0)) fail(ErrorCode::NonPositiveMass, "mass must be > 0");
  if (!(cfg.sigma_p > 0.0) || !std::isfinite(cfg.sigma_p)) {
    fail(ErrorCode::NonPositiveWidth, "sigma-p must be finite and > 0");
  }
  require(cfg.momentum.size() == 3, "momentum needs three components");
  for (double c : cfg.momentum) require(std::isfinite(c), "momentum must be finite");
  if (kind == ModelKind::TabulatedIsotropic) {
    require(cfg.table.empty() != cfg.top_hat.empty(), "tabulated-isotropic needs exactly one of --table, --top-hat");
  } else {
    require(cfg.table.empty() && cfg.top_hat.empty(), "--table and --top-hat apply to tabulated-isotropic only");
  }
  for (double tol : {cfg.field_tol, cfg.moment_rel_tol, cfg.time_tol, cfg.spectral_tol}) {
    require(tol > 0.0 && tol < 1.0, "tolerances must lie in (0, 1)");
  }
  require(cfg.moment_abs_tol > 0.0, "moment-abs-tol must be > 0");
  require(cfg.grid >= 4 && cfg.grid % 2 == 0 && cfg.grid <= 512, "grid must be even and in [4, 512]");
  require(cfg.extent > 0.0 && std::isfinite(cfg.extent), "extent must be finite and > 0");

  if (cfg.command == "evolve") {
    for (double t : parse_range(cfg.t)) require(std::isfinite(t), "times must be finite");
    parse_psi(cfg.psi);
  } else if (cfg.command == "dispersion") {
    require(!cfg.times.empty(), "dispersion needs --times");
    for (double t : cfg.times) require(t >= 0.0 && std::isfinite(t), "times must be finite and >= 0");
  } else if (cfg.command == "flux-asymptote" || cfg.command == "prob-asymptote") {
    require(!cfg.radii.empty(), "asymptote commands need --radii");
    for (double r : cfg.radii) require(r > 0.0 && std::isfinite(r), "radii must be finite and > 0");
    parse_methods(cfg.method);
    if (cfg.t_max) require(*cfg.t_max > 0.0 && std::isfinite(*cfg.t_max), "t-max must be finite and > 0");
  } else if (cfg.command == "continuity") {
    require(cfg.samples >= 1, "samples must be >= 1");
    parse_psi(cfg.psi);
  }
}

PacketModel build_model(const RunConfig& cfg) {
  const ModelKind kind = parse_kind(cfg.model);
  const Kinematics kin =
      kinematics_from(cfg.mass, {cfg.momentum[0], cfg.momentum[1], cfg.momentum[2]}, cfg.sigma_p);
  if (kind != ModelKind::TabulatedIsotropic) return PacketModel::gaussian(kind, kin);
  if (!cfg.top_hat.empty()) {
    return PacketModel::tabulated(smooth_top_hat_samples(cfg.top_hat[0], cfg.top_hat[1], 400), kin);
  }
  return PacketModel::tabulated(read_table_csv(cfg.table), kin);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"wavekit: relativistic wave packets, dispersion and 1/r^2 asymptotics", "wavekit"};
  app.fallthrough();
  app.set_config("--config", "", "key = value file; command flags go in [command] sections");
  add_common_options(app, cfg);
  app.require_subcommand(1);

  app.add_subcommand("moments", "moments of the packet (JSON)");
  auto* evolve = app.add_subcommand("evolve", "field dump on trajectory boxes (CSV)");
  evolve->add_option("--t", cfg.t, "times start:stop:n");
  evolve->add_option("--psi", cfg.psi, "quadrature | closed-form");
  auto* dispersion = app.add_subcommand("dispersion", "sigma_x^2(t): analytic law and grid measurement");
  dispersion->add_option("--times", cfg.times, "comma-separated times (1/eV)")->delimiter(',');
  dispersion->add_flag("--tau-units", cfg.tau_units, "times are in units of the rest dispersion time");
  dispersion->add_flag("--measure", cfg.measure, "also measure on a grid");
  for (const char* name : {"flux-asymptote", "prob-asymptote"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "flux-asymptote"
                                             ? "4 pi r^2 |Phi(r)| at each radius"
                                             : "4 pi r^2 P(r) / <1/|v|> at each radius");
    sub->add_option("--radii", cfg.radii, "comma-separated radii (1/eV)")->delimiter(',');
    sub->add_option("--method", cfg.method, "time-domain | spectral | analytic | both");
    sub->add_option("--t-max", cfg.t_max, "fixed upper time limit (1/eV)");
  }
  app.add_subcommand("table1", "dispersion times of the reference particles (CSV)");
  auto* continuity = app.add_subcommand("continuity", "continuity-equation residuals at random points (JSON)");
  continuity->add_option("--samples", cfg.samples, "number of random points");
  continuity->add_option("--seed", cfg.seed, "random seed");
  continuity->add_option("--psi", cfg.psi, "quadrature | closed-form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[" << code_name(ErrorCode::ParseError) << "]: " << e.what() << "\n";
    return 1;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  if (cfg.format.empty()) cfg.format = default_format(cfg.command);

  try {
    validate(cfg);
    if (cfg.threads > 0) set_worker_count(cfg.threads);
    const std::string body = dispatch(cfg);
    if (cfg.output.empty()) {
      out << body;
    } else {
      std::ofstream file(cfg.output, std::ios::binary);
      if (!file) fail(ErrorCode::IoError, "cannot open '" + cfg.output + "' for writing");
      file << body;
      if (!file) fail(ErrorCode::IoError, "write to '" + cfg.output + "' failed");
    }
    return 0;
  } catch (const Error& e) {
    err << "error[" << code_name(e.code()) << "]: " << e.what() << "\n";
    return is_convergence_failure(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error[" << code_name(ErrorCode::InvalidArgument) << "]: " << e.what() << "\n";
    return 1;
  }
}

} // namespace wavekit::cli

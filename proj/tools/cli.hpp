#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wavekit/models.hpp"

namespace wavekit::cli {

/// Everything one invocation needs. Every field has a flag of the same name
/// (with dashes) and the same key in a `--config` file; flags win.
struct RunConfig {
  std::string command;

  std::string model = "gaussian-noncov";
  double mass = 1.0;                        // eV
  std::vector<double> momentum{0.0, 0.0, 0.0}; // eV
  double sigma_p = 0.01;                    // eV
  std::string table;                        // k_eV,phi CSV for tabulated models
  std::vector<double> top_hat;              // edge,width (eV): built-in tabulated top-hat

  double field_tol = 1e-8;
  double moment_rel_tol = 1e-11;
  double moment_abs_tol = 1e-10;
  double time_tol = 1e-6;
  double spectral_tol = 1e-9;

  int grid = 96;
  double extent = 8.0;
  std::string output; // empty: standard output
  std::string format; // csv | json; empty: the command's default
  int threads = 0;    // 0: WAVEKIT_THREADS or all cores

  // evolve
  std::string t = "0:0:1";
  std::string psi = "quadrature";
  // dispersion
  std::vector<double> times;
  bool tau_units = false;
  bool measure = false;
  // flux-asymptote, prob-asymptote
  std::vector<double> radii;
  std::string method = "spectral";
  std::optional<double> t_max;
  // continuity
  int samples = 50;
  unsigned long seed = 1;
};

/// Rejects inconsistent configurations before any computation.
void validate(const RunConfig& cfg);
PacketModel build_model(const RunConfig& cfg);

/// Parses "start:stop:n" into n evenly spaced values (inclusive).
std::vector<double> parse_range(const std::string& text);

/// Exit codes: 0 success, 1 invalid input, 2 numerical convergence failure.
/// Errors go to `err` as "error[Code]: message".
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace wavekit::cli

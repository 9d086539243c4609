#include "wavekit/field_grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>

#include "wavekit/error.hpp"
#include "wavekit/parallel.hpp"

namespace wavekit {

namespace {

constexpr double kPi = std::numbers::pi;

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftBuffer {
public:
  explicit FftBuffer(int n) : n_(n) {
    const std::size_t size = static_cast<std::size_t>(n) * n * n;
    data_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size));
    if (!data_) fail(ErrorCode::IoError, "fftw_malloc failed");
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_3d(n, n, n, data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftBuffer() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(data_);
  }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;

  cplx* data() { return reinterpret_cast<cplx*>(data_); }
  void execute() { fftw_execute(plan_); }

private:
  int n_;
  fftw_complex* data_ = nullptr;
  fftw_plan plan_ = nullptr;
};

struct GridFields {
  std::vector<double> rho;
  std::vector<Vec3> j;
  std::vector<cplx> psi;
};

double parity(int a) { return (a & 1) ? -1.0 : 1.0; }

// Exact superposition on the box by FFT synthesis. With k = p + q and
// x = c + y,
//   psi = e^{i(p.c - E_p t)} e^{i p.y} (1/V) sum_q F(q) e^{i q.y},
//   F(q) = phi(p + q) e^{-i(E - E_p) t + i q.c} / (2E),
// the q grid being the reciprocal lattice of the box. Derivatives multiply F
// by -iE (time) and i(p + q) (space); the leading phases cancel in rho and j.
GridFields synthesize(const PacketModel& model, double t, const GridBox& box, bool want_psi) {
  const Kinematics& kin = model.kin();
  const int n = box.n;
  const std::size_t total = box.size();
  Vec3 dq;
  for (int a = 0; a < 3; ++a) dq[a] = kPi / box.half[a];
  auto q_of = [&](int i, int j, int l) {
    return Vec3{(i - n / 2) * dq.x, (j - n / 2) * dq.y, (l - n / 2) * dq.z};
  };

  std::vector<cplx> base(total);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
          const Vec3 q = q_of(static_cast<int>(i), j, l);
          const Vec3 k = kin.p + q;
          const double en = on_shell_energy(kin.m, k);
          const double de = (norm2(k) - norm2(kin.p)) / (en + kin.E_p);
          const double amp = model.amplitude(k);
          const double sign = parity(static_cast<int>(i) + j + l);
          base[(i * n + j) * n + l] = std::polar(sign * amp / (2.0 * en), dot(q, box.center) - de * t);
        }
      }
    }
  });

  const double volume = 8.0 * box.half.x * box.half.y * box.half.z;
  const double global = parity(3 * (n / 2)) / volume;
  FftBuffer buf(n);
  cplx* d = buf.data();

  // mode: 0 = psi, 1 = d/dt, 2..4 = d/dx_a
  auto transform = [&](int mode) {
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        for (int j = 0; j < n; ++j) {
          for (int l = 0; l < n; ++l) {
            const std::size_t idx = (i * n + j) * n + l;
            cplx mult = 1.0;
            if (mode == 1) {
              const Vec3 k = kin.p + q_of(static_cast<int>(i), j, l);
              mult = cplx{0.0, -on_shell_energy(kin.m, k)};
            } else if (mode >= 2) {
              const Vec3 q = q_of(static_cast<int>(i), j, l);
              mult = cplx{0.0, kin.p[mode - 2] + q[mode - 2]};
            }
            d[idx] = base[idx] * mult;
          }
        }
      }
    });
    buf.execute();
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        for (int j = 0; j < n; ++j) {
          for (int l = 0; l < n; ++l) {
            const std::size_t idx = (i * n + j) * n + l;
            d[idx] *= global * parity(static_cast<int>(i) + j + l);
          }
        }
      }
    });
  };

  GridFields out;
  transform(0);
  std::vector<cplx> envelope(d, d + total);
  out.rho.assign(total, 0.0);
  out.j.assign(total, Vec3{});

  transform(1);
  for (std::size_t idx = 0; idx < total; ++idx) {
    out.rho[idx] = -2.0 * std::imag(std::conj(envelope[idx]) * d[idx]);
  }
  for (int a = 0; a < 3; ++a) {
    transform(2 + a);
    for (std::size_t idx = 0; idx < total; ++idx) {
      out.j[idx][a] = 2.0 * std::imag(std::conj(envelope[idx]) * d[idx]);
    }
  }
  if (want_psi) {
    out.psi.resize(total);
    const cplx lead = std::polar(1.0, dot(kin.p, box.center) - kin.E_p * t);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
          const std::size_t idx = (static_cast<std::size_t>(i) * n + j) * n + l;
          const Vec3 y = box.point(i, j, l) - box.center;
          out.psi[idx] = lead * std::polar(1.0, dot(kin.p, y)) * envelope[idx];
        }
      }
    }
  }
  return out;
}

GridFields pointwise(const PacketModel& model, double t, const GridBox& box, PsiMethod method, bool want_psi) {
  const int n = box.n;
  GridFields out;
  out.rho.assign(box.size(), 0.0);
  out.j.assign(box.size(), Vec3{});
  if (want_psi) out.psi.assign(box.size(), cplx{});
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
          const std::size_t idx = (i * n + j) * n + l;
          const FluxDensity4 f = flux4(model, {t, box.point(static_cast<int>(i), j, l), Frame::Lab}, method);
          out.rho[idx] = f.rho;
          out.j[idx] = f.j;
          if (want_psi) out.psi[idx] = f.psi;
        }
      }
    }
  });
  return out;
}

GridFields compute(const PacketModel& model, double t, const GridBox& box, PsiMethod method, bool want_psi) {
  if (box.n < 4 || box.n % 2 != 0) {
    fail(ErrorCode::InvalidArgument, "grid size must be even and >= 4");
  }
  if (method == PsiMethod::Quadrature) {
    return synthesize(model, t, box, want_psi);
  }
  return pointwise(model, t, box, method, want_psi);
}

GridMoments reduce(const GridFields& f, const GridBox& box, double t) {
  const int n = box.n;
  const double dv = box.cell_volume();
  GridMoments g;
  g.t = t;
  g.n = n;
  double s0 = 0.0;
  Vec3 s1, s2, flux;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        const std::size_t idx = (static_cast<std::size_t>(i) * n + j) * n + l;
        const double r = f.rho[idx];
        const Vec3 y = box.point(i, j, l) - box.center;
        s0 += r;
        for (int a = 0; a < 3; ++a) {
          s1[a] += r * y[a];
          s2[a] += r * y[a] * y[a];
        }
        flux += f.j[idx];
        g.rho_peak = std::max(g.rho_peak, r);
        g.rho_min = std::min(g.rho_min, r);
      }
    }
  }
  const double floor = 1e-6 * g.rho_peak;
  for (std::size_t idx = 0; idx < f.rho.size(); ++idx) {
    if (f.rho[idx] > floor) {
      g.max_j_excess = std::max(g.max_j_excess, norm(f.j[idx]) / f.rho[idx] - 1.0);
    }
  }
  g.norm = s0 * dv;
  g.flux_integral = flux * dv;
  for (int a = 0; a < 3; ++a) {
    const double mean = s1[a] / s0;
    g.mean_x[a] = box.center[a] + mean;
    g.var_axis[a] = s2[a] / s0 - mean * mean;
  }
  g.var_x = g.var_axis.x + g.var_axis.y + g.var_axis.z;
  return g;
}

} // namespace

Vec3 GridBox::point(int i, int j, int l) const {
  return center + Vec3{(i - n / 2) * spacing(0), (j - n / 2) * spacing(1), (l - n / 2) * spacing(2)};
}

GridBox trajectory_box(const MomentsReport& m, double t, const GridOptions& opt) {
  GridBox box;
  box.n = opt.n;
  box.center = trajectory(m, t);
  box.half = opt.extent_sigmas * spatial_widths(m, t);
  return box;
}

std::vector<FluxDensity4> sample_field(const PacketModel& model, double t, const GridBox& box, PsiMethod method) {
  const GridFields f = compute(model, t, box, method, true);
  std::vector<FluxDensity4> out(box.size());
  const int n = box.n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        const std::size_t idx = (static_cast<std::size_t>(i) * n + j) * n + l;
        out[idx] = {f.rho[idx], f.j[idx], f.psi[idx], {t, box.point(i, j, l), Frame::Lab}};
      }
    }
  }
  return out;
}

GridMoments measure_grid_moments(const PacketModel& model, double t, const GridOptions& opt,
                                 const MomentsReport* known) {
  const MomentsReport mr = known ? *known : moments(model);
  GridBox box = trajectory_box(mr, t, opt);
  GridMoments g = reduce(compute(model, t, box, opt.method, false), box, t);
  if (!opt.estimate_error) return g;

  auto relative = [](const GridMoments& a, const GridMoments& b) { return std::abs(a.var_x - b.var_x) / a.var_x; };
  // Box size: grow at fixed spacing until the variance settles.
  GridMoments wide_diff = g;
  bool compared = false;
  for (;;) {
    GridBox wide = box;
    wide.n = 2 * static_cast<int>(std::lround(0.75 * box.n));
    wide.half = 1.5 * box.half;
    if (wide.n > std::max(opt.max_n, opt.n)) break;
    const GridMoments w = reduce(compute(model, t, wide, opt.method, false), wide, t);
    const bool settled = relative(w, g) <= 0.25 * opt.max_rel_error;
    wide_diff = g;
    compared = true;
    box = wide;
    g = w;
    if (settled) break;
  }
  if (!compared) {
    // No room to grow: compare against a box shrunk by 1.5x instead.
    GridBox inner = box;
    inner.n = std::max(4, 2 * static_cast<int>(std::lround(box.n / 3.0)));
    inner.half = (static_cast<double>(inner.n) / box.n) * box.half;
    wide_diff = reduce(compute(model, t, inner, opt.method, false), inner, t);
  }
  // Resolution: same box, fewer points.
  GridBox coarse = box;
  coarse.n = std::max(8, 2 * static_cast<int>(std::lround(0.375 * box.n)));
  const GridMoments c = reduce(compute(model, t, coarse, opt.method, false), coarse, t);
  g.norm_err = std::max(std::abs(g.norm - c.norm), std::abs(g.norm - wide_diff.norm));
  g.mean_err = std::max(norm(g.mean_x - c.mean_x), norm(g.mean_x - wide_diff.mean_x));
  g.var_err = std::max(std::abs(g.var_x - c.var_x), std::abs(g.var_x - wide_diff.var_x));
  if (g.var_err > opt.max_rel_error * std::abs(g.var_x)) {
    fail(ErrorCode::GridTooCoarse, "grid variance changed by " + std::to_string(g.var_err / g.var_x) +
                                       " (relative) against a coarser or smaller grid");
  }
  return g;
}

void write_field_csv(std::ostream& out, const std::vector<FluxDensity4>& samples) {
  char line[512];
  out << "t,x,y,z,rho,jx,jy,jz,re_psi,im_psi\n";
  for (const auto& s : samples) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.at.t,
                  s.at.x.x, s.at.x.y, s.at.x.z, s.rho, s.j.x, s.j.y, s.j.z, s.psi.real(), s.psi.imag());
    out << line;
  }
}

} // namespace wavekit

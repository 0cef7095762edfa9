#include "sdfdiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>

#include "sdfdiff/loss.hpp"
#include "sdfdiff/shade.hpp"

namespace sdfdiff {

namespace {

const Vec3 kOrigin{-0.5, -0.5, -0.5};

struct NamedGrid {
  std::string name;
  SdfGrid grid;
};

void add_noise(SdfGrid& grid, double amplitude, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (double& v : grid.values()) v += u(rng);
}

void record(GradcheckFamily& fam, double analytic, double fd, const GradcheckConfig& cfg, double rel_tol) {
  ++fam.checked;
  const double scale = std::max(std::abs(analytic), std::abs(fd));
  const double err = std::abs(analytic - fd);
  if (scale > cfg.small_grad) {
    fam.max_rel_error = std::max(fam.max_rel_error, err / scale);
    if (err > rel_tol * scale) {
      if (err > cfg.abs_tol) {
        fam.pass = false;
      } else {
        ++fam.floor_accepted;
      }
    }
  } else {
    fam.max_abs_error = std::max(fam.max_abs_error, err);
    if (err > cfg.abs_tol) fam.pass = false;
  }
}

double central_difference(SdfGrid& grid, std::size_t flat, double step, const std::function<double()>& f) {
  double& v = grid.values()[flat];
  const double saved = v;
  v = saved + step;
  const double up = f();
  v = saved - step;
  const double down = f();
  v = saved;
  return (up - down) / (2.0 * step);
}

void check_pixels(NamedGrid& ng, int n_pixels, const GradcheckConfig& cfg, GradcheckFault fault, std::mt19937_64& rng,
                  GradcheckFamily& fam, GradcheckFamily& tape_fam, long& pixels) {
  SdfGrid& grid = ng.grid;
  const auto rig = canonical_rig(grid.center(), 0.5 * grid.extent(), 2.0, std::acos(-1.0) / 4.0, cfg.image_resolution);
  const TraceParams trace = TraceParams::for_grid(grid);
  std::uniform_int_distribution<int> pick_cam(0, static_cast<int>(rig.size()) - 1);
  std::uniform_int_distribution<int> pick_px(0, cfg.image_resolution - 1);
  int done = 0;
  for (long attempt = 0; done < n_pixels && attempt < 200L * n_pixels + 1000; ++attempt) {
    const Camera& cam = rig[static_cast<std::size_t>(pick_cam(rng))];
    const Ray ray = generate_ray(cam, pick_px(rng), pick_px(rng));
    const HitRecord hit = sphere_trace(grid, ray, trace);
    if (!hit.hit) continue;
    const Light light = headlight(cam);
    PixelTape tape = shade_pixel(hit, grid, light, ray);
    // Pixels at the clamp of the diffuse term have no usable derivative.
    if (tape.pixel_value - light.ambient < 1e-3) {
      ++fam.skipped;
      continue;
    }
    const PixelTape ref = shade_pixel_taped(hit, grid, light, ray);
    for (int q = 0; q < tape.count; ++q) {
      double other = 0.0;
      for (int r = 0; r < ref.count; ++r)
        if (ref.sample_indices[r] == tape.sample_indices[q]) other = ref.sample_grads[r];
      record(tape_fam, tape.sample_grads[q], other, cfg, cfg.rel_tol);
    }
    if (fault == GradcheckFault::kSignFlip && tape.count > 0) tape.sample_grads[0] = -tape.sample_grads[0];
    for (int q = 0; q < tape.count; ++q) {
      const double fd = central_difference(grid, tape.sample_indices[q], cfg.fd_step,
                                           [&] { return shade_value(hit, grid, light, ray); });
      record(fam, tape.sample_grads[q], fd, cfg, cfg.rel_tol);
    }
    ++done;
  }
  pixels += done;
}

using GridLossFn = std::function<GridLoss(const SdfGrid&, const BandMask*)>;

// Only the terms of vertices next to q depend on q, so the difference is taken
// over a 5^3 window holding all of them; this keeps cancellation error small.
void check_grid_loss(const SdfGrid& grid, const BandMask* mask, const GridLossFn& loss, const GradcheckConfig& cfg,
                     std::mt19937_64& rng, GradcheckFamily& fam) {
  const GridLoss base = loss(grid, mask);
  const int n = grid.resolution();
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  for (int s = 0; s < cfg.loss_samples; ++s) {
    const std::size_t q = pick(rng);
    const Index3 c = grid.unflatten(q);
    const Index3 lo{std::clamp(c.i - 2, 0, n - 5), std::clamp(c.j - 2, 0, n - 5), std::clamp(c.k - 2, 0, n - 5)};
    SdfGrid window(5, grid.vertex_position(lo.i, lo.j, lo.k), grid.spacing());
    BandMask wmask{5, std::vector<std::uint8_t>(window.size(), 1)};
    for (int k = 0; k < 5; ++k)
      for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i) {
          window.at(i, j, k) = grid.at(lo.i + i, lo.j + j, lo.k + k);
          if (mask) wmask.on[window.index(i, j, k)] = mask->on[grid.index(lo.i + i, lo.j + j, lo.k + k)];
        }
    const std::size_t wq = window.index(c.i - lo.i, c.j - lo.j, c.k - lo.k);
    const double fd =
        central_difference(window, wq, cfg.fd_step, [&] { return loss(window, mask ? &wmask : nullptr).value; });
    record(fam, base.grad[q], fd, cfg, cfg.loss_rel_tol);
  }
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckConfig& cfg, GradcheckFault fault) {
  GradcheckReport report;
  std::mt19937_64 rng(cfg.seed);
  const int n = cfg.grid_resolution;
  const double h = 1.0 / (n - 1);

  std::vector<NamedGrid> grids;
  grids.push_back({"sphere", init_sphere(n, {0, 0, 0}, 0.3, kOrigin, h)});
  grids.push_back({"torus", init_torus(n, {0, 0, 0}, 0.3, 0.12, kOrigin, h)});
  SdfGrid noisy = init_torus(n, {0, 0, 0}, 0.3, 0.12, kOrigin, h);
  add_noise(noisy, 0.2 * h, rng);
  grids.push_back({"noisy-torus", std::move(noisy)});

  GradcheckFamily tape_fam{"pixel/tape-vs-closed-form"};
  if (cfg.n_pixels <= 0) {
    report.vacuous = true;
  } else {
    const int per_grid = (cfg.n_pixels + static_cast<int>(grids.size()) - 1) / static_cast<int>(grids.size());
    for (NamedGrid& g : grids) {
      GradcheckFamily fam{"pixel/" + g.name};
      check_pixels(g, per_grid, cfg, fault, rng, fam, tape_fam, report.pixels);
      report.families.push_back(fam);
    }
    report.families.push_back(tape_fam);
  }

  SdfGrid band_grid = init_sphere(16, {0, 0, 0}, 0.3, kOrigin, 1.0 / 15);
  add_noise(band_grid, 0.3 / 15, rng);
  const BandMask mask = narrow_band_mask(band_grid, 1.6);
  SdfGrid random(16, kOrigin, 1.0 / 15);
  add_noise(random, 1.0 / 15, rng);

  struct LossCase {
    std::string name;
    const SdfGrid* grid;
    const BandMask* mask;
    GridLossFn loss;
  };
  const GridLossFn eik_abs = [](const SdfGrid& g, const BandMask* m) { return eikonal_loss(g, EikonalForm::kAbs, m); };
  const GridLossFn eik_sq = [](const SdfGrid& g, const BandMask* m) { return eikonal_loss(g, EikonalForm::kSquared, m); };
  const GridLossFn geo = [](const SdfGrid& g, const BandMask* m) { return geometry_loss(g, m); };
  const std::vector<LossCase> cases = {
      {"eikonal/abs", &random, nullptr, eik_abs},        {"eikonal/squared", &random, nullptr, eik_sq},
      {"geometry", &random, nullptr, geo},               {"eikonal/masked", &band_grid, &mask, eik_abs},
      {"geometry/masked", &band_grid, &mask, geo},
  };
  for (const LossCase& c : cases) {
    GradcheckFamily fam{c.name};
    check_grid_loss(*c.grid, c.mask, c.loss, cfg, rng, fam);
    report.families.push_back(fam);
  }

  for (const GradcheckFamily& f : report.families) report.pass = report.pass && f.pass;
  return report;
}

void print_gradcheck_report(std::ostream& out, const GradcheckReport& report) {
  const auto flags = out.flags();
  out << std::scientific << std::setprecision(3);
  if (report.vacuous) out << "warning: no pixels requested; pixel gradients not checked\n";
  for (const GradcheckFamily& f : report.families) {
    out << std::left << std::setw(28) << f.name << " checked " << std::setw(7) << f.checked << " skipped "
        << std::setw(5) << f.skipped << " floor " << std::setw(3) << f.floor_accepted << " max_rel " << f.max_rel_error << " max_abs_small " << f.max_abs_error << "  "
        << (f.pass ? "PASS" : "FAIL") << '\n';
  }
  out << "pixels " << report.pixels << "  " << (report.pass ? "PASS" : "FAIL") << '\n';
  out.flags(flags);
}

}  // namespace sdfdiff

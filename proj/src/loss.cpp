#include "sdfdiff/loss.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "sdfdiff/errors.hpp"

namespace sdfdiff {

ImageLoss image_loss(const Image& rendered, const Image& target) {
  if (rendered.width != target.width || rendered.height != target.height) {
    throw InvalidArgument("image_loss: dimension mismatch " + std::to_string(rendered.width) + "x" +
                          std::to_string(rendered.height) + " vs " + std::to_string(target.width) + "x" +
                          std::to_string(target.height));
  }
  ImageLoss out;
  out.dpixel = Image(rendered.width, rendered.height);
  for (std::size_t q = 0; q < rendered.size(); ++q) {
    const double r = rendered.pixels[q] - target.pixels[q];
    out.value += r * r;
    out.dpixel.pixels[q] = 2.0 * r;
  }
  return out;
}

void accumulate_image_gradient(const RenderedView& view, const Image& dpixel, GradientBuffer& grad) {
  for (std::size_t t = 0; t < view.tapes.size(); ++t) {
    const double up = dpixel.pixels[view.tape_pixel[t]];
    if (up == 0.0) continue;
    const PixelTape& tape = view.tapes[t];
    for (int e = 0; e < tape.count; ++e) grad[tape.sample_indices[e]] += up * tape.sample_grads[e];
  }
}

std::size_t BandMask::count() const { return static_cast<std::size_t>(std::count(on.begin(), on.end(), 1)); }

BandMask narrow_band_mask(const SdfGrid& grid, double mu) {
  if (!(mu > 0.0)) throw InvalidArgument("narrow band width mu must be positive");
  BandMask m{grid.resolution(), std::vector<std::uint8_t>(grid.size())};
  const double band = mu * grid.spacing();
  const auto vals = grid.values();
  for (std::size_t q = 0; q < vals.size(); ++q) m.on[q] = std::abs(vals[q]) <= band ? 1 : 0;
  return m;
}

BandMask full_mask(const SdfGrid& grid) { return {grid.resolution(), std::vector<std::uint8_t>(grid.size(), 1)}; }

namespace {

void check_interior(const SdfGrid& grid, const BandMask* mask) {
  if (grid.resolution() < 3) throw InvalidArgument("grid losses need resolution >= 3");
  if (mask && mask->resolution != grid.resolution()) throw InvalidArgument("mask shape differs from grid");
}

template <typename Fn>
void for_each_interior(const SdfGrid& grid, const BandMask* mask, Fn&& fn) {
  const int n = grid.resolution();
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        const std::size_t q = grid.index(i, j, k);
        if (mask && !(*mask)[q]) continue;
        fn(i, j, k, q);
      }
}

}  // namespace

GridLoss eikonal_loss(const SdfGrid& grid, EikonalForm form, const BandMask* mask) {
  check_interior(grid, mask);
  GridLoss out{0.0, GradientBuffer(grid)};
  const double inv2h = 1.0 / (2.0 * grid.spacing());
  const std::size_t sx = 1, sy = static_cast<std::size_t>(grid.resolution()), sz = sy * sy;
  const auto d = grid.values();
  auto& gb = out.grad;
  for_each_interior(grid, mask, [&](int, int, int, std::size_t q) {
    const Vec3 g{(d[q + sx] - d[q - sx]) * inv2h, (d[q + sy] - d[q - sy]) * inv2h, (d[q + sz] - d[q - sz]) * inv2h};
    const double len2 = dot(g, g);
    Vec3 dg;
    if (form == EikonalForm::kAbs) {
      const double len = std::sqrt(len2);
      const double r = len - 1.0;
      out.value += r * r;
      if (len > 0.0) dg = (2.0 * r / len) * g;
    } else {
      const double r = 1.0 - len2;
      out.value += r * r;
      dg = (-4.0 * r) * g;
    }
    gb[q + sx] += dg.x * inv2h;
    gb[q - sx] -= dg.x * inv2h;
    gb[q + sy] += dg.y * inv2h;
    gb[q - sy] -= dg.y * inv2h;
    gb[q + sz] += dg.z * inv2h;
    gb[q - sz] -= dg.z * inv2h;
  });
  return out;
}

GridLoss geometry_loss(const SdfGrid& grid, const BandMask* mask) {
  check_interior(grid, mask);
  GridLoss out{0.0, GradientBuffer(grid)};
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  const std::size_t sx = 1, sy = static_cast<std::size_t>(grid.resolution()), sz = sy * sy;
  const auto d = grid.values();
  auto& gb = out.grad;
  for_each_interior(grid, mask, [&](int, int, int, std::size_t q) {
    const double lap =
        (d[q + sx] + d[q - sx] + d[q + sy] + d[q - sy] + d[q + sz] + d[q - sz] - 6.0 * d[q]) * inv_h2;
    out.value += lap * lap;
    const double c = 2.0 * lap * inv_h2;
    gb[q + sx] += c;
    gb[q - sx] += c;
    gb[q + sy] += c;
    gb[q - sy] += c;
    gb[q + sz] += c;
    gb[q - sz] += c;
    gb[q] -= 6.0 * c;
  });
  return out;
}

TotalLoss regularizer_loss(const SdfGrid& grid, const LossWeights& weights) {
  TotalLoss out{{}, GradientBuffer(grid)};
  const BandMask mask = weights.use_mask ? narrow_band_mask(grid, weights.mu) : full_mask(grid);
  if (weights.lambda_reg != 0.0) {
    GridLoss reg = eikonal_loss(grid, weights.eikonal_form, &mask);
    out.report.reg_loss = reg.value;
    out.grad.add_scaled(reg.grad, weights.lambda_reg);
  }
  if (weights.lambda_geo != 0.0) {
    GridLoss geo = geometry_loss(grid, &mask);
    out.report.geo_loss = geo.value;
    out.grad.add_scaled(geo.grad, weights.lambda_geo);
  }
  out.report.total = weights.lambda_reg * out.report.reg_loss + weights.lambda_geo * out.report.geo_loss;
  return out;
}

TotalLoss total_loss(const SdfGrid& grid, const std::vector<RenderedView>& rendered, const std::vector<Image>& targets,
                     const LossWeights& weights) {
  if (rendered.size() != targets.size()) {
    throw InvalidArgument("total_loss: " + std::to_string(rendered.size()) + " rendered views vs " +
                          std::to_string(targets.size()) + " targets");
  }
  TotalLoss out = regularizer_loss(grid, weights);
  for (std::size_t v = 0; v < rendered.size(); ++v) {
    const ImageLoss il = image_loss(rendered[v].image, targets[v]);
    out.report.per_view_image_loss.push_back(il.value);
    out.report.image_loss += il.value;
    accumulate_image_gradient(rendered[v], il.dpixel, out.grad);
  }
  out.report.total += out.report.image_loss;
  return out;
}

void write_loss_csv_header(std::ostream& out) { out << "iteration,stage,view,image_loss,reg_loss,geo_loss,total\n"; }

void write_loss_csv_row(std::ostream& out, int iteration, int stage, int view_id, const LossReport& report) {
  const auto flags = out.flags();
  const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
  out << iteration << ',' << stage << ',' << view_id << ',' << report.image_loss << ',' << report.reg_loss << ','
      << report.geo_loss << ',' << report.total << '\n';
  out.flags(flags);
  out.precision(prec);
}

}  // namespace sdfdiff

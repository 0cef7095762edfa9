#include "sdfdiff/shade.hpp"

#include <cmath>

#include "sdfdiff/errors.hpp"
#include "sdfdiff/parallel.hpp"
#include "sdfdiff/tape.hpp"

namespace sdfdiff {

namespace {

constexpr double kMinGradientNorm = 1e-12;

// One component of a vertex gradient: coef * (d[plus] - d[minus]).
struct AxisStencil {
  std::size_t plus;
  std::size_t minus;
  double coef;
};

std::array<AxisStencil, 3> gradient_stencil(const SdfGrid& grid, int i, int j, int k) {
  const int n = grid.resolution();
  const double h = grid.spacing();
  std::array<AxisStencil, 3> st{};
  const int c[3] = {i, j, k};
  for (int a = 0; a < 3; ++a) {
    int lo = c[a] - 1, hi = c[a] + 1;
    double coef = 1.0 / (2.0 * h);
    if (c[a] == 0) {
      lo = 0, hi = 1, coef = 1.0 / h;
    } else if (c[a] == n - 1) {
      lo = n - 2, hi = n - 1, coef = 1.0 / h;
    }
    int p[3] = {i, j, k}, m[3] = {i, j, k};
    p[a] = hi;
    m[a] = lo;
    st[a] = {grid.index(p[0], p[1], p[2]), grid.index(m[0], m[1], m[2]), coef};
  }
  return st;
}

// Everything stage two needs about the fixed hit cell.
struct LocalFrame {
  std::array<std::size_t, 8> corner_index{};
  std::array<double, 8> weights_s{};
  std::array<std::array<AxisStencil, 3>, 8> stencils{};
};

LocalFrame local_frame(const SdfGrid& grid, const HitRecord& hit) {
  LocalFrame f;
  f.corner_index = cell_corner_indices(grid, hit.cell);
  f.weights_s = locate_in_cell(grid, hit.s, hit.cell).weights;
  for (int m = 0; m < 8; ++m) {
    f.stencils[m] = gradient_stencil(grid, hit.cell.i + (m & 1), hit.cell.j + ((m >> 1) & 1),
                                     hit.cell.k + ((m >> 2) & 1));
  }
  return f;
}

Vec3 light_vector(const Light& light) { return -light.direction; }

// Maps grid indices inside the 4x4x4 block onto slots 0..63.
class Block {
 public:
  Block(const SdfGrid& grid, Index3 cell) : grid_(grid), base_{cell.i - 1, cell.j - 1, cell.k - 1} {}

  int slot(std::size_t flat) const {
    const Index3 v = grid_.unflatten(flat);
    return (v.i - base_.i) + 4 * (v.j - base_.j) + 16 * (v.k - base_.k);
  }

  std::size_t flat(int slot) const { return grid_.index(base_.i + slot % 4, base_.j + (slot / 4) % 4, base_.k + slot / 16); }

  bool in_grid(int slot) const {
    const int n = grid_.resolution();
    const int x = base_.i + slot % 4, y = base_.j + (slot / 4) % 4, z = base_.k + slot / 16;
    return x >= 0 && y >= 0 && z >= 0 && x < n && y < n && z < n;
  }

 private:
  const SdfGrid& grid_;
  Index3 base_;
};

PixelTape compact(const Block& block, const std::array<double, 64>& grads, double value) {
  PixelTape tape;
  tape.pixel_value = value;
  for (int q = 0; q < 64; ++q) {
    if (grads[q] == 0.0 || !block.in_grid(q)) continue;
    tape.sample_indices[tape.count] = block.flat(q);
    tape.sample_grads[tape.count] = grads[q];
    ++tape.count;
  }
  return tape;
}

void require_hit(const HitRecord& hit) {
  if (!hit.hit) throw InvalidArgument("shade_pixel requires a hit record");
}

}  // namespace

Vec3 intersection_point(const Vec3& s, const Vec3& v, const SdfGrid& grid) { return s + trilinear(grid, s) * v; }

Vec3 surface_normal_in_cell(const SdfGrid& grid, const Vec3& p, Index3 cell) {
  const CellSample cs = locate_in_cell(grid, p, cell);
  Vec3 g;
  for (int m = 0; m < 8; ++m) {
    g += cs.weights[m] * vertex_gradient(grid, cell.i + (m & 1), cell.j + ((m >> 1) & 1), cell.k + ((m >> 2) & 1));
  }
  const double len = norm(g);
  if (!(len >= kMinGradientNorm)) throw DegenerateNormal("interpolated SDF gradient vanishes");
  return g / len;
}

Vec3 surface_normal(const SdfGrid& grid, const Vec3& p) {
  if (!grid.contains(p, 1e-9 * grid.spacing())) throw OutOfDomain("surface_normal: point outside the grid");
  return surface_normal_in_cell(grid, p, grid.cell_of(p));
}

double shade_value(const HitRecord& hit, const SdfGrid& grid, const Light& light, const Ray& view) {
  require_hit(hit);
  const LocalFrame f = local_frame(grid, hit);
  const auto vals = grid.values();
  double fs = 0.0;
  for (int m = 0; m < 8; ++m) fs += f.weights_s[m] * vals[f.corner_index[m]];
  const Vec3 p = hit.s + fs * view.direction;
  const auto wp = locate_in_cell(grid, p, hit.cell).weights;
  Vec3 g;
  for (int m = 0; m < 8; ++m)
    for (int a = 0; a < 3; ++a) {
      const AxisStencil& st = f.stencils[m][a];
      g[a] += wp[m] * st.coef * (vals[st.plus] - vals[st.minus]);
    }
  const double len = norm(g);
  if (!(len >= kMinGradientNorm)) return light.ambient;
  const double ndl = dot(g / len, light_vector(light));
  return light.ambient + light.albedo * light.intensity * std::max(0.0, ndl);
}

PixelTape shade_pixel(const HitRecord& hit, const SdfGrid& grid, const Light& light, const Ray& view) {
  require_hit(hit);
  const LocalFrame f = local_frame(grid, hit);
  const Block block(grid, hit.cell);
  const auto vals = grid.values();
  const double h = grid.spacing();
  const Vec3& v = view.direction;

  double fs = 0.0;
  for (int m = 0; m < 8; ++m) fs += f.weights_s[m] * vals[f.corner_index[m]];
  const Vec3 p = hit.s + fs * v;
  const CellSample at_p = locate_in_cell(grid, p, hit.cell);
  const auto& wp = at_p.weights;
  const auto dwp = trilinear_weight_derivatives(at_p.local);

  std::array<Vec3, 8> corner_grad{};
  Vec3 g;
  for (int m = 0; m < 8; ++m) {
    for (int a = 0; a < 3; ++a) {
      const AxisStencil& st = f.stencils[m][a];
      corner_grad[m][a] = st.coef * (vals[st.plus] - vals[st.minus]);
    }
    g += wp[m] * corner_grad[m];
  }

  std::array<double, 64> grads{};
  const double len = norm(g);
  if (!(len >= kMinGradientNorm)) return compact(block, grads, light.ambient);
  const Vec3 n = g / len;
  const Vec3 l = light_vector(light);
  const double ndl = dot(n, l);
  const double k = light.albedo * light.intensity;
  if (ndl <= 0.0) return compact(block, grads, light.ambient);
  const double value = light.ambient + k * ndl;

  // d pixel / d g, through the normalisation.
  const Vec3 dg = (k / len) * (l - ndl * n);

  // Through the vertex gradients at the fixed interpolation weights.
  for (int m = 0; m < 8; ++m)
    for (int a = 0; a < 3; ++a) {
      const AxisStencil& st = f.stencils[m][a];
      const double c = dg[a] * wp[m] * st.coef;
      grads[block.slot(st.plus)] += c;
      grads[block.slot(st.minus)] -= c;
    }

  // Through p = s + f(s) v moving the interpolation weights:
  // d pixel / d p_b = sum_a dg_a * sum_m g_m,a * dw_m/du_b / h.
  Vec3 dp;
  for (int m = 0; m < 8; ++m) {
    const double proj = dot(dg, corner_grad[m]);
    dp += (proj / h) * dwp[m];
  }
  const double dfs = dot(dp, v);
  for (int m = 0; m < 8; ++m) grads[block.slot(f.corner_index[m])] += dfs * f.weights_s[m];

  return compact(block, grads, value);
}

PixelTape shade_pixel_taped(const HitRecord& hit, const SdfGrid& grid, const Light& light, const Ray& view) {
  require_hit(hit);
  const LocalFrame f = local_frame(grid, hit);
  const Block block(grid, hit.cell);
  const auto vals = grid.values();
  const double h = grid.spacing();

  ad::Tape tape;
  std::array<ad::Var, 64> leaf;
  std::array<bool, 64> used{};
  auto sample = [&](std::size_t flat) {
    const int q = block.slot(flat);
    if (!used[q]) {
      leaf[q] = tape.input(vals[flat]);
      used[q] = true;
    }
    return leaf[q];
  };

  ad::Var fs = tape.constant(0.0);
  for (int m = 0; m < 8; ++m) fs = fs + f.weights_s[m] * sample(f.corner_index[m]);

  // Local coordinates of p in the fixed cell, as functions of fs.
  const Vec3 c0 = grid.vertex_position(hit.cell.i, hit.cell.j, hit.cell.k);
  std::array<ad::Var, 3> u{};
  for (int a = 0; a < 3; ++a) u[a] = fs * (view.direction[a] / h) + (hit.s[a] - c0[a]) / h;

  std::array<ad::Var, 3> g{tape.constant(0.0), tape.constant(0.0), tape.constant(0.0)};
  const ad::Var one = tape.constant(1.0);
  for (int m = 0; m < 8; ++m) {
    ad::Var w = one;
    for (int a = 0; a < 3; ++a) w = w * (((m >> a) & 1) ? u[a] : one - u[a]);
    for (int a = 0; a < 3; ++a) {
      const AxisStencil& st = f.stencils[m][a];
      g[a] = g[a] + w * ((sample(st.plus) - sample(st.minus)) * st.coef);
    }
  }

  const ad::Var len = ad::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
  std::array<double, 64> grads{};
  if (!(len.value() >= kMinGradientNorm)) return compact(block, grads, light.ambient);
  const Vec3 l = light_vector(light);
  const ad::Var ndl = (g[0] * l.x + g[1] * l.y + g[2] * l.z) / len;
  const ad::Var pixel = ad::relu(ndl) * (light.albedo * light.intensity) + light.ambient;

  const auto adj = tape.gradient(pixel);
  for (int q = 0; q < 64; ++q)
    if (used[q]) grads[q] = adj[leaf[q].id()];
  return compact(block, grads, pixel.value());
}

RenderedView render(const SdfGrid& grid, const Camera& camera, const Light& light, bool with_gradients,
                    const TraceParams& trace) {
  light.validate();
  const int w = camera.width(), h = camera.height();
  RenderedView out;
  out.image = Image(w, h, 0.0);
  std::vector<std::vector<PixelTape>> row_tapes(with_gradients ? h : 0);
  std::vector<std::vector<std::size_t>> row_pixels(with_gradients ? h : 0);

  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const Ray ray = generate_ray(camera, x, y);
      const HitRecord hit = sphere_trace(grid, ray, trace);
      if (!hit.hit) continue;
      if (with_gradients) {
        PixelTape tape = shade_pixel(hit, grid, light, ray);
        out.image.at(x, y) = tape.pixel_value;
        row_tapes[y].push_back(tape);
        row_pixels[y].push_back(static_cast<std::size_t>(y) * w + x);
      } else {
        out.image.at(x, y) = shade_value(hit, grid, light, ray);
      }
    }
  });

  for (int y = 0; with_gradients && y < h; ++y) {
    out.tapes.insert(out.tapes.end(), row_tapes[y].begin(), row_tapes[y].end());
    out.tape_pixel.insert(out.tape_pixel.end(), row_pixels[y].begin(), row_pixels[y].end());
  }
  return out;
}

}  // namespace sdfdiff

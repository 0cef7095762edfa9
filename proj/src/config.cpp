#include "sdfdiff/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "sdfdiff/errors.hpp"
#include "sdfdiff/eval.hpp"

namespace sdfdiff {

using nlohmann::json;

namespace {

double to_degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

// Reads the keys of one JSON object, remembering which were consumed so the
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw InvalidArgument(where() + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgument(name(key) + ": " + e.what());
    }
  }

  void read_vec(const char* key, Vec3& out) {
    std::vector<double> v;
    const bool present = node_.contains(key);
    read(key, v);
    if (!present) return;
    if (v.size() != 3) throw InvalidArgument(name(key) + ": expected 3 numbers");
    out = {v[0], v[1], v[2]};
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.contains(it.key())) throw InvalidArgument("unknown config key: " + name(it.key()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string form_name(EikonalForm f) { return f == EikonalForm::kAbs ? "abs" : "squared"; }

EikonalForm parse_form(const std::string& s) {
  if (s == "abs") return EikonalForm::kAbs;
  if (s == "squared") return EikonalForm::kSquared;
  throw InvalidArgument("loss.eikonal_form: expected \"abs\" or \"squared\", got \"" + s + "\"");
}

void read_scene(Section& sec, MultiResConfig& c) {
  sec.read_vec("bbox_origin", c.bbox_origin);
  sec.read("bbox_extent", c.bbox_extent);
  sec.read("camera_distance", c.camera_distance);
  double fov_deg = to_degrees(c.fov);
  sec.read("fov_degrees", fov_deg);
  c.fov = to_radians(fov_deg);
  sec.read("max_image_res", c.max_image_res);
  if (const json* cams = sec.child("cameras")) {
    if (!cams->is_array()) throw InvalidArgument("scene.cameras: expected an array");
    c.camera_overrides.clear();
    for (std::size_t q = 0; q < cams->size(); ++q) {
      Section cam((*cams)[q], "scene.cameras[" + std::to_string(q) + "]");
      Vec3 pos, at{0, 0, 0}, up{0, 0, 1};
      if (!(*cams)[q].contains("position")) throw InvalidArgument(cam.name("position") + ": required");
      cam.read_vec("position", pos);
      cam.read_vec("look_at", at);
      cam.read_vec("up", up);
      cam.finish();
      try {
        c.camera_overrides.emplace_back(pos, at, up, c.fov, kMinImageRes, kMinImageRes);
      } catch (const InvalidArgument& e) {
        throw InvalidArgument("scene.cameras[" + std::to_string(q) + "]: " + e.what());
      }
    }
  }
  if (const json* light = sec.child("light")) {
    Section l(*light, "scene.light");
    l.read("intensity", c.light_intensity);
    l.read("ambient", c.light_ambient);
    l.read("albedo", c.light_albedo);
    l.finish();
  }
}

void read_loss(Section& sec, LossWeights& w) {
  sec.read("lambda_reg", w.lambda_reg);
  sec.read("lambda_geo", w.lambda_geo);
  sec.read("mu", w.mu);
  sec.read("mask", w.use_mask);
  std::string form = form_name(w.eikonal_form);
  sec.read("eikonal_form", form);
  w.eikonal_form = parse_form(form);
}

void read_optim(Section& sec, MultiResConfig& c) {
  sec.read("grid_resolutions", c.grid_resolutions);
  sec.read_vec("init_center", c.init_center);
  sec.read("init_radius", c.init_radius);
  sec.read("lr", c.adam.lr);
  sec.read("beta1", c.adam.beta1);
  sec.read("beta2", c.adam.beta2);
  sec.read("eps", c.adam.eps);
  sec.read("lr_decay", c.lr_decay);
  sec.read("max_outer_iterations", c.max_outer_iterations);
  sec.read("max_updates_per_stage", c.max_updates_per_stage);
  sec.read("loss_tolerance_factor", c.loss_tolerance_factor);
  sec.read("min_step_factor", c.min_step_factor);
  sec.read("divergence_factor", c.divergence_factor);
  sec.read("keep_best", c.keep_best);
}

void read_target(Section& sec, TargetConfig& t) {
  sec.read("shape", t.shape);
  sec.read_vec("center", t.center);
  sec.read("radius", t.radius);
  sec.read("major_radius", t.major_radius);
  sec.read("minor_radius", t.minor_radius);
  sec.read("resolution", t.resolution);
}

void read_gradcheck(Section& sec, GradcheckConfig& g) {
  sec.read("n_pixels", g.n_pixels);
  sec.read("grid_resolution", g.grid_resolution);
  sec.read("image_resolution", g.image_resolution);
  sec.read("fd_step", g.fd_step);
  sec.read("rel_tol", g.rel_tol);
  sec.read("loss_rel_tol", g.loss_rel_tol);
  sec.read("small_grad", g.small_grad);
  sec.read("abs_tol", g.abs_tol);
  sec.read("loss_samples", g.loss_samples);
}

void read_evaluate(Section& sec, EvaluateConfig& e) {
  sec.read("samples", e.samples);
  sec.read("box_edge", e.box_edge);
}

template <typename Fn>
void read_section(Section& root, const char* key, Fn&& fn) {
  if (const json* node = root.child(key)) {
    Section sec(*node, key);
    fn(sec);
    sec.finish();
  }
}

}  // namespace

void TargetConfig::validate() const {
  if (shape != "torus" && shape != "sphere") {
    throw InvalidArgument("target.shape: expected \"torus\" or \"sphere\", got \"" + shape + "\"");
  }
  if (resolution < 3) throw InvalidArgument("target.resolution must be >= 3");
  if (shape == "sphere" && !(radius > 0.0)) throw InvalidArgument("target.radius must be positive");
  if (shape == "torus" && !(minor_radius > 0.0 && major_radius > minor_radius)) {
    throw InvalidArgument("target radii must satisfy major_radius > minor_radius > 0");
  }
}

SdfGrid TargetConfig::make_grid(const MultiResConfig& scene) const {
  validate();
  const double h = scene.bbox_extent / (resolution - 1);
  if (shape == "sphere") return init_sphere(resolution, center, radius, scene.bbox_origin, h);
  return init_torus(resolution, center, major_radius, minor_radius, scene.bbox_origin, h);
}

void EvaluateConfig::validate() const {
  if (samples < kMinHausdorffSamples) {
    throw InvalidArgument("evaluate.samples must be >= " + std::to_string(kMinHausdorffSamples));
  }
  if (!(box_edge > 0.0)) throw InvalidArgument("evaluate.box_edge must be positive");
}

void RunConfig::validate() const {
  if (threads < 0) throw InvalidArgument("threads must be >= 0");
  if (render_image_res != 0 && render_image_res < 1) throw InvalidArgument("render.image_res must be 0 or positive");
  reconstruct.validate();
  target.validate();
  evaluate.validate();
  if (gradcheck.n_pixels < 0) throw InvalidArgument("gradcheck.n_pixels must be >= 0");
  if (gradcheck.grid_resolution < 5) throw InvalidArgument("gradcheck.grid_resolution must be >= 5");
  if (gradcheck.image_resolution < 1) throw InvalidArgument("gradcheck.image_resolution must be positive");
  if (!(gradcheck.fd_step > 0.0)) throw InvalidArgument("gradcheck.fd_step must be positive");
  if (!(gradcheck.rel_tol > 0.0 && gradcheck.loss_rel_tol > 0.0 && gradcheck.abs_tol >= 0.0 &&
        gradcheck.small_grad >= 0.0)) {
    throw InvalidArgument("gradcheck tolerances must be positive");
  }
  if (gradcheck.loss_samples < 0) throw InvalidArgument("gradcheck.loss_samples must be >= 0");
}

int RunConfig::effective_threads() const {
  if (deterministic) return 1;
  if (threads > 0) return threads;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

RunConfig parse_run_config(const std::string& text, const RunConfig& base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c = base;
  Section root(doc, "");
  root.read("seed", c.seed);
  root.read("threads", c.threads);
  root.read("deterministic", c.deterministic);
  read_section(root, "scene", [&](Section& s) { read_scene(s, c.reconstruct); });
  read_section(root, "loss", [&](Section& s) { read_loss(s, c.reconstruct.weights); });
  read_section(root, "optim", [&](Section& s) { read_optim(s, c.reconstruct); });
  read_section(root, "target", [&](Section& s) { read_target(s, c.target); });
  read_section(root, "render", [&](Section& s) { s.read("image_res", c.render_image_res); });
  read_section(root, "gradcheck", [&](Section& s) { read_gradcheck(s, c.gradcheck); });
  read_section(root, "evaluate", [&](Section& s) { read_evaluate(s, c.evaluate); });
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), base);
}

std::string dump_run_config(const RunConfig& c) {
  const MultiResConfig& r = c.reconstruct;
  json cams = json::array();
  for (const Camera& cam : r.camera_overrides) {
    cams.push_back({{"position", vec_json(cam.position())}, {"look_at", vec_json(cam.look_at())}, {"up", vec_json(cam.up())}});
  }
  json doc;
  doc["seed"] = c.seed;
  doc["threads"] = c.threads;
  doc["deterministic"] = c.deterministic;
  doc["scene"] = {
      {"bbox_origin", vec_json(r.bbox_origin)},
      {"bbox_extent", r.bbox_extent},
      {"camera_distance", r.camera_distance},
      {"fov_degrees", to_degrees(r.fov)},
      {"max_image_res", r.max_image_res},
      {"cameras", cams},
      {"light", {{"intensity", r.light_intensity}, {"ambient", r.light_ambient}, {"albedo", r.light_albedo}}},
  };
  doc["loss"] = {
      {"lambda_reg", r.weights.lambda_reg}, {"lambda_geo", r.weights.lambda_geo},
      {"mu", r.weights.mu},                 {"mask", r.weights.use_mask},
      {"eikonal_form", form_name(r.weights.eikonal_form)},
  };
  doc["optim"] = {
      {"grid_resolutions", r.grid_resolutions},
      {"init_center", vec_json(r.init_center)},
      {"init_radius", r.init_radius},
      {"lr", r.adam.lr},
      {"beta1", r.adam.beta1},
      {"beta2", r.adam.beta2},
      {"eps", r.adam.eps},
      {"lr_decay", r.lr_decay},
      {"max_outer_iterations", r.max_outer_iterations},
      {"max_updates_per_stage", r.max_updates_per_stage},
      {"loss_tolerance_factor", r.loss_tolerance_factor},
      {"min_step_factor", r.min_step_factor},
      {"divergence_factor", r.divergence_factor},
      {"keep_best", r.keep_best},
  };
  doc["target"] = {
      {"shape", c.target.shape},
      {"center", vec_json(c.target.center)},
      {"radius", c.target.radius},
      {"major_radius", c.target.major_radius},
      {"minor_radius", c.target.minor_radius},
      {"resolution", c.target.resolution},
  };
  doc["render"] = {{"image_res", c.render_image_res}};
  const GradcheckConfig& g = c.gradcheck;
  doc["gradcheck"] = {
      {"n_pixels", g.n_pixels},         {"grid_resolution", g.grid_resolution}, {"image_resolution", g.image_resolution},
      {"fd_step", g.fd_step},           {"rel_tol", g.rel_tol},                 {"loss_rel_tol", g.loss_rel_tol},
      {"small_grad", g.small_grad},     {"abs_tol", g.abs_tol},                 {"loss_samples", g.loss_samples},
  };
  doc["evaluate"] = {{"samples", c.evaluate.samples}, {"box_edge", c.evaluate.box_edge}};
  return doc.dump(2) + "\n";
}

}  // namespace sdfdiff

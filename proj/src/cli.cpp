#include "sdfdiff/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "sdfdiff/config.hpp"
#include "sdfdiff/errors.hpp"
#include "sdfdiff/eval.hpp"
#include "sdfdiff/gradcheck.hpp"
#include "sdfdiff/grid_io.hpp"
#include "sdfdiff/image.hpp"
#include "sdfdiff/optim.hpp"
#include "sdfdiff/parallel.hpp"

namespace sdfdiff {

namespace fs = std::filesystem;

namespace {

enum class LogLevel { kQuiet, kError, kWarn, kInfo, kDebug };

LogLevel log_level_from_env() {
  const char* env = std::getenv("SDFDIFF_LOG");
  const std::string v = env ? env : "info";
  if (v == "quiet") return LogLevel::kQuiet;
  if (v == "error") return LogLevel::kError;
  if (v == "warn") return LogLevel::kWarn;
  if (v == "info" || v.empty()) return LogLevel::kInfo;
  if (v == "debug") return LogLevel::kDebug;
  throw InvalidArgument("SDFDIFF_LOG must be one of quiet, error, warn, info, debug (got \"" + v + "\")");
}

class Log {
 public:
  Log(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
  void error(const std::string& msg) const { emit(LogLevel::kError, "error", msg); }
  void warn(const std::string& msg) const { emit(LogLevel::kWarn, "warn", msg); }
  void info(const std::string& msg) const { emit(LogLevel::kInfo, "info", msg); }
  void debug(const std::string& msg) const { emit(LogLevel::kDebug, "debug", msg); }

 private:
  void emit(LogLevel at, const char* tag, const std::string& msg) const {
    if (level_ >= at) err_ << "[" << tag << "] " << msg << '\n';
  }
  std::ostream& err_;
  LogLevel level_;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

std::string exact(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

std::string view_name(int v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%02d", v);
  return buf;
}

fs::path target_dir(const fs::path& root, int image_res) { return root / ("images_" + std::to_string(image_res)); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory: " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<View> views_for(const MultiResConfig& cfg, int image_res) {
  return headlit_views(stage_cameras(cfg, image_res), cfg.light_intensity, cfg.light_ambient, cfg.light_albedo);
}

void write_views(const fs::path& dir, const std::vector<Image>& images) {
  ensure_dir(dir);
  for (std::size_t v = 0; v < images.size(); ++v) {
    const std::string name = view_name(static_cast<int>(v));
    write_pfm(dir / (name + ".pfm"), images[v]);
    write_png(dir / (name + ".png"), images[v]);
  }
}

struct Globals {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = -1;
  bool deterministic = false;
  bool print_config = false;
};

struct RenderArgs {
  std::string grid;
  int image_res = 0;
};

struct ReconstructArgs {
  std::string ground_truth;
  std::string targets;
};

struct GradcheckArgs {
  int pixels = -1;
  std::string fault;
};

struct EvaluateArgs {
  std::string mesh_a;
  std::string mesh_b;
  int samples = 0;
  double box_edge = 0.0;
};

struct MakeTargetArgs {
  std::string shape;
  int resolution = 0;
};

fs::path require_out(const Globals& g) {
  if (g.out_dir.empty()) throw InvalidArgument("--out DIR is required for this command");
  return g.out_dir;
}

int cmd_render(const RunConfig& cfg, const Globals& g, const RenderArgs& a, std::ostream& out, const Log& log) {
  const fs::path dir = require_out(g);
  const SdfGrid grid = load_grid(a.grid);
  MultiResConfig scene = cfg.reconstruct;
  scene.bbox_origin = grid.bbox_min();
  scene.bbox_extent = grid.extent();
  int res = a.image_res > 0 ? a.image_res : cfg.render_image_res;
  if (res <= 0) res = image_res_for(grid, scene.camera_distance, scene.fov, scene.max_image_res);
  const auto views = views_for(scene, res);
  log.info("rendering " + std::to_string(views.size()) + " views at " + std::to_string(res) + "x" +
           std::to_string(res) + " from " + a.grid);
  write_views(dir, render_images(grid, views));
  out << "wrote " << views.size() << " views to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_make_target(const RunConfig& cfg, const Globals& g, std::ostream& out, const Log& log) {
  const fs::path dir = require_out(g);
  ensure_dir(dir);
  const SdfGrid truth = cfg.target.make_grid(cfg.reconstruct);
  save_grid(dir / "target.sdfg", truth);
  save_obj(dir / "target.obj", marching_cubes(truth));
  std::vector<int> done;
  for (const int n : cfg.reconstruct.grid_resolutions) {
    const int res = stage_image_res(cfg.reconstruct, n);
    if (std::find(done.begin(), done.end(), res) != done.end()) continue;
    done.push_back(res);
    log.info("rendering " + cfg.target.shape + " targets at " + std::to_string(res) + "x" + std::to_string(res));
    write_views(target_dir(dir, res), render_images(truth, views_for(cfg.reconstruct, res)));
  }
  write_text(dir / "config.json", dump_run_config(cfg));
  out << "wrote " << cfg.target.shape << " target and " << done.size() << " image sets to " << dir.string() << '\n';
  return kExitOk;
}

// Loads every target image a run will need, so missing files fail before any compute.
std::vector<std::vector<Image>> load_target_sets(const MultiResConfig& cfg, const fs::path& root) {
  std::vector<std::vector<Image>> sets;
  for (const int n : cfg.grid_resolutions) {
    const int res = stage_image_res(cfg, n);
    const std::size_t count = stage_cameras(cfg, res).size();
    std::vector<Image> images;
    for (std::size_t v = 0; v < count; ++v) {
      const fs::path p = target_dir(root, res) / (view_name(static_cast<int>(v)) + ".pfm");
      if (!fs::exists(p)) throw IoError("missing target image: " + p.string());
      Image img = read_pfm(p);
      if (img.width != res || img.height != res) {
        throw InvalidArgument("target image " + p.string() + " is " + std::to_string(img.width) + "x" +
                              std::to_string(img.height) + ", expected " + std::to_string(res) + "x" +
                              std::to_string(res));
      }
      images.push_back(std::move(img));
    }
    sets.push_back(std::move(images));
  }
  return sets;
}

int cmd_reconstruct(const RunConfig& cfg, const Globals& g, const ReconstructArgs& a, std::ostream& out,
                    const Log& log) {
  const fs::path dir = require_out(g);
  if (a.ground_truth.empty() && a.targets.empty()) {
    throw InvalidArgument("reconstruct needs --ground-truth GRID or --targets DIR");
  }
  const MultiResConfig& mr = cfg.reconstruct;
  std::optional<SdfGrid> truth;
  if (!a.ground_truth.empty()) truth = load_grid(a.ground_truth);
  std::vector<std::vector<Image>> sets;
  if (!a.targets.empty()) sets = load_target_sets(mr, a.targets);
  ensure_dir(dir);
  ensure_dir(dir / "checkpoints");
  write_text(dir / "config.json", dump_run_config(cfg));

  const TargetProvider targets = [&](int stage, const std::vector<View>& views) {
    if (!sets.empty()) return sets[static_cast<std::size_t>(stage)];
    return render_images(*truth, views);
  };

  std::ofstream csv(dir / "losses.csv");
  if (!csv) throw IoError("cannot open for writing: " + (dir / "losses.csv").string());
  write_loss_csv_header(csv);
  const auto on_iteration = [&](const IterationLog& l) {
    LossReport all = l.report;
    write_loss_csv_row(csv, l.iteration, l.stage, -1, all);
    for (std::size_t v = 0; v < l.report.per_view_image_loss.size(); ++v) {
      LossReport one = l.report;
      one.image_loss = l.report.per_view_image_loss[v];
      one.total = l.report.total - l.report.image_loss + one.image_loss;
      write_loss_csv_row(csv, l.iteration, l.stage, static_cast<int>(v), one);
    }
    log.info("stage " + std::to_string(l.stage) + " iteration " + std::to_string(l.iteration) + " updates " +
             std::to_string(l.updates) + " image " + fmt(l.report.image_loss) + " reg " + fmt(l.report.reg_loss) +
             " geo " + fmt(l.report.geo_loss));
  };
  const auto on_stage = [&](int stage, const SdfGrid& grid, const AdamState& adam) {
    const std::string stem = "stage_" + std::to_string(stage);
    save_grid(dir / "checkpoints" / (stem + ".sdfg"), grid);
    save_adam_state(dir / "checkpoints" / (stem + ".sdfa"), adam, grid);
    log.debug("checkpoint " + stem + " written");
  };

  log.info("reconstruct: seed " + std::to_string(cfg.seed) + ", threads " + std::to_string(thread_count()) +
           ", stages " + std::to_string(mr.grid_resolutions.size()));
  const auto start = std::chrono::steady_clock::now();
  std::optional<MultiResResult> run;
  try {
    run = reconstruct_multires(mr, targets, on_iteration, on_stage);
  } catch (const StageDiverged& e) {
    save_grid(dir / "partial.sdfg", e.partial());
    log.error(std::string(e.what()) + "; partial grid saved to " + (dir / "partial.sdfg").string());
    return kExitNumeric;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const MultiResResult& result = *run;

  save_grid(dir / "grid.sdfg", result.grid);
  const TriangleMesh mesh = marching_cubes(result.grid);
  save_obj(dir / "mesh.obj", mesh);

  // The starting point of the run, scored against the final stage's targets.
  const int n_last = mr.grid_resolutions.back();
  const int res_last = stage_image_res(mr, n_last);
  const auto last_views = views_for(mr, res_last);
  const SdfGrid start_grid = init_sphere(n_last, mr.init_center, mr.init_radius, mr.bbox_origin,
                                         mr.bbox_extent / (n_last - 1));
  const LossReport initial = evaluate_views(start_grid, last_views,
                                            targets(static_cast<int>(mr.grid_resolutions.size()) - 1, last_views),
                                            mr.weights, TraceParams::for_grid(start_grid));
  const double final_loss = result.stages.back().final_report.image_loss;

  std::ostringstream summary;
  summary << "seed: " << cfg.seed << '\n';
  summary << "threads: " << thread_count() << '\n';
  summary << "deterministic: " << (cfg.deterministic ? "true" : "false") << '\n';
  for (std::size_t s = 0; s < result.stages.size(); ++s) {
    const StageResult& st = result.stages[s];
    summary << "stage " << s << ": grid " << mr.grid_resolutions[s] << " image "
            << stage_image_res(mr, mr.grid_resolutions[s]) << " iterations " << st.outer_iterations << " updates "
            << st.updates << " stop " << to_string(st.reason) << " image_loss " << exact(st.initial.image_loss)
            << " -> " << exact(st.final_report.image_loss) << '\n';
  }
  summary << "initial_image_loss: " << exact(initial.image_loss) << '\n';
  summary << "final_image_loss: " << exact(final_loss) << '\n';
  summary << "final_reg_loss: " << exact(result.stages.back().final_report.reg_loss) << '\n';
  summary << "final_geo_loss: " << exact(result.stages.back().final_report.geo_loss) << '\n';
  summary << "loss_ratio: " << exact(initial.image_loss > 0.0 ? final_loss / initial.image_loss : 0.0) << '\n';
  if (truth) {
    const TriangleMesh gt_mesh = marching_cubes(*truth);
    if (mesh.empty()) {
      log.warn("reconstruction has an empty zero level set; Hausdorff distance not computed");
      summary << "hausdorff: n/a\n";
    } else {
      const double hd = symmetric_hausdorff(mesh, gt_mesh, cfg.evaluate.samples, cfg.seed, truth->extent());
      summary << "hausdorff: " << exact(hd) << '\n';
      summary << "hausdorff_samples: " << cfg.evaluate.samples << '\n';
    }
  }
  summary << "seconds: " << fmt(seconds, 4) << '\n';
  write_text(dir / "summary.txt", summary.str());
  out << summary.str();
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& cfg, const GradcheckArgs& a, std::ostream& out, const Log& log) {
  GradcheckConfig gc = cfg.gradcheck;
  gc.seed = cfg.seed;
  if (a.pixels >= 0) gc.n_pixels = a.pixels;
  GradcheckFault fault = GradcheckFault::kNone;
  if (a.fault == "sign-flip") {
    fault = GradcheckFault::kSignFlip;
  } else if (!a.fault.empty()) {
    throw InvalidArgument("unknown fault \"" + a.fault + "\"");
  }
  log.info("gradcheck: " + std::to_string(gc.n_pixels) + " pixels on " + std::to_string(gc.grid_resolution) +
           "^3 grids, seed " + std::to_string(gc.seed));
  const GradcheckReport report = run_gradcheck(gc, fault);
  print_gradcheck_report(out, report);
  return report.pass ? kExitOk : kExitNumeric;
}

int cmd_evaluate(const RunConfig& cfg, const Globals& g, const EvaluateArgs& a, std::ostream& out, const Log& log) {
  EvaluateConfig ec = cfg.evaluate;
  if (a.samples > 0) ec.samples = a.samples;
  if (a.box_edge > 0.0) ec.box_edge = a.box_edge;
  ec.validate();
  const TriangleMesh ma = load_obj(a.mesh_a), mb = load_obj(a.mesh_b);
  if (ma.empty()) throw InvalidArgument("mesh has no faces: " + a.mesh_a);
  if (mb.empty()) throw InvalidArgument("mesh has no faces: " + a.mesh_b);
  log.info("evaluate: " + std::to_string(ec.samples) + " samples per mesh, seed " + std::to_string(cfg.seed));
  const double value = symmetric_hausdorff(ma, mb, ec.samples, cfg.seed, ec.box_edge);
  out << exact(value) << '\n';
  if (!g.out_dir.empty()) {
    ensure_dir(g.out_dir);
    const fs::path csv_path = fs::path(g.out_dir) / "metric.csv";
    const bool fresh = !fs::exists(csv_path);
    std::ofstream csv(csv_path, std::ios::app);
    if (!csv) throw IoError("cannot open for writing: " + csv_path.string());
    if (fresh) csv << "mesh_a,mesh_b,samples,seed,value\n";
    csv << a.mesh_a << ',' << a.mesh_b << ',' << ec.samples << ',' << cfg.seed << ',' << exact(value) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentiable SDF rendering and multi-view reconstruction"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--seed", g.seed, "Seed for all sampling (overrides config)");
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores (overrides config)");
  app.add_flag("--deterministic", g.deterministic, "Single-threaded, bit-reproducible run");
  app.add_flag("--print-effective-config", g.print_config, "Print the full configuration and exit");

  RenderArgs render_args;
  CLI::App* render_cmd = app.add_subcommand("render", "Render the rig views of a grid (PFM + PNG)");
  render_cmd->add_option("grid", render_args.grid, "Grid container")->required();
  render_cmd->add_option("--image-res", render_args.image_res, "Image size; default from the footprint rule");

  ReconstructArgs rec_args;
  CLI::App* rec_cmd = app.add_subcommand("reconstruct", "Multi-resolution reconstruction from target images");
  rec_cmd->add_option("--ground-truth", rec_args.ground_truth, "Grid rendered for targets and used for the metric");
  rec_cmd->add_option("--targets", rec_args.targets, "Directory written by make-target");

  GradcheckArgs gc_args;
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
  gc_cmd->add_option("--pixels", gc_args.pixels, "Hit pixels to check (overrides config)");
  gc_cmd->add_option("--inject-fault", gc_args.fault, "")->group("");

  EvaluateArgs ev_args;
  CLI::App* ev_cmd = app.add_subcommand("evaluate", "Relative symmetric Hausdorff distance of two OBJ meshes");
  ev_cmd->add_option("mesh_a", ev_args.mesh_a, "First mesh")->required();
  ev_cmd->add_option("mesh_b", ev_args.mesh_b, "Second mesh")->required();
  ev_cmd->add_option("--samples", ev_args.samples, "Samples per mesh (overrides config)");
  ev_cmd->add_option("--box-edge", ev_args.box_edge, "Normalising box edge length (overrides config)");

  MakeTargetArgs mt_args;
  CLI::App* mt_cmd = app.add_subcommand("make-target", "Analytic target grid, mesh and per-stage target images");
  mt_cmd->add_option("--shape", mt_args.shape, "torus or sphere (overrides config)");
  mt_cmd->add_option("--resolution", mt_args.resolution, "Target grid resolution (overrides config)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  if (app.get_subcommands().empty() && !g.print_config) {
    err << "error: A subcommand is required\n";
    return kExitValidation;
  }

  try {
    const Log log(err, log_level_from_env());
    RunConfig cfg = g.config_path.empty() ? RunConfig() : load_run_config(g.config_path);
    if (app.count("--seed") > 0) cfg.seed = g.seed;
    if (g.threads >= 0) cfg.threads = g.threads;
    if (g.deterministic) cfg.deterministic = true;
    if (!mt_args.shape.empty()) cfg.target.shape = mt_args.shape;
    if (mt_args.resolution > 0) cfg.target.resolution = mt_args.resolution;
    cfg.validate();
    if (g.print_config) {
      out << dump_run_config(cfg);
      return kExitOk;
    }
    set_thread_count(cfg.effective_threads());

    if (*render_cmd) return cmd_render(cfg, g, render_args, out, log);
    if (*rec_cmd) return cmd_reconstruct(cfg, g, rec_args, out, log);
    if (*gc_cmd) return cmd_gradcheck(cfg, gc_args, out, log);
    if (*ev_cmd) return cmd_evaluate(cfg, g, ev_args, out, log);
    if (*mt_cmd) return cmd_make_target(cfg, g, out, log);
    return kExitValidation;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const OutOfDomain& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DegenerateNormal& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace sdfdiff

// Command-line entry point for the panorama layout pipeline.
//
// Exit codes: 0 ok, 1 other failure, 2 parse or domain error, 3 empty mask,
// 4 degenerate geometry, 5 checkpoint error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "panolayout/annotation.hpp"
#include "panolayout/annotation_http.hpp"
#include "panolayout/config.hpp"
#include "panolayout/errors.hpp"
#include "panolayout/fitting.hpp"
#include "panolayout/image_io.hpp"
#include "panolayout/layout.hpp"
#include "panolayout/metrics.hpp"
#include "panolayout/projection.hpp"
#include "panolayout/synth.hpp"
#include "panolayout/training.hpp"

namespace fs = std::filesystem;
using namespace panolayout;

namespace {

int thread_cap() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("PANOLAYOUT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

bool has_ext(const fs::path& p, const std::string& ext) { return p.extension() == ext; }

// --- synth-gen ----------------------------------------------------------------

struct SynthGenArgs {
  fs::path out;
  int count = 100;
  int val = 0;
  std::uint64_t seed = 0;
  int pano_w = 1024;
  int fp_w = 512;
  double fov = kDefaultFov;
  std::vector<std::string> proportions;
};

int run_synth_gen(const SynthGenArgs& a) {
  DatasetOptions opts;
  opts.count = a.count;
  opts.val_count = a.val;
  opts.seed = a.seed;
  opts.geometry = {a.pano_w, a.pano_w / 2, a.fp_w, a.fov};
  opts.threads = thread_cap();
  if (a.pano_w <= 0 || a.pano_w % 2 != 0 || a.fp_w <= 0) throw DomainError("pano-w must be even and fp-w positive");
  if (!a.proportions.empty()) {
    opts.proportions.clear();
    for (const std::string& p : a.proportions) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw DomainError("proportion '" + p + "' must look like 6=0.25");
      try {
        opts.proportions[std::stoi(p.substr(0, eq))] = std::stod(p.substr(eq + 1));
      } catch (const std::logic_error&) {
        throw DomainError("proportion '" + p + "' must look like 6=0.25");
      }
    }
  }
  const Manifest m = write_dataset(a.out, opts);
  std::cout << "wrote " << m.samples.size() << " samples to " << a.out.string() << '\n';
  for (const auto& [corners, n] : class_counts(opts.count, opts.proportions)) {
    std::cout << "  " << corners << " corners: " << n << '\n';
  }
  return 0;
}

// --- render-gt ----------------------------------------------------------------

struct RenderArgs {
  fs::path layout;
  fs::path out_dir = ".";
  int pano_w = 1024;
  int fp_w = 512;
  double fov = kDefaultFov;
  std::uint64_t seed = 0;
};

int run_render_gt(const RenderArgs& a) {
  const ManhattanLayout layout = load_layout(a.layout);
  fs::create_directories(a.out_dir);
  write_plpm(a.out_dir / "fc.plpm", render_fc_map(layout, a.pano_w, a.pano_w / 2));
  write_plpm(a.out_dir / "fp.plpm", render_fp_map(layout, CeilingViewFrame::for_fov(a.fp_w, a.fov)));
  write_png(a.out_dir / "pano.png", to_image8(synth_texture(layout, a.pano_w, a.pano_w / 2, a.seed)));
  std::cout << "wrote pano.png, fc.plpm, fp.plpm to " << a.out_dir.string() << '\n';
  return 0;
}

// --- e2p ----------------------------------------------------------------------

struct E2PArgs {
  fs::path input;
  fs::path output;
  double fov = kDefaultFov;
  int w = 512;
  std::string direction = "up";
};

int run_e2p(const E2PArgs& a) {
  E2PConfig cfg{a.fov, a.w, a.direction == "down" ? ViewDirection::Down : ViewDirection::Up};
  validate_config(cfg);
  EquirectMap pano;
  if (has_ext(a.input, ".plpm")) {
    pano = read_plpm(a.input).retag<EquirectTag>();
  } else {
    const Image8 img = read_png(a.input);
    pano = from_image8<EquirectTag>(img, img.channels);
  }
  const PerspectiveMap view = e2p(pano, cfg);
  if (has_ext(a.output, ".plpm")) write_plpm(a.output, view);
  else write_png(a.output, to_image8(view));
  return 0;
}

// --- fit ----------------------------------------------------------------------

struct FitArgs {
  fs::path fp;
  fs::path fc;
  double height = 0.0;
  fs::path out = "layout.json";
  std::optional<fs::path> debug_dir;
  double fov = kDefaultFov;
};

int run_fit(const FitArgs& a) {
  (void)floor_registration_scale(a.height);  // domain check before any I/O
  const PerspectiveMap fp = read_plpm(a.fp).retag<PerspectiveTag>();
  const EquirectMap fc = read_plpm(a.fc).retag<EquirectTag>();
  if (fp.width() != fp.height()) throw DimensionError("fp map must be square");
  const CeilingViewFrame frame = CeilingViewFrame::for_fov(fp.width(), a.fov);
  const SplitMaps split = split_fc(fc, a.height, frame);
  const FitTrace trace = fit_traced(fuse(fp, split.ceiling, split.floor), a.height, frame);
  if (a.debug_dir) write_fit_debug(*a.debug_dir, trace);
  save_layout(a.out, trace.layout);
  std::cout << "fitted " << trace.layout.corners.size() << "-corner layout -> " << a.out.string() << '\n';
  return 0;
}

// --- infer --------------------------------------------------------------------

struct InferArgs {
  fs::path pano;
  fs::path ckpt;
  fs::path out_dir = ".";
};

int run_infer(const InferArgs& a) {
  const ToyDulaNet<float> model = load_checkpoint(a.ckpt);
  const Image8 img = read_png(a.pano);
  if (img.width != 2 * img.height) throw DimensionError("panorama must have a 2:1 aspect ratio");
  const EquirectMap pano = from_image8<EquirectTag>(img, 3);
  const Prediction p = predict(model, pano);
  fs::create_directories(a.out_dir);
  if (!p.fc.empty()) write_plpm(a.out_dir / "fc.plpm", p.fc);
  if (!p.fp.empty()) write_plpm(a.out_dir / "fp.plpm", p.fp);
  const CeilingViewFrame frame = CeilingViewFrame::for_fov(ToyDulaNet<float>::kViewW, ToyDulaNet<float>::kFovDeg);
  const ManhattanLayout layout = fit_fused(variant_fused_map(p, model.config().variant), p.height_m, frame);
  save_layout(a.out_dir / "layout.json", layout);
  std::cout << "height " << p.height_m << " m, " << layout.corners.size() << " corners -> "
            << (a.out_dir / "layout.json").string() << '\n';
  return 0;
}

// --- train --------------------------------------------------------------------

struct TrainArgs {
  fs::path dataset;
  fs::path out_dir = "train_out";
  std::optional<fs::path> config;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<double> time_budget;
  std::optional<int> max_steps;
};

std::vector<Sample> load_split(const fs::path& manifest_path, const Manifest& m, const std::string& split) {
  std::vector<Sample> out;
  for (const auto& r : m.samples) {
    if (split == "all" || r.split == split) out.push_back(read_sample(manifest_path.parent_path(), r.id));
  }
  return out;
}

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (a.config) cfg = load_train_config(*a.config, cfg);
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.seed) cfg.seed = *a.seed;
  if (a.variant) cfg.variant = parse_variant(*a.variant);
  if (a.time_budget) cfg.time_budget_s = *a.time_budget;
  if (a.max_steps) cfg.max_steps = *a.max_steps;
  validate_train_config(cfg);
  const Manifest m = load_manifest(a.dataset);
  if (m.geometry.pano_w != ToyDulaNet<float>::kPanoW || m.geometry.fp_w != ToyDulaNet<float>::kViewW) {
    throw DimensionError("training needs a dataset generated with --pano-w 128 --fp-w 64");
  }
  const auto train_set = load_split(a.dataset, m, "train");
  const auto val_set = load_split(a.dataset, m, "val");
  fs::create_directories(a.out_dir);
  write_file_atomic(a.out_dir / "config.toml", train_config_to_toml(cfg));
  std::vector<CurvePoint> curve;
  std::cout << "training " << variant_name(cfg.variant) << " on " << train_set.size() << " samples, "
            << val_set.size() << " held out\n";
  const TrainResult result = train(train_set, val_set, cfg, [&](const ToyDulaNet<float>& model, const CurvePoint& p) {
    curve.push_back(p);
    save_checkpoint(a.out_dir / "model.plck", model);
    std::ostringstream csv;
    write_curve_csv(csv, curve);
    write_file_atomic(a.out_dir / "curve.csv", csv.str());
    std::cout << "epoch " << p.epoch << " step " << p.step << " train " << p.train_loss << " val " << p.val_loss
              << " iou " << p.val_iou2d << std::endl;
  });
  std::cout << "done: " << result.steps << " steps in " << result.seconds << " s\n";
  return 0;
}

// --- eval ---------------------------------------------------------------------

struct EvalArgs {
  fs::path dataset;
  std::string mode = "gt-maps";
  std::optional<fs::path> ckpt;
  fs::path out = "report.csv";
  std::string split = "all";
};

int run_eval(const EvalArgs& a) {
  std::optional<ToyDulaNet<float>> model;
  if (a.mode == "net") {
    if (!a.ckpt) throw DomainError("--mode net needs --ckpt");
    model.emplace(load_checkpoint(*a.ckpt));
  }
  const Manifest m = load_manifest(a.dataset);
  const fs::path root = a.dataset.parent_path();
  std::vector<EvalItem> items;
  for (const auto& r : m.samples) {
    if (a.split != "all" && r.split != a.split) continue;
    try {
      items.push_back({r.id, load_layout(root / r.id / "layout.json")});
    } catch (const Error& e) {
      std::cerr << "skipping " << r.id << ": " << e.what() << '\n';
    }
  }
  const double fov = m.geometry.fov_deg;
  TimedPredictor predictor = [&](const EvalItem& item, double& seconds) {
    const fs::path d = root / item.id;
    if (model) {
      const Image8 img = read_png(d / "pano.png");
      const EquirectMap pano = from_image8<EquirectTag>(img, 3);
      const auto start = std::chrono::steady_clock::now();
      ManhattanLayout out = predict_layout(*model, pano);
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return out;
    }
    const PerspectiveMap fp = read_plpm(d / "fp.plpm").retag<PerspectiveTag>();
    const EquirectMap fc = read_plpm(d / "fc.plpm").retag<EquirectTag>();
    const auto start = std::chrono::steady_clock::now();
    ManhattanLayout out = fit(fp, fc, item.ground_truth.height_m, CeilingViewFrame::for_fov(fp.width(), fov));
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  };
  const EvalReport report = evaluate(items, predictor, model ? 1 : thread_cap());
  for (const auto& r : report.records) {
    if (!r.ok) std::cerr << r.id << ": " << r.error << '\n';
  }
  std::ostringstream csv;
  write_csv(csv, report);
  write_file_atomic(a.out, csv.str());
  write_table(std::cout, report);
  return 0;
}

// --- serve --------------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path dir = "sessions";
};

int run_serve(const ServeArgs& a) {
  SessionStore store(a.dir);
  AnnotationServer server(store);
  std::cout << "serving " << store.ids().size() << " sessions from " << a.dir.string() << " on " << a.host << ':'
            << a.port << std::endl;
  if (!server.listen(a.host, a.port)) throw Error("could not listen on " + a.host + ":" + std::to_string(a.port));
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const CheckpointError*>(&e)) return 5;
  if (dynamic_cast<const EmptyMaskError*>(&e)) return 3;
  if (dynamic_cast<const DegenerateGeometryError*>(&e) || dynamic_cast<const InvalidLayoutError*>(&e)) return 4;
  if (dynamic_cast<const DomainError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const FrameTooSmallError*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-projection panorama layout estimation toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  SynthGenArgs sg;
  auto* c_sg = app.add_subcommand("synth-gen", "Generate a synthetic room dataset");
  c_sg->add_option("--out", sg.out, "Output directory")->required();
  c_sg->add_option("--count", sg.count, "Number of samples")->check(CLI::PositiveNumber);
  c_sg->add_option("--val", sg.val, "Samples marked as held out")->check(CLI::NonNegativeNumber);
  c_sg->add_option("--seed", sg.seed, "Dataset seed");
  c_sg->add_option("--pano-w", sg.pano_w, "Panorama width (height is half)");
  c_sg->add_option("--fp-w", sg.fp_w, "Floor plan map size");
  c_sg->add_option("--fov", sg.fov, "Ceiling-view field of view in degrees");
  c_sg->add_option("--proportion", sg.proportions, "Class weight such as 6=0.25 (repeatable)");
  c_sg->callback([&] { action = [&] { return run_synth_gen(sg); }; });

  RenderArgs rg;
  auto* c_rg = app.add_subcommand("render-gt", "Render GT maps and a textured panorama for a layout");
  c_rg->add_option("--layout", rg.layout, "Layout JSON")->required()->check(CLI::ExistingFile);
  c_rg->add_option("--out-dir", rg.out_dir, "Output directory");
  c_rg->add_option("--pano-w", rg.pano_w, "Panorama width");
  c_rg->add_option("--fp-w", rg.fp_w, "Floor plan map size");
  c_rg->add_option("--fov", rg.fov, "Ceiling-view field of view in degrees");
  c_rg->add_option("--seed", rg.seed, "Texture seed");
  c_rg->callback([&] { action = [&] { return run_render_gt(rg); }; });

  E2PArgs ea;
  auto* c_e2p = app.add_subcommand("e2p", "Project a panorama to an up or down perspective view");
  c_e2p->add_option("--pano", ea.input, "Input .png or .plpm")->required()->check(CLI::ExistingFile);
  c_e2p->add_option("--out", ea.output, "Output .png or .plpm")->required();
  c_e2p->add_option("--fov", ea.fov, "Field of view in degrees");
  c_e2p->add_option("--w", ea.w, "Output size in pixels");
  c_e2p->add_option("--direction", ea.direction, "up or down")->check(CLI::IsMember({"up", "down"}));
  c_e2p->callback([&] { action = [&] { return run_e2p(ea); }; });

  FitArgs fa;
  auto* c_fit = app.add_subcommand("fit", "Fit a Manhattan layout to probability maps");
  c_fit->add_option("--fp", fa.fp, "Floor plan map (.plpm)")->required()->check(CLI::ExistingFile);
  c_fit->add_option("--fc", fa.fc, "Floor-ceiling map (.plpm)")->required()->check(CLI::ExistingFile);
  c_fit->add_option("--height", fa.height, "Layout height in meters")->required();
  c_fit->add_option("--out", fa.out, "Output layout JSON");
  c_fit->add_option("--debug-dir", fa.debug_dir, "Directory for stage images");
  c_fit->add_option("--fov", fa.fov, "Ceiling-view field of view in degrees");
  c_fit->callback([&] { action = [&] { return run_fit(fa); }; });

  InferArgs ia;
  auto* c_inf = app.add_subcommand("infer", "Run the network and fit a layout");
  c_inf->add_option("--pano", ia.pano, "2:1 RGB panorama")->required()->check(CLI::ExistingFile);
  c_inf->add_option("--ckpt", ia.ckpt, "Checkpoint (.plck)")->required();
  c_inf->add_option("--out-dir", ia.out_dir, "Output directory");
  c_inf->callback([&] { action = [&] { return run_infer(ia); }; });

  TrainArgs ta;
  auto* c_tr = app.add_subcommand("train", "Train the network on a dataset");
  c_tr->add_option("--dataset", ta.dataset, "manifest.json")->required()->check(CLI::ExistingFile);
  c_tr->add_option("--out-dir", ta.out_dir, "Checkpoint and curve directory");
  c_tr->add_option("--config", ta.config, "TOML training config")->check(CLI::ExistingFile);
  c_tr->add_option("--epochs", ta.epochs, "Epoch count");
  c_tr->add_option("--seed", ta.seed, "Training seed");
  c_tr->add_option("--variant", ta.variant, "full, no-fusion, pano-only or ceiling-only");
  c_tr->add_option("--time-budget", ta.time_budget, "Wall-clock budget in seconds");
  c_tr->add_option("--max-steps", ta.max_steps, "Optimizer step limit");
  c_tr->callback([&] { action = [&] { return run_train(ta); }; });

  EvalArgs va;
  auto* c_ev = app.add_subcommand("eval", "Evaluate fitting on a dataset");
  c_ev->add_option("--dataset", va.dataset, "manifest.json")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--mode", va.mode, "gt-maps or net")->check(CLI::IsMember({"gt-maps", "net"}));
  c_ev->add_option("--ckpt", va.ckpt, "Checkpoint for --mode net");
  c_ev->add_option("--out", va.out, "Per-sample CSV report");
  c_ev->add_option("--split", va.split, "all, train or val")->check(CLI::IsMember({"all", "train", "val"}));
  c_ev->callback([&] { action = [&] { return run_eval(va); }; });

  ServeArgs sa;
  auto* c_sv = app.add_subcommand("serve", "Run the annotation service");
  c_sv->add_option("--host", sa.host, "Bind address");
  c_sv->add_option("--port", sa.port, "Port")->check(CLI::Range(1, 65535));
  c_sv->add_option("--dir", sa.dir, "Session directory");
  c_sv->callback([&] { action = [&] { return run_serve(sa); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    return action();
  } catch (const EmptyMaskError& e) {
    std::cerr << "error: empty mask: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

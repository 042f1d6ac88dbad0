#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "panolayout/image_io.hpp"
#include "panolayout/metrics.hpp"
#include "panolayout/training.hpp"

using namespace panolayout;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

// Runs the CLI with stdout and stderr captured to a file.
Run run(const std::string& args, const fs::path& scratch) {
  const fs::path log = scratch / "cli.log";
  const std::string cmd = std::string("\"") + PANOLAYOUT_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream os;
  os << in.rdbuf();
  r.output = os.str();
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

void write_maps(const ManhattanLayout& layout, const fs::path& dir) {
  write_plpm(dir / "fc.plpm", render_fc_map(layout, 1024, 512));
  write_plpm(dir / "fp.plpm", render_fp_map(layout, CeilingViewFrame::for_fov(512, kDefaultFov)));
}

}  // namespace

TEST_CASE("fit recovers a layout from clean maps") {
  testsupport::TempDir dir("cli_fit");
  const ManhattanLayout l = testsupport::l_layout();
  write_maps(l, dir.path());
  const Run r = run("fit --fp " + q(dir.path() / "fp.plpm") + " --fc " + q(dir.path() / "fc.plpm") +
                        " --height 3.2 --out " + q(dir.path() / "layout.json"),
                    dir.path());
  INFO(r.output);
  REQUIRE(r.code == 0);
  const ManhattanLayout fitted = load_layout(dir.path() / "layout.json");
  CHECK(fitted.corners.size() == 6);
  CHECK(iou2d(fitted, l) > 0.97);
}

TEST_CASE("empty maps exit with the empty-mask code") {
  testsupport::TempDir dir("cli_empty");
  write_plpm(dir.path() / "fc.plpm", EquirectMap(1024, 512, 1, 0.0f));
  write_plpm(dir.path() / "fp.plpm", PerspectiveMap(512, 512, 1, 0.0f));
  const Run r = run("fit --fp " + q(dir.path() / "fp.plpm") + " --fc " + q(dir.path() / "fc.plpm") + " --height 3.2",
                    dir.path());
  CHECK(r.code == 3);
  CHECK(r.output.find("empty mask") != std::string::npos);
}

TEST_CASE("invalid heights are usage errors") {
  testsupport::TempDir dir("cli_height");
  write_maps(testsupport::square_layout(), dir.path());
  const Run r = run("fit --fp " + q(dir.path() / "fp.plpm") + " --fc " + q(dir.path() / "fc.plpm") + " --height 1.0",
                    dir.path());
  CHECK(r.code == 2);
}

TEST_CASE("corrupt checkpoints exit with the checkpoint code") {
  testsupport::TempDir dir("cli_ckpt");
  const ManhattanLayout l = testsupport::square_layout();
  write_png(dir.path() / "pano.png", to_image8(synth_texture(l, 256, 128, 1)));
  write_file_atomic(dir.path() / "bad.plck", std::string("PLCKgarbage"));
  const Run r = run("infer --pano " + q(dir.path() / "pano.png") + " --ckpt " + q(dir.path() / "bad.plck"), dir.path());
  CHECK(r.code == 5);
}

TEST_CASE("non-2:1 panoramas are rejected") {
  testsupport::TempDir dir("cli_ratio");
  save_checkpoint(dir.path() / "net.plck", ToyDulaNet<float>(NetworkConfig{}, 1));
  write_png(dir.path() / "square.png", Image8{64, 64, 3, std::vector<std::uint8_t>(64 * 64 * 3, 100)});
  const Run r =
      run("infer --pano " + q(dir.path() / "square.png") + " --ckpt " + q(dir.path() / "net.plck"), dir.path());
  CHECK(r.code == 2);
}

TEST_CASE("usage errors and help") {
  testsupport::TempDir dir("cli_usage");
  CHECK(run("", dir.path()).code == 2);
  CHECK(run("fit", dir.path()).code == 2);
  CHECK(run("no-such-command", dir.path()).code == 2);
  const Run help = run("--help", dir.path());
  CHECK(help.code == 0);
  CHECK(help.output.find("synth-gen") != std::string::npos);
}

TEST_CASE("synth-gen, render-gt and e2p") {
  testsupport::TempDir dir("cli_synth");
  const Run g = run("synth-gen --out " + q(dir.path() / "ds") + " --count 3 --val 1 --seed 2 --pano-w 256 --fp-w 128",
                    dir.path());
  INFO(g.output);
  REQUIRE(g.code == 0);
  const Manifest m = load_manifest(dir.path() / "ds" / "manifest.json");
  REQUIRE(m.samples.size() == 3);
  CHECK(m.samples[2].split == "val");

  const fs::path sample = dir.path() / "ds" / m.samples[0].id;
  const Run rg = run("render-gt --layout " + q(sample / "layout.json") + " --out-dir " + q(dir.path() / "gt") +
                         " --pano-w 256 --fp-w 128",
                     dir.path());
  INFO(rg.output);
  REQUIRE(rg.code == 0);
  CHECK(read_plpm(dir.path() / "gt" / "fc.plpm") == read_plpm(sample / "fc.plpm"));

  const Run e = run("e2p --pano " + q(sample / "pano.png") + " --out " + q(dir.path() / "up.png") +
                        " --w 64 --direction up",
                    dir.path());
  INFO(e.output);
  REQUIRE(e.code == 0);
  const Image8 up = read_png(dir.path() / "up.png");
  CHECK(up.width == 64);
  CHECK(up.height == 64);
}

TEST_CASE("eval on ground-truth maps") {
  testsupport::TempDir dir("cli_eval");
  REQUIRE(run("synth-gen --out " + q(dir.path() / "ds") + " --count 5 --seed 3 --pano-w 512 --fp-w 256", dir.path())
              .code == 0);
  const Run r = run("eval --dataset " + q(dir.path() / "ds" / "manifest.json") + " --mode gt-maps --out " +
                        q(dir.path() / "report.csv"),
                    dir.path());
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(r.output.find("overall") != std::string::npos);
  CHECK(fs::file_size(dir.path() / "report.csv") > 0);
}

#include <doctest.h>

#include <sys/wait.h>

#include <Eigen/Geometry>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fsgs/colmap.hpp"
#include "fsgs/io.hpp"
#include "fsgs/rasterizer.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fsgs;

namespace {

std::string binary_path() {
  const char* b = std::getenv("FSGS_BIN");
  REQUIRE_MESSAGE(b != nullptr, "FSGS_BIN must point at the fsgs executable");
  return b;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

struct RunResult {
  int exit_code = -1;
  std::string out, err;
};

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  fs::create_directories(scratch);
  fs::path o = scratch / "stdout.txt", e = scratch / "stderr.txt";
  std::string cmd = binary_path() + " " + args + " > " + o.string() + " 2> " +
                    e.string();
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("fsgs_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// COLMAP text model with one shared pinhole camera and zero-padded image
// names so the name sort matches the id order.
void write_colmap_text(const fs::path& dir, const std::vector<Camera>& cams) {
  fs::create_directories(dir);
  std::ofstream ctxt(dir / "cameras.txt");
  ctxt.precision(10);
  const Camera& c0 = cams[0];
  ctxt << "1 PINHOLE " << c0.width << " " << c0.height << " " << c0.focal[0]
       << " " << c0.focal[1] << " " << c0.principal[0] << " " << c0.principal[1]
       << "\n";

  std::ofstream itxt(dir / "images.txt");
  itxt.precision(10);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    Eigen::Quaternionf q(cams[i].rot);
    char name[32];
    std::snprintf(name, sizeof(name), "view_%02zu.png", i);
    itxt << (i + 1) << " " << q.w() << " " << q.x() << " " << q.y() << " "
         << q.z() << " " << cams[i].trans[0] << " " << cams[i].trans[1] << " "
         << cams[i].trans[2] << " 1 " << name << "\n\n";
  }
}

void write_points_text(const fs::path& dir, const std::vector<SfmPoint>& pts) {
  std::ofstream ptxt(dir / "points3D.txt");
  ptxt.precision(10);
  for (std::size_t i = 0; i < pts.size(); ++i)
    ptxt << (i + 1) << " " << pts[i].xyz[0] << " " << pts[i].xyz[1] << " "
         << pts[i].xyz[2] << " " << int(pts[i].rgb[0]) << " "
         << int(pts[i].rgb[1]) << " " << int(pts[i].rgb[2]) << " "
         << pts[i].error << "\n";
}

struct Fixture {
  fs::path root, colmap, images, priors;
  GaussianSet gt;
  std::vector<Camera> cams;
};

// A 12-view ring around the synthetic blob: COLMAP text model, rendered
// ground-truth PNGs, and oracle disparity priors.
Fixture build_fixture(const std::string& tag, int size = 24) {
  Fixture f;
  f.root = fresh_dir(tag);
  f.colmap = f.root / "sparse";
  f.images = f.root / "images";
  f.priors = f.root / "priors";
  fs::create_directories(f.images);
  fs::create_directories(f.priors);

  f.gt = synthetic::ground_truth_scene(4242);
  f.cams = synthetic::ring_cameras(size);
  write_colmap_text(f.colmap, f.cams);
  write_points_text(f.colmap, synthetic::sparse_points(f.gt, 100, 4242));

  synthetic::SyntheticOracle oracle(f.gt);
  for (std::size_t i = 0; i < f.cams.size(); ++i) {
    auto out = render_forward(f.gt, f.cams[i], 0);
    char stem[16];
    std::snprintf(stem, sizeof(stem), "view_%02zu", i);
    save_image((f.images / (std::string(stem) + ".png")).string(),
               Image{size, size, out.color});
    DepthPrior prior = oracle.estimate(Image{size, size, out.color}, f.cams[i]);
    save_pfm((f.priors / (std::string(stem) + ".pfm")).string(),
             prior.disparity);
  }
  return f;
}

void write_pose_file(const fs::path& path, const Camera& cam) {
  Eigen::Quaternionf q(cam.rot);
  std::ofstream out(path);
  out.precision(10);
  out << cam.focal[0] << " " << cam.focal[1] << " " << cam.principal[0] << " "
      << cam.principal[1] << " " << cam.width << " " << cam.height << " "
      << q.w() << " " << q.x() << " " << q.y() << " " << q.z() << " "
      << cam.trans[0] << " " << cam.trans[1] << " " << cam.trans[2] << "\n";
}

GaussianSet unit_square_set() {
  GaussianSet set;
  set.resize(4);
  const float xs[4] = {0, 1, 0, 1}, ys[4] = {0, 0, 1, 1};
  for (std::size_t i = 0; i < 4; ++i) {
    set.mu[i] = Vec3<float>(xs[i], ys[i], 0.f);
    set.log_scale[i] = Vec3<float>::Zero();
    set.rotation[i] = Vec4<float>(1, 0, 0, 0);
    set.opacity_logit[i] = 0.f;
    for (int k = 0; k < kShCoeffCount; ++k)
      set.sh[i * kShCoeffCount + k].setZero();
  }
  return set;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

}  // namespace

TEST_CASE("cli: missing required option exits with code 2") {
  fs::path dir = fresh_dir("missing_opt");
  RunResult r = run_cli("train --images x --out y", dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: unknown subcommand exits with code 2") {
  fs::path dir = fresh_dir("bad_subcmd");
  RunResult r = run_cli("frobnicate", dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: train runs end to end and writes PLY plus CSV log") {
  Fixture f = build_fixture("train_e2e");
  std::ofstream cfg(f.root / "config.txt");
  cfg << "total_iters = 25\n"
      << "densify_from = 1000\n"
      << "pseudo_from = 1000\n"
      << "checkpoint_interval = 100000\n"
      << "threads = 1\n";
  cfg.close();

  fs::path out = f.root / "out";
  RunResult r = run_cli("train --colmap " + f.colmap.string() + " --images " +
                            f.images.string() + " --priors " +
                            f.priors.string() + " --config " +
                            (f.root / "config.txt").string() + " --out " +
                            out.string() + " --views 3 --seed 5",
                        f.root / "scratch");
  INFO(r.err);
  REQUIRE(r.exit_code == 0);

  GaussianSet trained = import_ply((out / "point_cloud.ply").string());
  CHECK(trained.size() > 0);

  auto log_lines = lines_of(slurp(out / "train_log.csv"));
  REQUIRE(log_lines.size() == 26);  // header + one row per iteration
  CHECK(log_lines[0] ==
        "iter,l1,dssim,depth,pseudo_depth,total,gaussians,densified,unpooled,"
        "pruned,wall_ms");
  CHECK(csv_fields(log_lines[1])[0] == "1");
  CHECK(csv_fields(log_lines[25])[0] == "25");

  // --views 3 selects exactly three training views from the non-test pool.
  int mentions = 0;
  for (const auto& line : lines_of(r.out))
    if (line.rfind("training view", 0) == 0) ++mentions;
  CHECK(mentions == 3);
}

TEST_CASE("cli: render matches an in-process render of the same PLY") {
  Fixture f = build_fixture("render_golden");
  fs::path ply = f.root / "scene.ply";
  export_ply(f.gt, ply.string());
  write_pose_file(f.root / "pose.txt", f.cams[3]);

  fs::path png = f.root / "render.png", pfm = f.root / "depth.pfm";
  RunResult r = run_cli("render --ply " + ply.string() + " --pose " +
                            (f.root / "pose.txt").string() + " --out " +
                            png.string() + " --depth " + pfm.string(),
                        f.root / "scratch");
  INFO(r.err);
  REQUIRE(r.exit_code == 0);

  // The pose file round-trips the float camera exactly (10 significant
  // digits), so the CLI render must match up to 8-bit PNG quantization.
  auto expect = render_forward(f.gt, f.cams[3], kShDegreeMax);
  Image got = load_image(png.string());
  REQUIRE(got.width == f.cams[3].width);
  float max_diff = 0.f;
  for (std::size_t i = 0; i < expect.color.size(); ++i)
    max_diff = std::max(max_diff,
                        std::abs(got.data[i] - std::clamp(expect.color[i], 0.f, 1.f)));
  CHECK(max_diff <= 0.51f / 255.f);

  // The quaternion round-trip through the pose file perturbs the rotation
  // by a float ulp, so depth matches closely but not bit-exactly.
  Grid depth = load_pfm(pfm.string());
  REQUIRE(depth.data.size() == expect.depth.size());
  for (std::size_t i = 0; i < depth.data.size(); ++i)
    REQUIRE(depth.data[i] == doctest::Approx(expect.depth[i]).epsilon(1e-4));
}

TEST_CASE("cli: rendering an empty PLY gives a black (or white) frame") {
  fs::path dir = fresh_dir("render_empty");
  fs::path ply = dir / "empty.ply";
  GaussianSet empty;
  export_ply(empty, ply.string());
  Camera cam = synthetic::ring_cameras(16)[0];
  write_pose_file(dir / "pose.txt", cam);

  RunResult r = run_cli("render --ply " + ply.string() + " --pose " +
                            (dir / "pose.txt").string() + " --out " +
                            (dir / "black.png").string(),
                        dir / "scratch");
  REQUIRE(r.exit_code == 0);
  Image black = load_image((dir / "black.png").string());
  for (float v : black.data) REQUIRE(v == 0.f);

  r = run_cli("render --ply " + ply.string() + " --pose " +
                  (dir / "pose.txt").string() + " --white-bg --out " +
                  (dir / "white.png").string(),
              dir / "scratch");
  REQUIRE(r.exit_code == 0);
  Image white = load_image((dir / "white.png").string());
  for (float v : white.data) REQUIRE(v == 1.f);
}

TEST_CASE("cli: malformed PLY input exits with code 1") {
  fs::path dir = fresh_dir("bad_ply");
  std::ofstream(dir / "bad.ply") << "this is not a ply file\n";
  write_pose_file(dir / "pose.txt", synthetic::ring_cameras(16)[0]);
  RunResult r = run_cli("render --ply " + (dir / "bad.ply").string() +
                            " --pose " + (dir / "pose.txt").string() +
                            " --out " + (dir / "x.png").string(),
                        dir / "scratch");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("cli: eval on the ground-truth splats reports near-perfect metrics") {
  Fixture f = build_fixture("eval_gt");
  fs::path ply = f.root / "gt.ply";
  export_ply(f.gt, ply.string());
  fs::path csv = f.root / "eval.csv";

  RunResult r = run_cli("eval --ply " + ply.string() + " --colmap " +
                            f.colmap.string() + " --images " +
                            f.images.string() + " --out " + csv.string(),
                        f.root / "scratch");
  INFO(r.err);
  REQUIRE(r.exit_code == 0);

  auto rows = lines_of(slurp(csv));
  // 12 views -> test split is every 8th of the name-sorted list: 2 rows,
  // plus header and mean.
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "view,psnr,ssim,lpips,render_ms");
  CHECK(csv_fields(rows[1])[0] == "view_00.png");
  CHECK(csv_fields(rows[2])[0] == "view_08.png");
  CHECK(csv_fields(rows[3])[0] == "mean");

  // The stored PNGs are 8-bit quantizations of the render, so PSNR is
  // limited only by quantization noise.
  double sum_psnr = 0;
  for (int row : {1, 2}) {
    auto fields = csv_fields(rows[row]);
    double p = std::stod(fields[1]), s = std::stod(fields[2]);
    CHECK(p > 45.0);
    CHECK(s > 0.99);
    CHECK(fields[3] == "n/a");
    sum_psnr += p;
  }
  CHECK(std::stod(csv_fields(rows[3])[1]) ==
        doctest::Approx(sum_psnr / 2.0).epsilon(1e-3));
}

TEST_CASE("cli: inspect reports the unit-square proximity scores") {
  fs::path dir = fresh_dir("inspect_square");
  fs::path ply = dir / "square.ply";
  export_ply(unit_square_set(), ply.string());
  fs::path csv = dir / "graph.csv";

  RunResult r = run_cli("inspect --ply " + ply.string() + " --k 3 --out " +
                            csv.string(),
                        dir / "scratch");
  REQUIRE(r.exit_code == 0);

  auto rows = lines_of(slurp(csv));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "index,neighbors,distances,score");
  // Every corner's three neighbors sit at distances 1, 1, sqrt(2).
  const float expected = (1.f + 1.f + std::sqrt(2.f)) / 3.f;
  for (int row = 1; row <= 4; ++row) {
    auto fields = csv_fields(rows[row]);
    REQUIRE(fields.size() == 4);
    CHECK(std::stof(fields[3]) == doctest::Approx(expected).epsilon(1e-5));
  }
  // Scores ~1.14 sit below the default threshold of 10.
  CHECK(r.err.find("unpool-eligible gaussians (score > 10): 0") !=
        std::string::npos);

  r = run_cli("inspect --ply " + ply.string() + " --k 3 --tprox 1.0 --out " +
                  csv.string(),
              dir / "scratch");
  REQUIRE(r.exit_code == 0);
  CHECK(r.err.find("unpool-eligible gaussians (score > 1): 4") !=
        std::string::npos);
}

TEST_CASE("cli: inspect on a tiny PLY emits a header-only CSV") {
  fs::path dir = fresh_dir("inspect_empty");
  fs::path ply = dir / "empty.ply";
  GaussianSet empty;
  export_ply(empty, ply.string());
  fs::path csv = dir / "graph.csv";
  RunResult r = run_cli("inspect --ply " + ply.string() + " --out " +
                            csv.string(),
                        dir / "scratch");
  REQUIRE(r.exit_code == 0);
  auto rows = lines_of(slurp(csv));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0] == "index,neighbors,distances,score");
}

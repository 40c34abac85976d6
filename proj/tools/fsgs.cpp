#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fsgs/colmap.hpp"
#include "fsgs/densify.hpp"
#include "fsgs/init_points.hpp"
#include "fsgs/io.hpp"
#include "fsgs/metrics.hpp"
#include "fsgs/rasterizer.hpp"
#include "fsgs/trainer.hpp"

namespace {

using namespace fsgs;

std::string stem_of(const std::string& name) {
  return std::filesystem::path(name).stem().string();
}

// Image ids sorted by file name; the split rule indexes this order.
std::vector<int> ordered_image_ids(const SfmModel& model) {
  std::vector<std::pair<std::string, int>> items;
  for (const auto& [id, img] : model.images) items.emplace_back(img.name, id);
  std::sort(items.begin(), items.end());
  std::vector<int> ids;
  for (auto& [name, id] : items) ids.push_back(id);
  return ids;
}

// Every 8th image is a test view; training views are sampled evenly from
// the remainder.
void split_views(const std::vector<int>& ordered, int train_count,
                 std::vector<int>& train_ids, std::vector<int>& test_ids) {
  std::vector<int> pool;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (i % 8 == 0)
      test_ids.push_back(ordered[i]);
    else
      pool.push_back(ordered[i]);
  }
  if (train_count <= 0 || train_count >= int(pool.size())) {
    train_ids = pool;
    return;
  }
  for (int k = 0; k < train_count; ++k) {
    double t = train_count == 1 ? 0.0 : double(k) / double(train_count - 1);
    train_ids.push_back(pool[std::size_t(std::lround(t * double(pool.size() - 1)))]);
  }
}

ColmapFormat detect_format(const std::string& dir) {
  if (std::filesystem::exists(dir + "/cameras.bin")) return ColmapFormat::kBinary;
  return ColmapFormat::kText;
}

struct TrainArgs {
  std::string colmap, images, priors, config, out, estimator_cmd;
  int views = 0;
  int downsample = 1;
  long seed = -1;
};

int cmd_train(const TrainArgs& a) {
  TrainingConfig cfg = a.config.empty() ? TrainingConfig{} : parse_config_file(a.config);
  if (a.seed >= 0) cfg.seed = unsigned(a.seed);

  SfmModel model = parse_colmap_model(a.colmap, detect_format(a.colmap));
  auto ordered = ordered_image_ids(model);
  std::vector<int> train_ids, test_ids;
  split_views(ordered, a.views, train_ids, test_ids);
  if (train_ids.empty()) throw ParseError("train: no training views after split");

  std::vector<TrainView> views;
  for (int id : train_ids) {
    TrainView v;
    v.name = model.images.at(id).name;
    v.camera = camera_from_sfm(model, id, a.downsample);
    v.image = load_image(a.images + "/" + v.name, a.downsample);
    if (v.image.width != v.camera.width || v.image.height != v.camera.height)
      throw IoError("train: image/camera dimension mismatch for " + v.name);
    if (!a.priors.empty()) {
      auto prior = load_depth_prior(a.priors + "/" + stem_of(v.name) + ".pfm");
      if (prior.values.width != v.camera.width || prior.values.height != v.camera.height)
        throw IoError("train: prior dimension mismatch for " + v.name);
      v.prior = DepthPrior{std::move(prior.values), std::move(prior.mask)};
    }
    views.push_back(std::move(v));
    std::cout << "training view " << id << " (" << views.back().name << ")\n";
  }

  GaussianSet init = init_gaussians_from_points(model.points, cfg.k_neighbors);

  std::unique_ptr<DepthEstimator> estimator;
  if (!a.estimator_cmd.empty())
    estimator = std::make_unique<ExternalCommandEstimator>(a.estimator_cmd);

  std::filesystem::create_directories(a.out);
  Trainer trainer(std::move(init), std::move(views), cfg, estimator.get(),
                  a.out + "/checkpoints");
  trainer.run();

  export_ply(trainer.set(), a.out + "/point_cloud.ply");
  std::ofstream log(a.out + "/train_log.csv");
  log << "iter,l1,dssim,depth,pseudo_depth,total,gaussians,densified,unpooled,"
         "pruned,wall_ms\n";
  for (const auto& e : trainer.log().entries)
    log << e.iter << "," << e.loss.l1 << "," << e.loss.dssim << "," << e.loss.depth
        << "," << e.loss.pseudo_depth << "," << e.loss.total << "," << e.gaussians
        << "," << e.densified << "," << e.unpooled << "," << e.pruned << ","
        << e.wall_ms << "\n";
  std::cout << "final gaussians: " << trainer.set().size() << "\n";
  return 0;
}

Camera camera_from_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("render: cannot open pose file " + path);
  double fx, fy, cx, cy, qw, qx, qy, qz, tx, ty, tz;
  int w, h;
  if (!(in >> fx >> fy >> cx >> cy >> w >> h >> qw >> qx >> qy >> qz >> tx >> ty >> tz))
    throw IoError("render: malformed pose file " + path);
  Camera cam;
  cam.focal = Vec2<float>(float(fx), float(fy));
  cam.principal = Vec2<float>(float(cx), float(cy));
  cam.width = w;
  cam.height = h;
  cam.rot = quat_to_rot<double>({qw, qx, qy, qz}).cast<float>();
  cam.trans = Vec3<float>(float(tx), float(ty), float(tz));
  return cam;
}

struct RenderArgs {
  std::string ply, colmap, pose, out, depth_out;
  int image_id = -1;
  int downsample = 1;
  int sh_degree = kShDegreeMax;
  bool white_bg = false;
};

int cmd_render(const RenderArgs& a) {
  GaussianSet set = import_ply(a.ply);
  Camera cam;
  if (!a.colmap.empty()) {
    SfmModel model = parse_colmap_model(a.colmap, detect_format(a.colmap));
    cam = camera_from_sfm(model, a.image_id, a.downsample);
  } else if (!a.pose.empty()) {
    cam = camera_from_pose_file(a.pose);
  } else {
    throw IoError("render: need either --camera <colmap dir> or --pose <file>");
  }
  auto out = render_forward(set, cam, a.sh_degree, a.white_bg);
  save_image(a.out, Image{cam.width, cam.height, out.color});
  if (!a.depth_out.empty())
    save_pfm(a.depth_out, Grid{cam.width, cam.height, out.depth});
  return 0;
}

struct EvalArgs {
  std::string ply, colmap, images, out;
  int downsample = 1;
  int sh_degree = kShDegreeMax;
  bool white_bg = false;
};

int cmd_eval(const EvalArgs& a) {
  GaussianSet set = import_ply(a.ply);
  SfmModel model = parse_colmap_model(a.colmap, detect_format(a.colmap));
  auto ordered = ordered_image_ids(model);
  std::vector<int> train_ids, test_ids;
  split_views(ordered, 0, train_ids, test_ids);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    os = &file;
  }
  *os << "view,psnr,ssim,lpips,render_ms\n";
  double sum_psnr = 0, sum_ssim = 0, sum_ms = 0;
  for (int id : test_ids) {
    Camera cam = camera_from_sfm(model, id, a.downsample);
    Image gt = load_image(a.images + "/" + model.images.at(id).name, a.downsample);
    auto t0 = std::chrono::steady_clock::now();
    auto out = render_forward(set, cam, a.sh_degree, a.white_bg);
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    Image pred{cam.width, cam.height, out.color};
    float p = psnr(pred, gt), s = ssim(pred, gt);
    *os << model.images.at(id).name << "," << p << "," << s << ",n/a," << ms << "\n";
    sum_psnr += p;
    sum_ssim += s;
    sum_ms += ms;
  }
  double n = double(test_ids.size());
  *os << "mean," << sum_psnr / n << "," << sum_ssim / n << ",n/a," << sum_ms / n << "\n";
  return 0;
}

struct InspectArgs {
  std::string ply, out;
  int k = 3;
  float t_prox = 10.f;
};

int cmd_inspect(const InspectArgs& a) {
  GaussianSet set = import_ply(a.ply);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    os = &file;
  }
  *os << "index,neighbors,distances,score\n";
  if (set.size() <= std::size_t(a.k)) {
    std::cerr << "inspect: fewer than k+1 gaussians, empty graph\n";
    return 0;
  }
  auto graph = build_proximity_graph(set, a.k);

  std::size_t eligible = 0;
  float max_score = 0.f;
  for (float s : graph.scores) max_score = std::max(max_score, s);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    std::ostringstream nbrs, dists;
    for (int j = 0; j < a.k; ++j) {
      nbrs << (j ? " " : "") << graph.neighbors_of(i)[j];
      dists << (j ? " " : "") << graph.distances_of(i)[j];
    }
    *os << i << "," << nbrs.str() << "," << dists.str() << "," << graph.scores[i]
        << "\n";
    if (graph.scores[i] > a.t_prox) ++eligible;
  }

  // Score histogram over 10 uniform bins.
  std::vector<int> hist(10, 0);
  for (float s : graph.scores) {
    int bin = max_score > 0 ? std::min(9, int(s / max_score * 10.f)) : 0;
    ++hist[bin];
  }
  std::cerr << "score histogram (bin width " << max_score / 10.f << "):";
  for (int h : hist) std::cerr << " " << h;
  std::cerr << "\nunpool-eligible gaussians (score > " << a.t_prox
            << "): " << eligible << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FSGS: few-shot Gaussian splatting trainer/renderer"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Optimize a splat model from COLMAP data");
  train->add_option("--colmap", ta.colmap, "COLMAP model directory")->required();
  train->add_option("--images", ta.images, "Image directory")->required();
  train->add_option("--priors", ta.priors, "Directory of <image-stem>.pfm depth priors");
  train->add_option("--config", ta.config, "key = value training config file");
  train->add_option("--out", ta.out, "Output directory")->required();
  train->add_option("--views", ta.views, "Number of training views (0 = all non-test)");
  train->add_option("--downsample", ta.downsample, "Integer image downsample factor");
  train->add_option("--seed", ta.seed, "RNG seed override");
  train->add_option("--estimator", ta.estimator_cmd,
                    "External depth command with {input}/{output} placeholders");

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Render a PLY checkpoint");
  render->add_option("--ply", ra.ply, "Splat PLY file")->required();
  render->add_option("--camera", ra.colmap, "COLMAP directory (with --image-id)");
  render->add_option("--image-id", ra.image_id, "COLMAP image id");
  render->add_option("--pose", ra.pose,
                     "Pose file: fx fy cx cy w h qw qx qy qz tx ty tz");
  render->add_option("--out", ra.out, "Output PNG")->required();
  render->add_option("--depth", ra.depth_out, "Optional output depth PFM");
  render->add_option("--downsample", ra.downsample, "Integer downsample factor");
  render->add_option("--sh-degree", ra.sh_degree, "Active SH degree (0-3)");
  render->add_flag("--white-bg", ra.white_bg, "Blend over a white background");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM over the test split");
  eval->add_option("--ply", ea.ply, "Splat PLY file")->required();
  eval->add_option("--colmap", ea.colmap, "COLMAP model directory")->required();
  eval->add_option("--images", ea.images, "Image directory")->required();
  eval->add_option("--out", ea.out, "Output CSV (default: stdout)");
  eval->add_option("--downsample", ea.downsample, "Integer downsample factor");
  eval->add_option("--sh-degree", ea.sh_degree, "Active SH degree (0-3)");
  eval->add_flag("--white-bg", ea.white_bg, "Blend over a white background");

  InspectArgs ia;
  auto* inspect = app.add_subcommand("inspect", "Dump the proximity graph as CSV");
  inspect->add_option("--ply", ia.ply, "Splat PLY file")->required();
  inspect->add_option("--out", ia.out, "Output CSV (default: stdout)");
  inspect->add_option("--k", ia.k, "Neighbor count");
  inspect->add_option("--tprox", ia.t_prox, "Proximity threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return cmd_train(ta);
    if (*render) return cmd_render(ra);
    if (*eval) return cmd_eval(ea);
    if (*inspect) return cmd_inspect(ia);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

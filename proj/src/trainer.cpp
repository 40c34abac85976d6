#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fsgs/io.hpp"
#include "fsgs/losses.hpp"
#include "fsgs/pseudo_view.hpp"
#include "fsgs/trainer.hpp"

namespace fsgs {

float compute_scene_extent(const std::vector<Camera>& cameras) {
  if (cameras.empty()) return 1.f;
  Vec3<float> centroid = Vec3<float>::Zero();
  for (const auto& c : cameras) centroid += c.center();
  centroid /= float(cameras.size());
  float radius = 0.f;
  for (const auto& c : cameras)
    radius = std::max(radius, (c.center() - centroid).norm());
  return radius > 0.f ? radius * 1.1f : 1.f;
}

Trainer::Trainer(GaussianSet initial, std::vector<TrainView> views,
                 TrainingConfig config, DepthEstimator* pseudo_estimator,
                 std::string checkpoint_dir)
    : set_(std::move(initial)),
      views_(std::move(views)),
      cfg_(std::move(config)),
      estimator_(pseudo_estimator),
      checkpoint_dir_(std::move(checkpoint_dir)),
      rng_(cfg_.seed) {
  cfg_.validate();
  if (cfg_.threads > 0) set_num_threads(cfg_.threads);
  optimizer_.resize(set_.size());
  stats_.resize(set_.size());
  for (const auto& v : views_) train_cameras_.push_back(v.camera);
  scene_extent_ = compute_scene_extent(train_cameras_);
  pseudo_delta_ = cfg_.pseudo_noise_delta >= 0.f
                      ? cfg_.pseudo_noise_delta
                      : 0.03f * median_camera_distance(train_cameras_);
  view_order_.resize(views_.size());
  std::iota(view_order_.begin(), view_order_.end(), 0);
}

int Trainer::active_sh_degree() const {
  long steps = std::max<long>(0, iter_ - 1) / cfg_.sh_upgrade_interval;
  return int(std::min<long>(steps, cfg_.sh_degree));
}

LossBreakdown Trainer::step() {
  if (views_.empty()) throw InvalidParameter("trainer: no training views");
  auto t0 = std::chrono::steady_clock::now();
  ++iter_;

  // Shuffled-epoch view sampling.
  if (view_cursor_ == 0) std::shuffle(view_order_.begin(), view_order_.end(), rng_);
  const TrainView& view = views_[view_order_[view_cursor_]];
  view_cursor_ = (view_cursor_ + 1) % view_order_.size();

  int degree = active_sh_degree();
  auto out = render_forward(set_, view.camera, degree, cfg_.white_background);

  LossBreakdown loss;
  std::vector<float> dL_dcolor(out.color.size(), 0.f);
  std::vector<float> dL_ddepth(out.depth.size(), 0.f);

  {
    std::vector<float> g1, g2;
    loss.l1 = l1_loss_backward(out.color, view.image.data, g1);
    loss.dssim = dssim_loss_backward(out.color, view.image.data, view.camera.width,
                                     view.camera.height, g2);
    for (std::size_t i = 0; i < dL_dcolor.size(); ++i)
      dL_dcolor[i] = cfg_.lambda1 * g1[i] + cfg_.lambda2 * g2[i];
  }
  if (cfg_.lambda3 > 0.f && !view.prior.mask.empty()) {
    std::vector<float> gd;
    loss.depth = depth_regularization_loss(
        out.depth, out.alpha, view.prior.disparity.data, view.prior.mask,
        &log_.degenerate_depth, &gd, cfg_.depth_alpha_threshold,
        cfg_.depth_correlate_disparity);
    for (std::size_t i = 0; i < dL_ddepth.size(); ++i)
      dL_ddepth[i] = cfg_.lambda3 * gd[i];
  }

  auto grads = render_backward(set_, view.camera, out, dL_dcolor, dL_ddepth);

  // Pseudo-view depth regularization after the warmup.
  if (iter_ > cfg_.pseudo_from && estimator_ && views_.size() >= 2 &&
      cfg_.lambda4 > 0.f) {
    PseudoCamera pseudo = sample_pseudo_camera(train_cameras_, rng_, pseudo_delta_);
    auto pout = render_forward(set_, pseudo.camera, degree, cfg_.white_background);
    Image rendered{pseudo.camera.width, pseudo.camera.height, pout.color};
    try {
      DepthPrior prior = estimator_->estimate(rendered, pseudo.camera);
      std::vector<float> gd;
      loss.pseudo_depth = depth_regularization_loss(
          pout.depth, pout.alpha, prior.disparity.data, prior.mask,
          &log_.degenerate_depth, &gd, cfg_.depth_alpha_threshold,
          cfg_.depth_correlate_disparity);
      std::vector<float> zero_color(pout.color.size(), 0.f);
      for (auto& g : gd) g *= cfg_.lambda4;
      auto pgrads = render_backward(set_, pseudo.camera, pout, zero_color, gd);
      for (std::size_t i = 0; i < set_.size(); ++i) {
        grads.mu[i] += pgrads.mu[i];
        grads.log_scale[i] += pgrads.log_scale[i];
        grads.rotation[i] += pgrads.rotation[i];
        grads.opacity_logit[i] += pgrads.opacity_logit[i];
        grads.grad2d_sum[i] += pgrads.grad2d_sum[i];
        grads.hits[i] += pgrads.hits[i];
      }
      for (std::size_t i = 0; i < grads.sh.size(); ++i) grads.sh[i] += pgrads.sh[i];
    } catch (const EstimatorError&) {
      ++log_.estimator_failures;  // pseudo term skipped, training continues
    }
  }

  for (std::size_t i = 0; i < set_.size(); ++i) {
    stats_.grad2d_sum[i] += grads.grad2d_sum[i];
    stats_.hits[i] += grads.hits[i];
  }

  loss.total = cfg_.lambda1 * loss.l1 + cfg_.lambda2 * loss.dssim +
               cfg_.lambda3 * loss.depth + cfg_.lambda4 * loss.pseudo_depth;
  // An exactly-zero loss carries no signal, only float cancellation noise;
  // stepping on it would still move parameters a full Adam step.
  if (loss.total != 0.f) {
    GroupLearningRates lrs = cfg_.lr;
    lrs.position = position_lr_at(cfg_.lr.position, cfg_.lr_position_final, iter_,
                                  cfg_.total_iters);
    optimizer_.adam_update(set_, grads, lrs);
  }
  if (!std::isfinite(loss.total)) {
    std::ostringstream os;
    os << "trainer: non-finite loss at iteration " << iter_ << " (l1=" << loss.l1
       << " dssim=" << loss.dssim << " depth=" << loss.depth
       << " pseudo=" << loss.pseudo_depth << ", " << set_.size()
       << " gaussians, view " << view.camera.id << ")";
    throw std::runtime_error(os.str());
  }

  TrainLogEntry entry;
  entry.iter = iter_;
  entry.loss = loss;

  if (std::find(cfg_.opacity_reset_iters.begin(), cfg_.opacity_reset_iters.end(),
                iter_) != cfg_.opacity_reset_iters.end()) {
    reset_opacity(set_, cfg_.opacity_reset_value);
    optimizer_.reset_opacity_moments();
  }

  if (iter_ > cfg_.densify_from && iter_ % cfg_.densify_interval == 0)
    densify_event(entry);

  entry.gaussians = set_.size();
  entry.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  log_.entries.push_back(entry);

  if (!checkpoint_dir_.empty() && iter_ % cfg_.checkpoint_interval == 0) checkpoint();
  return loss;
}

void Trainer::densify_event(TrainLogEntry& entry) {
  std::size_t before = set_.size();
  auto rec = gradient_densify_clone_split(set_, stats_, cfg_.t_pos, scene_extent_,
                                          rng_, cfg_.split_factor,
                                          cfg_.densify_small_fraction);
  optimizer_.apply_mutation(rec);
  entry.densified = long(set_.size()) - long(before);

  if (set_.size() > std::size_t(cfg_.k_neighbors)) {
    auto graph = build_proximity_graph(set_, cfg_.k_neighbors);
    before = set_.size();
    rec = gaussian_unpool(set_, graph, cfg_.t_prox);
    optimizer_.apply_mutation(rec);
    entry.unpooled = long(set_.size()) - long(before);
  }

  before = set_.size();
  rec = prune(set_, cfg_.prune_min_opacity,
              cfg_.prune_max_scale_fraction * scene_extent_);
  optimizer_.apply_mutation(rec);
  entry.pruned = long(before) - long(set_.size());

  if (optimizer_.size() != set_.size())
    throw std::logic_error("trainer: optimizer state desynchronized");
  stats_.resize(set_.size());
}

void Trainer::checkpoint() const {
  std::filesystem::create_directories(checkpoint_dir_);
  std::string stem = checkpoint_dir_ + "/iter_" + std::to_string(iter_);
  export_ply(set_, stem + ".ply");
  optimizer_.save(stem + ".optstate");
}

void Trainer::run() {
  while (iter_ < cfg_.total_iters) step();
}

}  // namespace fsgs

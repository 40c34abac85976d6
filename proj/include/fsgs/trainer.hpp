#pragma once

#include <random>
#include <string>
#include <vector>

#include "fsgs/adam.hpp"
#include "fsgs/config.hpp"
#include "fsgs/densify.hpp"
#include "fsgs/depth_estimator.hpp"
#include "fsgs/image.hpp"

namespace fsgs {

struct TrainView {
  Camera camera;
  Image image;
  DepthPrior prior;  // empty mask disables the depth term for this view
  std::string name;
};

struct LossBreakdown {
  float l1 = 0.f;
  float dssim = 0.f;
  float depth = 0.f;
  float pseudo_depth = 0.f;
  float total = 0.f;
};

struct TrainLogEntry {
  long iter = 0;
  LossBreakdown loss;
  std::size_t gaussians = 0;
  long densified = 0;   // net clone/split additions
  long unpooled = 0;
  long pruned = 0;
  double wall_ms = 0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;  // append-only
  std::size_t degenerate_depth = 0;
  std::size_t estimator_failures = 0;
};

// Full optimization loop: per-iteration photometric + depth losses, pseudo
// views after their warmup, Adam per parameter group, densify/unpool/prune
// events on the configured cadence, opacity resets, checkpoints.
class Trainer {
 public:
  Trainer(GaussianSet initial, std::vector<TrainView> views, TrainingConfig config,
          DepthEstimator* pseudo_estimator = nullptr,
          std::string checkpoint_dir = "");

  // Runs one iteration; the iteration counter is 1-based after the call.
  LossBreakdown step();

  // Runs the remaining iterations of the schedule.
  void run();

  long iteration() const { return iter_; }
  const GaussianSet& set() const { return set_; }
  GaussianSet& mutable_set() { return set_; }
  const TrainLog& log() const { return log_; }
  const OptimizerState& optimizer() const { return optimizer_; }
  float scene_extent() const { return scene_extent_; }
  int active_sh_degree() const;

 private:
  void densify_event(TrainLogEntry& entry);
  void checkpoint() const;

  GaussianSet set_;
  std::vector<TrainView> views_;
  TrainingConfig cfg_;
  DepthEstimator* estimator_;
  std::string checkpoint_dir_;

  OptimizerState optimizer_;
  DensifyStats stats_;
  TrainLog log_;
  std::mt19937 rng_;
  std::vector<int> view_order_;
  std::size_t view_cursor_ = 0;
  long iter_ = 0;
  float scene_extent_ = 1.f;
  float pseudo_delta_ = 0.f;
  std::vector<Camera> train_cameras_;
};

// Bounding-sphere radius of the camera centers times 1.1.
float compute_scene_extent(const std::vector<Camera>& cameras);

}  // namespace fsgs

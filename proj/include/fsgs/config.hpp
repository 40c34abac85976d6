#pragma once

#include <string>
#include <vector>

#include "fsgs/adam.hpp"

namespace fsgs {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingConfig {
  // Loss weights; lambda4 applies to the pseudo-view depth term.
  float lambda1 = 0.8f;
  float lambda2 = 0.2f;
  float lambda3 = 0.05f;
  float lambda4 = 0.05f;

  int k_neighbors = 3;
  float t_prox = 10.f;
  float t_pos = 2e-4f;

  long total_iters = 10000;
  long densify_from = 500;
  long densify_interval = 100;
  long pseudo_from = 2000;
  std::vector<long> opacity_reset_iters = {2000, 5000, 7000};
  float opacity_reset_value = 0.05f;
  long sh_upgrade_interval = 500;
  int sh_degree = 3;
  long checkpoint_interval = 1000;

  GroupLearningRates lr;
  float lr_position_final = 1.6e-6f;

  // Pseudo-view positional noise; < 0 means 0.03 x median camera distance.
  float pseudo_noise_delta = -1.f;

  float prune_min_opacity = 0.005f;
  float prune_max_scale_fraction = 0.1f;   // of scene extent
  float densify_small_fraction = 0.01f;    // clone/split boundary
  float split_factor = 1.6f;
  float depth_alpha_threshold = 0.5f;
  bool depth_correlate_disparity = true;   // invert rendered depth before corr
  bool white_background = false;

  unsigned seed = 0;
  int threads = 0;  // 0 = hardware default

  void validate() const;
};

// Plain-text key = value config, '#' comments; unknown keys are errors.
TrainingConfig parse_config_file(const std::string& path);
TrainingConfig parse_config_text(const std::string& text, const std::string& origin);

}  // namespace fsgs

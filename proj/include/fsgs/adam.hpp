#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fsgs/densify.hpp"
#include "fsgs/rasterizer.hpp"

namespace fsgs {

struct GroupLearningRates {
  float position = 1.6e-4f;
  float sh = 2.5e-3f;
  float opacity = 5e-2f;
  float scale = 5e-3f;
  float rotation = 1e-3f;
};

// Adam moments for the five parameter groups, row-aligned with the
// GaussianSet. beta1 = 0.9, beta2 = 0.999, eps = 1e-15.
class OptimizerState {
 public:
  void resize(std::size_t n);
  std::size_t size() const { return count_; }
  long step_count() const { return step_; }

  // Mirrors a densify/unpool/prune mutation: surviving rows keep their
  // moments, appended rows start at zero.
  void apply_mutation(const MutationRecord& rec);

  // Zeroes the opacity moments (used after opacity resets).
  void reset_opacity_moments();

  void adam_update(GaussianSet& set, const GradientBufferT<float>& grads,
                   const GroupLearningRates& lrs);

  // Binary sidecar with a versioned header, for checkpoint resume.
  void save(const std::string& path) const;
  static OptimizerState load(const std::string& path);

 private:
  std::size_t count_ = 0;
  long step_ = 0;
  // Flat per-group moment arrays, strides 3 / 48*... / 1 / 3 / 4 per row.
  std::vector<float> m_mu_, v_mu_;
  std::vector<float> m_sh_, v_sh_;
  std::vector<float> m_op_, v_op_;
  std::vector<float> m_sc_, v_sc_;
  std::vector<float> m_rot_, v_rot_;
};

// Exponential position learning-rate decay from lr0 to lr_final over
// total_iters; other groups stay constant.
float position_lr_at(float lr0, float lr_final, long iter, long total_iters);

}  // namespace fsgs

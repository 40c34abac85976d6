#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

#include "fsgs/densify.hpp"

namespace fsgs {

namespace {

bool has_edge(const ProximityGraph& graph, std::size_t from, int to) {
  const int* nb = graph.neighbors_of(from);
  for (int j = 0; j < graph.k; ++j)
    if (nb[j] == to) return true;
  return false;
}

}  // namespace

MutationRecord gaussian_unpool(GaussianSet& set, const ProximityGraph& graph,
                               float t_prox) {
  if (graph.size() != set.size())
    throw InvalidParameter("gaussian_unpool: stale proximity graph");

  GaussianSet fresh;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!(graph.scores[i] > t_prox)) continue;
    for (int e = 0; e < graph.k; ++e) {
      int j = graph.neighbors_of(i)[e];
      // A reciprocal eligible edge yields one midpoint; the lower-index
      // source keeps its directed edge.
      if (j < int(i) && graph.scores[j] > t_prox && has_edge(graph, j, int(i)))
        continue;
      std::size_t r = fresh.size();
      fresh.resize(r + 1);
      fresh.mu[r] = (set.mu[i] + set.mu[j]) * 0.5f;
      fresh.log_scale[r] = set.log_scale[j];
      fresh.opacity_logit[r] = set.opacity_logit[j];
      // rotation stays identity, SH stays zero (resize defaults)
    }
  }
  MutationRecord rec;
  rec.appended = fresh.size();
  set.append(fresh);
  return rec;
}

MutationRecord gradient_densify_clone_split(GaussianSet& set, const DensifyStats& stats,
                                            float t_pos, float scene_extent,
                                            std::mt19937& rng, float split_factor,
                                            float small_fraction) {
  if (stats.grad2d_sum.size() != set.size())
    throw InvalidParameter("gradient_densify_clone_split: stats length mismatch");

  std::size_t n = set.size();
  MutationRecord rec;
  rec.keep.assign(n, 1);
  GaussianSet fresh;
  std::normal_distribution<float> unit_normal(0.f, 1.f);

  for (std::size_t i = 0; i < n; ++i) {
    if (!(stats.mean_grad(i) > t_pos)) continue;
    Vec3<float> scale = set.scale(i);
    if (scale.maxCoeff() < small_fraction * scene_extent) {
      // Clone: duplicate in place.
      std::size_t r = fresh.size();
      fresh.resize(r + 1);
      fresh.mu[r] = set.mu[i];
      fresh.log_scale[r] = set.log_scale[i];
      fresh.rotation[r] = set.rotation[i];
      fresh.opacity_logit[r] = set.opacity_logit[i];
      for (int c = 0; c < kShCoeffCount; ++c)
        fresh.sh[r * kShCoeffCount + c] = set.sh[i * kShCoeffCount + c];
    } else {
      // Split: two samples from the Gaussian's own distribution, shrunk.
      Mat3<float> rot = quat_to_rot(set.rotation[i]);
      Vec3<float> shrunk = set.log_scale[i].array() - std::log(split_factor);
      for (int child = 0; child < 2; ++child) {
        Vec3<float> draw(unit_normal(rng), unit_normal(rng), unit_normal(rng));
        std::size_t r = fresh.size();
        fresh.resize(r + 1);
        fresh.mu[r] = set.mu[i] + rot * (scale.asDiagonal() * draw);
        fresh.log_scale[r] = shrunk;
        fresh.rotation[r] = set.rotation[i];
        fresh.opacity_logit[r] = set.opacity_logit[i];
        for (int c = 0; c < kShCoeffCount; ++c)
          fresh.sh[r * kShCoeffCount + c] = set.sh[i * kShCoeffCount + c];
      }
      rec.keep[i] = 0;
    }
  }
  set.filter(rec.keep);
  rec.appended = fresh.size();
  set.append(fresh);
  return rec;
}

MutationRecord prune(GaussianSet& set, float min_opacity, float max_world_scale) {
  MutationRecord rec;
  rec.keep.assign(set.size(), 1);
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.opacity(i) < min_opacity || set.scale(i).maxCoeff() > max_world_scale)
      rec.keep[i] = 0;
  }
  set.filter(rec.keep);
  return rec;
}

void reset_opacity(GaussianSet& set, float value) {
  float l = logit(value);
  for (auto& o : set.opacity_logit) o = l;
}

}  // namespace fsgs

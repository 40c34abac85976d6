#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fsgs/gaussian_set.hpp"

namespace fsgs {

// Directed K-nearest-neighbor graph over Gaussian centers. Neighbor lists
// are sorted by ascending distance, ties broken by index; score is the mean
// of the K distances.
struct ProximityGraph {
  int k = 0;
  std::vector<int> neighbors;      // size() * k
  std::vector<float> distances;    // size() * k
  std::vector<float> scores;

  std::size_t size() const { return scores.size(); }
  const int* neighbors_of(std::size_t i) const { return &neighbors[i * k]; }
  const float* distances_of(std::size_t i) const { return &distances[i * k]; }
};

// Exact k-NN (kd-tree accelerated) on the Gaussian centers.
ProximityGraph build_proximity_graph(const GaussianSet& set, int k);
ProximityGraph build_proximity_graph(const std::vector<Vec3<float>>& points, int k);

std::vector<float> proximity_scores(const ProximityGraph& graph);

// Accumulated view-space position-gradient stats between densify events.
struct DensifyStats {
  std::vector<float> grad2d_sum;
  std::vector<std::uint32_t> hits;

  void resize(std::size_t n) {
    grad2d_sum.assign(n, 0.f);
    hits.assign(n, 0);
  }
  float mean_grad(std::size_t i) const {
    return hits[i] ? grad2d_sum[i] / float(hits[i]) : 0.f;
  }
};

// How a mutation changed the row layout, so optimizer state can follow:
// surviving pre-mutation rows keep their order, then `appended` fresh rows.
struct MutationRecord {
  std::vector<char> keep;      // empty means every pre-mutation row kept
  std::size_t appended = 0;
};

// Grows a midpoint Gaussian on every eligible proximity edge. Reciprocal
// eligible edge pairs produce a single midpoint (the lower-index source's
// edge survives); originals are untouched.
MutationRecord gaussian_unpool(GaussianSet& set, const ProximityGraph& graph,
                               float t_prox);

// 3D-GS style clone/split on mean position-gradient magnitude.
MutationRecord gradient_densify_clone_split(GaussianSet& set, const DensifyStats& stats,
                                            float t_pos, float scene_extent,
                                            std::mt19937& rng,
                                            float split_factor = 1.6f,
                                            float small_fraction = 0.01f);

MutationRecord prune(GaussianSet& set, float min_opacity, float max_world_scale);

void reset_opacity(GaussianSet& set, float value);

}  // namespace fsgs

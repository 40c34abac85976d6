#pragma once

#include <random>
#include <vector>

#include "fsgs/camera.hpp"

namespace fsgs {

struct PseudoCamera {
  Camera camera;
  int parent_a = -1;  // anchor training view
  int parent_b = -1;  // its nearest neighbor
  Vec3<float> noise = Vec3<float>::Zero();
};

// Virtual camera between a random training view and its nearest neighbor
// (by center distance): hemisphere-aligned quaternion average for rotation,
// center midpoint plus N(0, delta^2 I) positional noise, intrinsics copied.
// With global_closest_pair the globally closest camera pair is always used.
PseudoCamera sample_pseudo_camera(const std::vector<Camera>& cameras, std::mt19937& rng,
                                  float delta, bool global_closest_pair = false);

// Median pairwise camera-center distance; basis for the default noise scale.
float median_camera_distance(const std::vector<Camera>& cameras);

}  // namespace fsgs

#pragma once

#include <vector>

#include "fsgs/gaussian_set.hpp"

namespace fsgs {

struct SfmPoint;

// One Gaussian per SfM point: gray-offset DC color from the point's RGB,
// isotropic scale at the mean k-NN distance, opacity 0.1.
GaussianSet init_gaussians_from_points(const std::vector<SfmPoint>& points, int k = 3);

}  // namespace fsgs

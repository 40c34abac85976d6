#include <cmath>

#include "fsgs/colmap.hpp"
#include "fsgs/densify.hpp"
#include "fsgs/init_points.hpp"
#include "fsgs/sh.hpp"

namespace fsgs {

GaussianSet init_gaussians_from_points(const std::vector<SfmPoint>& points, int k) {
  if (points.size() < std::size_t(k) + 1)
    throw InvalidParameter("init_gaussians_from_points: need at least k+1 points");

  std::vector<Vec3<float>> positions(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    positions[i] = points[i].xyz.cast<float>();
  ProximityGraph graph = build_proximity_graph(positions, k);

  GaussianSet set;
  set.resize(points.size());
  float opacity = logit(0.1f);
  for (std::size_t i = 0; i < points.size(); ++i) {
    set.mu[i] = positions[i];
    set.opacity_logit[i] = opacity;
    set.log_scale[i] = Vec3<float>::Constant(std::log(graph.scores[i]));
    for (int c = 0; c < 3; ++c)
      set.sh[i * kShCoeffCount][c] =
          (float(points[i].rgb[c]) / 255.f - 0.5f) / float(kSH0);
    // rotation identity, higher-order SH zero from resize()
  }
  return set;
}

}  // namespace fsgs

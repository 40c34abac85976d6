#include <Eigen/Geometry>

#include <algorithm>
#include <limits>

#include "fsgs/pseudo_view.hpp"

namespace fsgs {

namespace {

int nearest_camera(const std::vector<Camera>& cams, int anchor) {
  int best = -1;
  float best_d = std::numeric_limits<float>::infinity();
  Vec3<float> c = cams[anchor].center();
  for (int i = 0; i < int(cams.size()); ++i) {
    if (i == anchor) continue;
    float d = (cams[i].center() - c).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

PseudoCamera sample_pseudo_camera(const std::vector<Camera>& cameras, std::mt19937& rng,
                                  float delta, bool global_closest_pair) {
  if (cameras.size() < 2)
    throw InvalidParameter("sample_pseudo_camera: need at least two cameras");

  int a, b;
  if (global_closest_pair) {
    float best = std::numeric_limits<float>::infinity();
    a = 0;
    b = 1;
    for (int i = 0; i < int(cameras.size()); ++i)
      for (int j = i + 1; j < int(cameras.size()); ++j) {
        float d = (cameras[i].center() - cameras[j].center()).squaredNorm();
        if (d < best) {
          best = d;
          a = i;
          b = j;
        }
      }
  } else {
    std::uniform_int_distribution<int> pick(0, int(cameras.size()) - 1);
    a = pick(rng);
    b = nearest_camera(cameras, a);
  }

  Eigen::Quaternionf qa(cameras[a].rot), qb(cameras[b].rot);
  float sign = qa.dot(qb) < 0.f ? -1.f : 1.f;
  Eigen::Quaternionf avg(qa.coeffs() + sign * qb.coeffs());
  avg.normalize();

  PseudoCamera out;
  out.parent_a = cameras[a].id;
  out.parent_b = cameras[b].id;
  std::normal_distribution<float> gauss(0.f, delta);
  if (delta > 0.f) out.noise = Vec3<float>(gauss(rng), gauss(rng), gauss(rng));

  Vec3<float> center = (cameras[a].center() + cameras[b].center()) * 0.5f + out.noise;
  out.camera = cameras[a];
  out.camera.id = -1;
  out.camera.rot = avg.toRotationMatrix();
  out.camera.trans = -(out.camera.rot * center);
  return out;
}

float median_camera_distance(const std::vector<Camera>& cameras) {
  std::vector<float> dists;
  for (std::size_t i = 0; i < cameras.size(); ++i)
    for (std::size_t j = i + 1; j < cameras.size(); ++j)
      dists.push_back((cameras[i].center() - cameras[j].center()).norm());
  if (dists.empty()) return 0.f;
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  return dists[dists.size() / 2];
}

}  // namespace fsgs

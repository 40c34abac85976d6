#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsgs/camera.hpp"

namespace fsgs {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ColmapFormat { kText, kBinary };

struct SfmCamera {
  int id = -1;
  std::string model;  // SIMPLE_PINHOLE or PINHOLE
  int width = 0, height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
};

struct SfmImage {
  int id = -1;
  int camera_id = -1;
  Eigen::Vector4d quat;  // (w,x,y,z), world-to-camera
  Eigen::Vector3d trans;
  std::string name;
};

struct SfmPoint {
  Eigen::Vector3d xyz;
  std::uint8_t rgb[3];
  double error = 0;
};

struct SfmModel {
  std::map<int, SfmCamera> cameras;
  std::map<int, SfmImage> images;
  std::vector<SfmPoint> points;
};

// Reads cameras/images/points3D in COLMAP text or binary layout from `dir`.
SfmModel parse_colmap_model(const std::string& dir, ColmapFormat format);

// Pinhole Camera for an image of the model, optionally box-downsampled.
Camera camera_from_sfm(const SfmModel& model, int image_id, int downsample = 1);

}  // namespace fsgs

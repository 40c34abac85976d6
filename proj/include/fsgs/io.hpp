#pragma once

#include <string>

#include "fsgs/gaussian_set.hpp"
#include "fsgs/image.hpp"

namespace fsgs {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 8/16-bit PNG -> linear RGB in [0,1] (values divided by the channel max),
// with an optional integer box-downsample.
Image load_image(const std::string& path, int downsample_factor = 1);

// 8-bit RGB PNG; values clamped to [0,1] and rounded.
void save_image(const std::string& path, const Image& img);

// Per-view disparity prior loaded from a grayscale PFM.
struct DepthPriorFile {
  Grid values;             // top-down row-major disparity
  std::vector<char> mask;  // finite and > 0
};

DepthPriorFile load_depth_prior(const std::string& path);

// Grayscale PFM, bottom-up rows, scale sign encodes endianness.
Grid load_pfm(const std::string& path);
void save_pfm(const std::string& path, const Grid& grid);

// Splat checkpoint interchange: binary_little_endian PLY with the
// x/y/z, normals, f_dc, f_rest (channel-major), opacity, scale, rot layout.
void export_ply(const GaussianSet& set, const std::string& path);
GaussianSet import_ply(const std::string& path);

}  // namespace fsgs

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "fsgs/camera.hpp"
#include "fsgs/image.hpp"

namespace fsgs {

struct EstimatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Monocular disparity prior: inverse-depth grid, arbitrary affine scale,
// with a per-pixel validity mask.
struct DepthPrior {
  Grid disparity;
  std::vector<char> mask;
};

// Pluggable monocular depth source. The camera is passed alongside the image
// so pose-aware implementations (pre-computed files, synthetic oracles) can
// key off it; image-only estimators ignore it.
class DepthEstimator {
 public:
  virtual ~DepthEstimator() = default;
  virtual DepthPrior estimate(const Image& rgb, const Camera& camera) = 0;
};

// Looks up pre-computed <image-stem>.pfm files by the view's image name.
class FilePriorEstimator : public DepthEstimator {
 public:
  FilePriorEstimator(std::string directory, std::map<int, std::string> stem_by_view);
  DepthPrior estimate(const Image& rgb, const Camera& camera) override;

 private:
  std::string dir_;
  std::map<int, std::string> stems_;
};

// Writes the image to a temp PNG, runs a user command with {input}/{output}
// placeholders, reads the PFM it produces. Invocations are serialized.
class ExternalCommandEstimator : public DepthEstimator {
 public:
  explicit ExternalCommandEstimator(std::string command_template);
  DepthPrior estimate(const Image& rgb, const Camera& camera) override;

 private:
  std::string template_;
  std::mutex mutex_;
};

}  // namespace fsgs

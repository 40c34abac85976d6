#include <cstdlib>
#include <filesystem>

#include "fsgs/depth_estimator.hpp"
#include "fsgs/io.hpp"

namespace fsgs {

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos;
       pos += to.size())
    s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

FilePriorEstimator::FilePriorEstimator(std::string directory,
                                       std::map<int, std::string> stem_by_view)
    : dir_(std::move(directory)), stems_(std::move(stem_by_view)) {}

DepthPrior FilePriorEstimator::estimate(const Image& rgb, const Camera& camera) {
  auto it = stems_.find(camera.id);
  if (it == stems_.end())
    throw EstimatorError("file prior: no entry for view id " + std::to_string(camera.id));
  auto file = load_depth_prior(dir_ + "/" + it->second + ".pfm");
  if (file.values.width != rgb.width || file.values.height != rgb.height)
    throw EstimatorError("file prior: dimension mismatch for " + it->second);
  return {std::move(file.values), std::move(file.mask)};
}

ExternalCommandEstimator::ExternalCommandEstimator(std::string command_template)
    : template_(std::move(command_template)) {}

DepthPrior ExternalCommandEstimator::estimate(const Image& rgb, const Camera&) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto tmp = std::filesystem::temp_directory_path();
  std::string input = (tmp / "fsgs_estimator_in.png").string();
  std::string output = (tmp / "fsgs_estimator_out.pfm").string();
  save_image(input, rgb);
  std::string cmd = replace_all(replace_all(template_, "{input}", input), "{output}", output);
  int status = std::system(cmd.c_str());
  if (status != 0)
    throw EstimatorError("external estimator exited with status " + std::to_string(status));
  auto file = load_depth_prior(output);
  if (file.values.width != rgb.width || file.values.height != rgb.height)
    throw EstimatorError("external estimator: output dimension mismatch");
  return {std::move(file.values), std::move(file.mask)};
}

}  // namespace fsgs

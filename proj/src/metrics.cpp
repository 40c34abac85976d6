#include <cmath>
#include <limits>

#include "fsgs/losses.hpp"
#include "fsgs/metrics.hpp"

namespace fsgs {

float psnr(const Image& pred, const Image& gt) {
  if (pred.data.size() != gt.data.size() || pred.data.empty())
    throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    double d = double(pred.data[i]) - double(gt.data[i]);
    mse += d * d;
  }
  mse /= double(pred.data.size());
  if (mse == 0) return std::numeric_limits<float>::infinity();
  return float(10.0 * std::log10(1.0 / mse));
}

float ssim(const Image& pred, const Image& gt) {
  return ssim<float>(pred.data, gt.data, pred.width, pred.height);
}

}  // namespace fsgs

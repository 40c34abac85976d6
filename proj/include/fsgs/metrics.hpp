#pragma once

#include "fsgs/image.hpp"

namespace fsgs {

// 10*log10(1 / MSE) for images in [0,1]; +infinity when MSE is zero.
float psnr(const Image& pred, const Image& gt);

// Mean SSIM (shared implementation with the D-SSIM loss).
float ssim(const Image& pred, const Image& gt);

}  // namespace fsgs

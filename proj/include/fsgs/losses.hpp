#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fsgs {

inline constexpr double kDispEps = 1e-6;

// Mean absolute difference over all elements.
template <typename T>
T l1_loss(const std::vector<T>& pred, const std::vector<T>& gt) {
  if (pred.size() != gt.size() || pred.empty())
    throw std::invalid_argument("l1_loss: shape mismatch");
  T acc = T(0);
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - gt[i]);
  return acc / T(pred.size());
}

template <typename T>
T l1_loss_backward(const std::vector<T>& pred, const std::vector<T>& gt,
                   std::vector<T>& dL_dpred) {
  T loss = l1_loss(pred, gt);
  dL_dpred.assign(pred.size(), T(0));
  T inv = T(1) / T(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    T d = pred[i] - gt[i];
    dL_dpred[i] = d > T(0) ? inv : (d < T(0) ? -inv : T(0));
  }
  return loss;
}

namespace detail {

// 11-tap Gaussian window, sigma 1.5, normalized to sum 1.
template <typename T> const std::vector<T>& ssim_kernel() {
  static const std::vector<T> k = [] {
    std::vector<T> v(11);
    T sum = T(0);
    for (int i = 0; i < 11; ++i) {
      T d = T(i - 5);
      v[i] = std::exp(-d * d / (T(2) * T(1.5) * T(1.5)));
      sum += v[i];
    }
    for (auto& x : v) x /= sum;
    return v;
  }();
  return k;
}

// Separable zero-padded convolution with the SSIM window.
template <typename T>
std::vector<T> ssim_blur(const std::vector<T>& in, int w, int h) {
  const auto& k = ssim_kernel<T>();
  std::vector<T> tmp(in.size(), T(0)), out(in.size(), T(0));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      T acc = T(0);
      for (int i = -5; i <= 5; ++i) {
        int xx = x + i;
        if (xx < 0 || xx >= w) continue;
        acc += k[i + 5] * in[std::size_t(y) * w + xx];
      }
      tmp[std::size_t(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      T acc = T(0);
      for (int i = -5; i <= 5; ++i) {
        int yy = y + i;
        if (yy < 0 || yy >= h) continue;
        acc += k[i + 5] * tmp[std::size_t(yy) * w + x];
      }
      out[std::size_t(y) * w + x] = acc;
    }
  return out;
}

// Per-pixel sum of in-bounds window weights; windowed statistics are
// renormalized by this so partial border windows behave like full ones
// (constant inputs keep exact means and zero variance everywhere).
template <typename T>
const std::vector<T>& ssim_window_weight(int w, int h) {
  static std::vector<T> cache;
  static int cw = -1, ch = -1;
  if (cw != w || ch != h) {
    cache = ssim_blur(std::vector<T>(std::size_t(w) * h, T(1)), w, h);
    cw = w;
    ch = h;
  }
  return cache;
}

template <typename T> struct SsimStats {
  std::vector<T> ux, uy, uxx, uyy, uxy;
};

template <typename T>
SsimStats<T> ssim_stats(const std::vector<T>& x, const std::vector<T>& y, int w, int h) {
  std::size_t n = std::size_t(w) * h;
  std::vector<T> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  SsimStats<T> s{ssim_blur(x, w, h), ssim_blur(y, w, h), ssim_blur(xx, w, h),
                 ssim_blur(yy, w, h), ssim_blur(xy, w, h)};
  const auto& wsum = ssim_window_weight<T>(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    T inv = T(1) / wsum[i];
    s.ux[i] *= inv;
    s.uy[i] *= inv;
    s.uxx[i] *= inv;
    s.uyy[i] *= inv;
    s.uxy[i] *= inv;
  }
  return s;
}

}  // namespace detail

// Mean SSIM over channels, 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2, zero-padded same-size convolutions.
template <typename T>
T ssim(const std::vector<T>& pred, const std::vector<T>& gt, int w, int h,
       int channels = 3) {
  if (pred.size() != gt.size() || pred.size() != std::size_t(w) * h * channels)
    throw std::invalid_argument("ssim: shape mismatch");
  const T c1 = T(0.01) * T(0.01), c2 = T(0.03) * T(0.03);
  std::size_t n = std::size_t(w) * h;
  T acc = T(0);
  for (int ch = 0; ch < channels; ++ch) {
    std::vector<T> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = pred[i * channels + ch];
      y[i] = gt[i * channels + ch];
    }
    auto s = detail::ssim_stats(x, y, w, h);
    for (std::size_t i = 0; i < n; ++i) {
      T mx = s.ux[i], my = s.uy[i];
      T vx = s.uxx[i] - mx * mx, vy = s.uyy[i] - my * my;
      T cxy = s.uxy[i] - mx * my;
      T a1 = T(2) * mx * my + c1, a2 = T(2) * cxy + c2;
      T b1 = mx * mx + my * my + c1, b2 = vx + vy + c2;
      acc += (a1 * a2) / (b1 * b2);
    }
  }
  return acc / (T(n) * channels);
}

template <typename T>
T dssim_loss(const std::vector<T>& pred, const std::vector<T>& gt, int w, int h,
             int channels = 3) {
  return T(1) - ssim(pred, gt, w, h, channels);
}

// d(dssim)/dpred via three extra window convolutions per channel.
template <typename T>
T dssim_loss_backward(const std::vector<T>& pred, const std::vector<T>& gt, int w,
                      int h, std::vector<T>& dL_dpred, int channels = 3) {
  const T c1 = T(0.01) * T(0.01), c2 = T(0.03) * T(0.03);
  std::size_t n = std::size_t(w) * h;
  dL_dpred.assign(pred.size(), T(0));
  T acc = T(0);
  T g = T(-1) / (T(n) * channels);  // d(1 - mean)/dS_p
  for (int ch = 0; ch < channels; ++ch) {
    std::vector<T> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = pred[i * channels + ch];
      y[i] = gt[i * channels + ch];
    }
    auto s = detail::ssim_stats(x, y, w, h);
    std::vector<T> d_ux(n), d_uxx(n), d_uxy(n);
    for (std::size_t i = 0; i < n; ++i) {
      T mx = s.ux[i], my = s.uy[i];
      T vx = s.uxx[i] - mx * mx, vy = s.uyy[i] - my * my;
      T cxy = s.uxy[i] - mx * my;
      T a1 = T(2) * mx * my + c1, a2 = T(2) * cxy + c2;
      T b1 = mx * mx + my * my + c1, b2 = vx + vy + c2;
      T ssim_p = (a1 * a2) / (b1 * b2);
      acc += ssim_p;
      // Stats defined as ux, uxx, uxy; variances expand in terms of them.
      d_uxx[i] = g * (-ssim_p / b2);
      d_uxy[i] = g * (T(2) * a1 / (b1 * b2));
      d_ux[i] = g * (T(2) * my * (a2 - a1) / (b1 * b2) -
                     T(2) * mx * ssim_p / b1 + T(2) * mx * ssim_p / b2);
    }
    // Adjoint of the weight-renormalized blur: scale by 1/W at the stat
    // pixel, then apply the (symmetric) window again.
    const auto& wsum = detail::ssim_window_weight<T>(w, h);
    for (std::size_t i = 0; i < n; ++i) {
      T inv = T(1) / wsum[i];
      d_ux[i] *= inv;
      d_uxx[i] *= inv;
      d_uxy[i] *= inv;
    }
    auto c_ux = detail::ssim_blur(d_ux, w, h);
    auto c_uxx = detail::ssim_blur(d_uxx, w, h);
    auto c_uxy = detail::ssim_blur(d_uxy, w, h);
    for (std::size_t i = 0; i < n; ++i)
      dL_dpred[i * channels + ch] =
          c_ux[i] + T(2) * x[i] * c_uxx[i] + y[i] * c_uxy[i];
  }
  return T(1) - acc / (T(n) * channels);
}

// Population Pearson correlation over jointly valid pixels; nullopt when
// fewer than two samples or either variance vanishes.
template <typename T>
std::optional<T> pearson_correlation(const std::vector<T>& a, const std::vector<T>& b,
                                     const std::vector<char>& mask) {
  if (a.size() != b.size() || a.size() != mask.size())
    throw std::invalid_argument("pearson_correlation: shape mismatch");
  std::size_t n = 0;
  T ma = T(0), mb = T(0);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (mask[i]) {
      ma += a[i];
      mb += b[i];
      ++n;
    }
  if (n < 2) return std::nullopt;
  ma /= T(n);
  mb /= T(n);
  T va = T(0), vb = T(0), cov = T(0);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (mask[i]) {
      T da = a[i] - ma, db = b[i] - mb;
      va += da * da;
      vb += db * db;
      cov += da * db;
    }
  if (!(va > T(0)) || !(vb > T(0))) return std::nullopt;
  T r = cov / std::sqrt(va * vb);
  return std::clamp(r, T(-1), T(1));
}

// 1 - corr(1/(depth+eps), prior disparity) over pixels with alpha >= the
// coverage threshold and a valid prior. Degenerate masks contribute 0 and
// bump the counter. With invert_rendered = false the rendered depth is
// correlated as-is (metric-vs-metric, for synthetic oracles).
template <typename T>
T depth_regularization_loss(const std::vector<T>& depth, const std::vector<T>& alpha,
                            const std::vector<T>& prior,
                            const std::vector<char>& prior_mask,
                            std::size_t* degenerate_counter = nullptr,
                            std::vector<T>* dL_ddepth = nullptr,
                            T alpha_threshold = T(0.5), bool invert_rendered = true) {
  if (depth.size() != alpha.size() || depth.size() != prior.size() ||
      depth.size() != prior_mask.size())
    throw std::invalid_argument("depth_regularization_loss: shape mismatch");
  std::size_t n = depth.size();
  if (dL_ddepth) dL_ddepth->assign(n, T(0));
  std::vector<char> mask(n);
  std::vector<T> disp(n, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = prior_mask[i] && alpha[i] >= alpha_threshold;
    if (mask[i]) disp[i] = invert_rendered ? T(1) / (depth[i] + T(kDispEps)) : depth[i];
  }
  auto r = pearson_correlation(disp, prior, mask);
  if (!r) {
    if (degenerate_counter) ++*degenerate_counter;
    return T(0);
  }
  if (dL_ddepth) {
    // Recompute masked moments for the analytic correlation gradient.
    std::size_t m = 0;
    T ma = T(0), mb = T(0);
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) {
        ma += disp[i];
        mb += prior[i];
        ++m;
      }
    ma /= T(m);
    mb /= T(m);
    T va = T(0), vb = T(0);
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) {
        va += (disp[i] - ma) * (disp[i] - ma);
        vb += (prior[i] - mb) * (prior[i] - mb);
      }
    T sa = std::sqrt(va / T(m)), sb = std::sqrt(vb / T(m));
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      T dr_ddisp = ((prior[i] - mb) / (T(m) * sa * sb)) -
                   (*r) * (disp[i] - ma) / (T(m) * sa * sa);
      T dloss_ddisp = -dr_ddisp;
      (*dL_ddepth)[i] = invert_rendered
                            ? dloss_ddisp * (-T(1) / ((depth[i] + T(kDispEps)) *
                                                      (depth[i] + T(kDispEps))))
                            : dloss_ddisp;
    }
  }
  return T(1) - *r;
}

}  // namespace fsgs

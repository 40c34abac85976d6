#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "fsgs/camera.hpp"
#include "fsgs/gaussian_set.hpp"
#include "fsgs/parallel.hpp"
#include "fsgs/sh.hpp"

namespace fsgs {

inline constexpr double kNearPlane = 0.2;
inline constexpr double kCovDilation = 0.3;
inline constexpr double kAlphaCap = 0.99;
inline constexpr double kAlphaSkip = 1.0 / 255.0;
inline constexpr double kTerminationT = 1e-4;
inline constexpr int kTileSize = 16;

template <typename T> struct ProjectedGaussianT {
  Vec2<T> mean2d;
  T conic[3];   // upper triangle of inv(Sigma'), (A, B, C)
  T cov2d[3];   // Sigma' after dilation, (a, b, c)
  T z;          // camera-space depth
  T radius;     // pixel extent at 3 sigma
  Vec3<T> color;
  Vec3<T> cam_point;  // camera-space mean, saved for backward
  bool clamped[3];    // per-channel SH clamp flags
};

template <typename T> struct SplatEntry {
  std::uint32_t tile;
  T depth;
  std::uint32_t proj;  // index into the compacted projection list
};

template <typename T> struct RenderOutputT {
  int width = 0, height = 0;
  std::vector<T> color;  // H*W*3
  std::vector<T> depth;  // H*W
  std::vector<T> alpha;  // H*W

  // Saved intermediates for the backward pass.
  std::vector<T> final_transmittance;      // H*W
  std::vector<std::uint32_t> n_contrib;    // 1-based tile-list position of last blend
  std::vector<ProjectedGaussianT<T>> proj;
  std::vector<int> proj_gauss;             // proj slot -> gaussian index
  std::vector<SplatEntry<T>> entries;      // sorted by (tile, depth, gaussian index)
  std::vector<std::pair<std::uint32_t, std::uint32_t>> tile_ranges;
  int tiles_x = 0, tiles_y = 0;
  int active_sh_degree = 0;
  Vec3<T> background = Vec3<T>::Zero();
};

template <typename T> struct GradientBufferT {
  std::vector<Vec3<T>> mu;
  std::vector<Vec3<T>> log_scale;
  std::vector<Vec4<T>> rotation;
  std::vector<T> opacity_logit;
  std::vector<Vec3<T>> sh;  // kShCoeffCount per gaussian

  // Densification stats: summed ||dL/dmean2d|| and view hit counts.
  std::vector<T> grad2d_sum;
  std::vector<std::uint32_t> hits;

  void resize(std::size_t n) {
    mu.assign(n, Vec3<T>::Zero());
    log_scale.assign(n, Vec3<T>::Zero());
    rotation.assign(n, Vec4<T>::Zero());
    opacity_logit.assign(n, T(0));
    sh.assign(n * kShCoeffCount, Vec3<T>::Zero());
    grad2d_sum.assign(n, T(0));
    hits.assign(n, 0);
  }
};

// Projects one Gaussian to screen space; returns nothing when culled by the
// near plane or the 1.3x image-bounds guard.
template <typename T>
std::optional<ProjectedGaussianT<T>> project_gaussian(
    const Vec3<T>& mu, const Vec3<T>& log_scale, const Vec4<T>& rotation,
    const Vec3<T>* sh, int active_sh_degree, const CameraT<T>& cam) {
  Vec3<T> t = cam.rot * mu + cam.trans;
  if (!(t[2] > T(kNearPlane))) return std::nullopt;

  T fx = cam.focal[0], fy = cam.focal[1];
  Vec2<T> mean2d(fx * t[0] / t[2] + cam.principal[0],
                 fy * t[1] / t[2] + cam.principal[1]);
  if (mean2d[0] < T(-0.3) * cam.width || mean2d[0] > T(1.3) * cam.width ||
      mean2d[1] < T(-0.3) * cam.height || mean2d[1] > T(1.3) * cam.height)
    return std::nullopt;

  // EWA tangent-plane clamp before evaluating the projection Jacobian.
  T lim_x = T(1.3) * (T(cam.width) / (T(2) * fx));
  T lim_y = T(1.3) * (T(cam.height) / (T(2) * fy));
  T txz = std::clamp(t[0] / t[2], -lim_x, lim_x);
  T tyz = std::clamp(t[1] / t[2], -lim_y, lim_y);

  Eigen::Matrix<T, 2, 3> jac;
  jac << fx / t[2], T(0), -fx * txz / t[2],
      T(0), fy / t[2], -fy * tyz / t[2];
  Eigen::Matrix<T, 2, 3> m = jac * cam.rot;
  Mat3<T> sigma = covariance_from_params(log_scale, rotation);
  Eigen::Matrix<T, 2, 2> cov = m * sigma * m.transpose();
  cov(0, 0) += T(kCovDilation);
  cov(1, 1) += T(kCovDilation);

  T det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
  if (!(det > T(0))) return std::nullopt;
  T inv_det = T(1) / det;

  ProjectedGaussianT<T> out;
  out.mean2d = mean2d;
  out.cov2d[0] = cov(0, 0);
  out.cov2d[1] = cov(0, 1);
  out.cov2d[2] = cov(1, 1);
  out.conic[0] = cov(1, 1) * inv_det;
  out.conic[1] = -cov(0, 1) * inv_det;
  out.conic[2] = cov(0, 0) * inv_det;
  out.z = t[2];
  out.cam_point = t;

  T mid = (cov(0, 0) + cov(1, 1)) / T(2);
  T lambda_max = mid + std::sqrt(std::max(T(1e-10), mid * mid - det));
  out.radius = T(3) * std::sqrt(lambda_max);

  Vec3<T> dir = (mu - cam.center()).normalized();
  Vec3<T> rgb = Vec3<T>::Zero();
  {
    T basis[kShCoeffCount];
    sh_basis(dir, active_sh_degree, basis);
    int n = (active_sh_degree + 1) * (active_sh_degree + 1);
    for (int i = 0; i < n; ++i) rgb += basis[i] * sh[i];
    rgb.array() += T(0.5);
  }
  for (int c = 0; c < 3; ++c) {
    out.clamped[c] = rgb[c] < T(0);
    out.color[c] = std::max(rgb[c], T(0));
  }
  return out;
}

namespace detail {

template <typename T>
void tile_span(const ProjectedGaussianT<T>& p, int tiles_x, int tiles_y,
               int& x0, int& x1, int& y0, int& y1) {
  x0 = std::clamp(int(std::floor((p.mean2d[0] - p.radius) / kTileSize)), 0, tiles_x - 1);
  x1 = std::clamp(int(std::floor((p.mean2d[0] + p.radius) / kTileSize)), 0, tiles_x - 1);
  y0 = std::clamp(int(std::floor((p.mean2d[1] - p.radius) / kTileSize)), 0, tiles_y - 1);
  y1 = std::clamp(int(std::floor((p.mean2d[1] + p.radius) / kTileSize)), 0, tiles_y - 1);
}

// Whether the gaussian's 3-sigma box touches the tile at all; cheap reject so
// off-screen projections do not enter every list.
template <typename T>
bool touches_image(const ProjectedGaussianT<T>& p, int width, int height) {
  return p.mean2d[0] + p.radius >= T(0) && p.mean2d[0] - p.radius < T(width) &&
         p.mean2d[1] + p.radius >= T(0) && p.mean2d[1] - p.radius < T(height);
}

}  // namespace detail

template <typename T>
RenderOutputT<T> render_forward(const GaussianSetT<T>& set, const CameraT<T>& cam,
                                int active_sh_degree,
                                bool white_background = false) {
  RenderOutputT<T> out;
  out.width = cam.width;
  out.height = cam.height;
  out.active_sh_degree = active_sh_degree;
  if (white_background) out.background = Vec3<T>::Ones();
  std::size_t npix = std::size_t(cam.width) * cam.height;
  out.color.assign(npix * 3, T(0));
  out.depth.assign(npix, T(0));
  out.alpha.assign(npix, T(0));
  out.final_transmittance.assign(npix, T(1));
  out.n_contrib.assign(npix, 0);
  out.tiles_x = (cam.width + kTileSize - 1) / kTileSize;
  out.tiles_y = (cam.height + kTileSize - 1) / kTileSize;

  out.proj.reserve(set.size());
  out.proj_gauss.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto p = project_gaussian<T>(set.mu[i], set.log_scale[i], set.rotation[i],
                                 &set.sh[i * kShCoeffCount], active_sh_degree, cam);
    if (!p || !detail::touches_image(*p, cam.width, cam.height)) continue;
    out.proj.push_back(*p);
    out.proj_gauss.push_back(int(i));
  }

  for (std::size_t pi = 0; pi < out.proj.size(); ++pi) {
    int x0, x1, y0, y1;
    detail::tile_span(out.proj[pi], out.tiles_x, out.tiles_y, x0, x1, y0, y1);
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx)
        out.entries.push_back({std::uint32_t(ty * out.tiles_x + tx),
                               out.proj[pi].z, std::uint32_t(pi)});
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [&out](const SplatEntry<T>& a, const SplatEntry<T>& b) {
              if (a.tile != b.tile) return a.tile < b.tile;
              if (a.depth != b.depth) return a.depth < b.depth;
              return out.proj_gauss[a.proj] < out.proj_gauss[b.proj];
            });

  std::uint32_t ntiles = std::uint32_t(out.tiles_x) * out.tiles_y;
  out.tile_ranges.assign(ntiles, {0, 0});
  for (std::size_t e = 0; e < out.entries.size(); ++e) {
    std::uint32_t t = out.entries[e].tile;
    if (e == 0 || out.entries[e - 1].tile != t) out.tile_ranges[t].first = e;
    out.tile_ranges[t].second = e + 1;
  }

  std::vector<T> opacities(out.proj.size());
  for (std::size_t pi = 0; pi < out.proj.size(); ++pi)
    opacities[pi] = sigmoid(set.opacity_logit[out.proj_gauss[pi]]);

  parallel_for_chunks(ntiles, [&](std::size_t tb, std::size_t te, int) {
    for (std::size_t tile = tb; tile < te; ++tile) {
      auto [rb, re] = out.tile_ranges[tile];
      int tx = int(tile) % out.tiles_x, ty = int(tile) / out.tiles_x;
      int px0 = tx * kTileSize, py0 = ty * kTileSize;
      int px1 = std::min(px0 + kTileSize, out.width);
      int py1 = std::min(py0 + kTileSize, out.height);
      if (rb == re) {
        // No splats touch this tile: pure background.
        for (int y = py0; y < py1; ++y)
          for (int x = px0; x < px1; ++x) {
            std::size_t pix = std::size_t(y) * out.width + x;
            for (int c = 0; c < 3; ++c) out.color[pix * 3 + c] = out.background[c];
          }
        continue;
      }
      for (int y = py0; y < py1; ++y) {
        for (int x = px0; x < px1; ++x) {
          std::size_t pix = std::size_t(y) * out.width + x;
          T trans = T(1);
          Vec3<T> acc_color = Vec3<T>::Zero();
          T acc_depth = T(0);
          std::uint32_t last = 0;
          for (std::uint32_t e = rb; e < re; ++e) {
            const auto& pg = out.proj[out.entries[e].proj];
            T dx = T(x) - pg.mean2d[0];
            T dy = T(y) - pg.mean2d[1];
            T power = T(-0.5) * (pg.conic[0] * dx * dx + pg.conic[2] * dy * dy) -
                      pg.conic[1] * dx * dy;
            if (power > T(0)) continue;
            T alpha = std::min(T(kAlphaCap),
                               opacities[out.entries[e].proj] * std::exp(power));
            if (alpha < T(kAlphaSkip)) continue;
            T next_trans = trans * (T(1) - alpha);
            if (next_trans < T(kTerminationT)) break;
            acc_color += pg.color * (alpha * trans);
            acc_depth += pg.z * (alpha * trans);
            trans = next_trans;
            last = e - rb + 1;
          }
          for (int c = 0; c < 3; ++c)
            out.color[pix * 3 + c] = acc_color[c] + trans * out.background[c];
          out.depth[pix] = acc_depth;
          out.alpha[pix] = T(1) - trans;
          out.final_transmittance[pix] = trans;
          out.n_contrib[pix] = last;
        }
      }
    }
  });
  return out;
}

namespace detail {

// dR/dq for the unit-quaternion rotation formula, q = (w,x,y,z).
template <typename T>
void rot_quat_jacobians(const Vec4<T>& q, Mat3<T> d[4]) {
  T w = q[0], x = q[1], y = q[2], z = q[3];
  d[0] << 0, -z, y, z, 0, -x, -y, x, 0;
  d[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  d[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  d[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  for (int k = 0; k < 4; ++k) d[k] *= T(2);
}

}  // namespace detail

// Analytic gradients of a scalar loss with per-pixel color/depth adjoints.
// Traverses each pixel's contributor list back-to-front, recomputing alpha
// from the saved conic/mean, then chains the per-splat screen-space gradients
// to all five parameter groups.
template <typename T>
GradientBufferT<T> render_backward(const GaussianSetT<T>& set, const CameraT<T>& cam,
                                   const RenderOutputT<T>& out,
                                   const std::vector<T>& dL_dcolor,
                                   const std::vector<T>& dL_ddepth) {
  std::size_t npix = std::size_t(out.width) * out.height;
  if (dL_dcolor.size() != npix * 3 || dL_ddepth.size() != npix)
    throw InvalidParameter("render_backward: adjoint buffer shape mismatch");

  std::size_t nproj = out.proj.size();
  std::vector<T> opacities(nproj);
  for (std::size_t pi = 0; pi < nproj; ++pi)
    opacities[pi] = sigmoid(set.opacity_logit[out.proj_gauss[pi]]);

  // Stage 1: per-splat screen-space gradients, per-thread scratch reduced in
  // thread order.
  struct Screen {
    Vec2<T> mean2d = Vec2<T>::Zero();
    T conic[3] = {0, 0, 0};
    T z = 0;
    Vec3<T> color = Vec3<T>::Zero();
    T opacity = 0;
  };
  std::uint32_t ntiles = std::uint32_t(out.tiles_x) * out.tiles_y;
  int nthreads = std::max(1, std::min<int>(num_threads(), int(ntiles ? ntiles : 1)));
  std::vector<std::vector<Screen>> scratch(nthreads);

  parallel_for_chunks(ntiles, [&](std::size_t tb, std::size_t te, int tid) {
    auto& acc = scratch[tid];
    acc.assign(nproj, Screen{});
    for (std::size_t tile = tb; tile < te; ++tile) {
      auto [rb, re] = out.tile_ranges[tile];
      if (rb == re) continue;
      int tx = int(tile) % out.tiles_x, ty = int(tile) / out.tiles_x;
      int px0 = tx * kTileSize, py0 = ty * kTileSize;
      int px1 = std::min(px0 + kTileSize, out.width);
      int py1 = std::min(py0 + kTileSize, out.height);
      for (int y = py0; y < py1; ++y) {
        for (int x = px0; x < px1; ++x) {
          std::size_t pix = std::size_t(y) * out.width + x;
          std::uint32_t last = out.n_contrib[pix];
          if (last == 0) continue;
          Vec3<T> gpix(dL_dcolor[pix * 3], dL_dcolor[pix * 3 + 1],
                       dL_dcolor[pix * 3 + 2]);
          T gdepth = dL_ddepth[pix];
          T trans = out.final_transmittance[pix];
          Vec3<T> rec_color = Vec3<T>::Zero();
          T rec_depth = T(0);
          T bg_dot = out.background.dot(gpix);
          for (std::int64_t e = std::int64_t(rb) + last - 1; e >= std::int64_t(rb); --e) {
            std::uint32_t pi = out.entries[e].proj;
            const auto& pg = out.proj[pi];
            T dx = T(x) - pg.mean2d[0];
            T dy = T(y) - pg.mean2d[1];
            T power = T(-0.5) * (pg.conic[0] * dx * dx + pg.conic[2] * dy * dy) -
                      pg.conic[1] * dx * dy;
            if (power > T(0)) continue;
            T gexp = std::exp(power);
            T alpha = std::min(T(kAlphaCap), opacities[pi] * gexp);
            if (alpha < T(kAlphaSkip)) continue;

            trans = trans / (T(1) - alpha);  // transmittance in front of i
            T w = alpha * trans;

            auto& s = acc[pi];
            s.color += w * gpix;
            s.z += w * gdepth;

            T dL_dalpha = trans * ((pg.color - rec_color).dot(gpix) +
                                   (pg.z - rec_depth) * gdepth);
            // Background shows through (1 - alpha_i) of everything.
            dL_dalpha -= out.final_transmittance[pix] / (T(1) - alpha) * bg_dot;

            rec_color = alpha * pg.color + (T(1) - alpha) * rec_color;
            rec_depth = alpha * pg.z + (T(1) - alpha) * rec_depth;

            if (alpha >= T(kAlphaCap)) continue;  // capped: flat region
            T dL_dG = dL_dalpha * opacities[pi];
            s.opacity += dL_dalpha * gexp;
            T dL_dpower = dL_dG * gexp;
            s.conic[0] += dL_dpower * T(-0.5) * dx * dx;
            s.conic[1] += dL_dpower * -dx * dy;
            s.conic[2] += dL_dpower * T(-0.5) * dy * dy;
            s.mean2d[0] += dL_dpower * (pg.conic[0] * dx + pg.conic[1] * dy);
            s.mean2d[1] += dL_dpower * (pg.conic[1] * dx + pg.conic[2] * dy);
          }
        }
      }
    }
  });
  for (int t = 1; t < nthreads; ++t) {
    if (scratch[t].empty()) continue;
    for (std::size_t pi = 0; pi < nproj; ++pi) {
      scratch[0][pi].mean2d += scratch[t][pi].mean2d;
      for (int k = 0; k < 3; ++k) scratch[0][pi].conic[k] += scratch[t][pi].conic[k];
      scratch[0][pi].z += scratch[t][pi].z;
      scratch[0][pi].color += scratch[t][pi].color;
      scratch[0][pi].opacity += scratch[t][pi].opacity;
    }
  }
  if (scratch[0].empty()) scratch[0].assign(nproj, Screen{});

  // Stage 2: chain to parameters, parallel over splats (disjoint writes).
  GradientBufferT<T> grads;
  grads.resize(set.size());
  T fx = cam.focal[0], fy = cam.focal[1];
  T lim_x = T(1.3) * (T(cam.width) / (T(2) * fx));
  T lim_y = T(1.3) * (T(cam.height) / (T(2) * fy));
  Vec3<T> cam_center = cam.center();

  parallel_for_chunks(nproj, [&](std::size_t pb, std::size_t pe, int) {
    for (std::size_t pi = pb; pi < pe; ++pi) {
      const Screen& s = scratch[0][pi];
      const auto& pg = out.proj[pi];
      int gi = out.proj_gauss[pi];
      const Vec3<T>& t = pg.cam_point;

      grads.grad2d_sum[gi] += s.mean2d.norm();
      grads.hits[gi] += 1;

      // Opacity logit through the sigmoid.
      T o = opacities[pi];
      grads.opacity_logit[gi] += s.opacity * o * (T(1) - o);

      // Color -> SH coefficients and view direction.
      Vec3<T> diff = set.mu[gi] - cam_center;
      T dnorm = diff.norm();
      Vec3<T> dir = diff / dnorm;
      {
        T basis[kShCoeffCount];
        Vec3<T> bgrad[kShCoeffCount];
        sh_basis(dir, out.active_sh_degree, basis);
        sh_basis_grad(dir, out.active_sh_degree, bgrad);
        Vec3<T> gcol = s.color;
        for (int c = 0; c < 3; ++c)
          if (pg.clamped[c]) gcol[c] = T(0);
        int n = (out.active_sh_degree + 1) * (out.active_sh_degree + 1);
        Vec3<T> dL_ddir = Vec3<T>::Zero();
        for (int i = 0; i < n; ++i) {
          const Vec3<T>& coef = set.sh[std::size_t(gi) * kShCoeffCount + i];
          grads.sh[std::size_t(gi) * kShCoeffCount + i] += basis[i] * gcol;
          dL_ddir += gcol.dot(coef) * bgrad[i];
        }
        // Through the normalization of (mu - cam_center).
        grads.mu[gi] += (dL_ddir - dir * dir.dot(dL_ddir)) / dnorm;
      }

      // conic -> 2D covariance (inverse backward).
      Eigen::Matrix<T, 2, 2> conic_m, gconic_m;
      conic_m << pg.conic[0], pg.conic[1], pg.conic[1], pg.conic[2];
      gconic_m << s.conic[0], s.conic[1] / T(2), s.conic[1] / T(2), s.conic[2];
      Eigen::Matrix<T, 2, 2> dcov = -conic_m * gconic_m * conic_m;

      // 2D covariance -> 3D covariance and camera-space mean via M = J * W.
      T txz = std::clamp(t[0] / t[2], -lim_x, lim_x);
      T tyz = std::clamp(t[1] / t[2], -lim_y, lim_y);
      bool clamp_x = std::abs(t[0] / t[2]) > lim_x;
      bool clamp_y = std::abs(t[1] / t[2]) > lim_y;
      Eigen::Matrix<T, 2, 3> jac;
      jac << fx / t[2], T(0), -fx * txz / t[2],
          T(0), fy / t[2], -fy * tyz / t[2];
      Eigen::Matrix<T, 2, 3> m = jac * cam.rot;
      Mat3<T> sigma = covariance_from_params(set.log_scale[gi], set.rotation[gi]);

      Mat3<T> dsigma = m.transpose() * dcov * m;
      Eigen::Matrix<T, 2, 3> dm = T(2) * dcov * m * sigma;
      Eigen::Matrix<T, 2, 3> djac = dm * cam.rot.transpose();

      Vec3<T> dL_dt = Vec3<T>::Zero();
      T tz = t[2], tz2 = tz * tz, tz3 = tz2 * tz;
      if (!clamp_x) dL_dt[0] += djac(0, 2) * (-fx / tz2);
      if (!clamp_y) dL_dt[1] += djac(1, 2) * (-fy / tz2);
      dL_dt[2] += djac(0, 0) * (-fx / tz2) + djac(1, 1) * (-fy / tz2);
      // d(J02)/dtz: txz*tz behaves like k*tz when clamped, tx when free.
      dL_dt[2] += djac(0, 2) * (clamp_x ? fx * txz / tz2 : T(2) * fx * txz / tz2);
      dL_dt[2] += djac(1, 2) * (clamp_y ? fy * tyz / tz2 : T(2) * fy * tyz / tz2);

      // Screen mean and depth paths.
      dL_dt[0] += s.mean2d[0] * fx / tz;
      dL_dt[1] += s.mean2d[1] * fy / tz;
      dL_dt[2] += -s.mean2d[0] * fx * t[0] / tz2 - s.mean2d[1] * fy * t[1] / tz2;
      dL_dt[2] += s.z;

      grads.mu[gi] += cam.rot.transpose() * dL_dt;

      // 3D covariance -> scale and rotation. Sigma = A A^T with A = R S.
      Vec3<T> sc = set.log_scale[gi].array().exp();
      Vec4<T> q = set.rotation[gi];
      T qn = q.norm();
      Vec4<T> qu = q / qn;
      Mat3<T> rot = quat_to_rot(qu);
      Mat3<T> a = rot * sc.asDiagonal();
      Mat3<T> da = T(2) * dsigma * a;  // dsigma is symmetric by construction
      for (int k = 0; k < 3; ++k) {
        T ds = rot.col(k).dot(da.col(k));
        grads.log_scale[gi][k] += ds * sc[k];
      }
      Mat3<T> drot = da * sc.asDiagonal();
      Mat3<T> dq_jac[4];
      detail::rot_quat_jacobians(qu, dq_jac);
      Vec4<T> dqu;
      for (int k = 0; k < 4; ++k) dqu[k] = (drot.array() * dq_jac[k].array()).sum();
      grads.rotation[gi] += (dqu - qu * qu.dot(dqu)) / qn;
    }
  });
  return grads;
}

}  // namespace fsgs

#pragma once

#include "fsgs/gaussian_set.hpp"

namespace fsgs {

// Real SH basis constants, graphics convention.
inline constexpr double kSH0 = 0.28209479177387814;
inline constexpr double kSH1 = 0.4886025119029199;
inline constexpr double kSH2[5] = {1.0925484305920792, -1.0925484305920792,
                                   0.31539156525252005, -1.0925484305920792,
                                   0.5462742152960396};
inline constexpr double kSH3[7] = {-0.5900435899266435, 2.890611442640554,
                                   -0.4570457994644658, 0.3731763325901154,
                                   -0.4570457994644658, 1.445305721320277,
                                   -0.5900435899266435};

// Evaluates the 16-element real SH basis at a unit direction. Entries of
// degree > active_degree are left at zero.
template <typename T>
void sh_basis(const Vec3<T>& dir, int active_degree, T basis[kShCoeffCount]) {
  T x = dir[0], y = dir[1], z = dir[2];
  for (int i = 0; i < kShCoeffCount; ++i) basis[i] = T(0);
  basis[0] = T(kSH0);
  if (active_degree < 1) return;
  basis[1] = T(-kSH1) * y;
  basis[2] = T(kSH1) * z;
  basis[3] = T(-kSH1) * x;
  if (active_degree < 2) return;
  T xx = x * x, yy = y * y, zz = z * z;
  basis[4] = T(kSH2[0]) * x * y;
  basis[5] = T(kSH2[1]) * y * z;
  basis[6] = T(kSH2[2]) * (T(2) * zz - xx - yy);
  basis[7] = T(kSH2[3]) * x * z;
  basis[8] = T(kSH2[4]) * (xx - yy);
  if (active_degree < 3) return;
  basis[9] = T(kSH3[0]) * y * (T(3) * xx - yy);
  basis[10] = T(kSH3[1]) * x * y * z;
  basis[11] = T(kSH3[2]) * y * (T(4) * zz - xx - yy);
  basis[12] = T(kSH3[3]) * z * (T(2) * zz - T(3) * xx - T(3) * yy);
  basis[13] = T(kSH3[4]) * x * (T(4) * zz - xx - yy);
  basis[14] = T(kSH3[5]) * z * (xx - yy);
  basis[15] = T(kSH3[6]) * x * (xx - T(3) * yy);
}

// Gradient of each basis entry with respect to the (unnormalized-safe) unit
// direction components.
template <typename T>
void sh_basis_grad(const Vec3<T>& dir, int active_degree,
                   Vec3<T> grad[kShCoeffCount]) {
  T x = dir[0], y = dir[1], z = dir[2];
  for (int i = 0; i < kShCoeffCount; ++i) grad[i].setZero();
  if (active_degree < 1) return;
  grad[1] = Vec3<T>(0, T(-kSH1), 0);
  grad[2] = Vec3<T>(0, 0, T(kSH1));
  grad[3] = Vec3<T>(T(-kSH1), 0, 0);
  if (active_degree < 2) return;
  T xx = x * x, yy = y * y, zz = z * z;
  grad[4] = T(kSH2[0]) * Vec3<T>(y, x, 0);
  grad[5] = T(kSH2[1]) * Vec3<T>(0, z, y);
  grad[6] = T(kSH2[2]) * Vec3<T>(T(-2) * x, T(-2) * y, T(4) * z);
  grad[7] = T(kSH2[3]) * Vec3<T>(z, 0, x);
  grad[8] = T(kSH2[4]) * Vec3<T>(T(2) * x, T(-2) * y, 0);
  if (active_degree < 3) return;
  grad[9] = T(kSH3[0]) * Vec3<T>(T(6) * x * y, T(3) * xx - T(3) * yy, 0);
  grad[10] = T(kSH3[1]) * Vec3<T>(y * z, x * z, x * y);
  grad[11] = T(kSH3[2]) *
             Vec3<T>(T(-2) * x * y, T(4) * zz - xx - T(3) * yy, T(8) * y * z);
  grad[12] = T(kSH3[3]) *
             Vec3<T>(T(-6) * x * z, T(-6) * y * z, T(6) * zz - T(3) * xx - T(3) * yy);
  grad[13] = T(kSH3[4]) *
             Vec3<T>(T(4) * zz - T(3) * xx - yy, T(-2) * x * y, T(8) * x * z);
  grad[14] = T(kSH3[5]) * Vec3<T>(T(2) * x * z, T(-2) * y * z, xx - yy);
  grad[15] = T(kSH3[6]) * Vec3<T>(T(3) * xx - T(3) * yy, T(-6) * x * y, 0);
}

// RGB radiance from SH coefficients along a unit view direction. Adds the
// conventional +0.5 offset and clamps below at zero.
template <typename T>
Vec3<T> eval_sh(const Vec3<T>* coeffs, const Vec3<T>& view_dir, int active_degree) {
  T basis[kShCoeffCount];
  sh_basis(view_dir, active_degree, basis);
  Vec3<T> rgb = Vec3<T>::Zero();
  int n = (active_degree + 1) * (active_degree + 1);
  for (int i = 0; i < n; ++i) rgb += basis[i] * coeffs[i];
  rgb.array() += T(0.5);
  return rgb.cwiseMax(T(0));
}

// Variant reporting which channels were clamped (their gradients must be
// zeroed in the backward pass).
template <typename T>
Vec3<T> eval_sh(const Vec3<T>* coeffs, const Vec3<T>& view_dir, int active_degree,
                bool clamped[3]) {
  T basis[kShCoeffCount];
  sh_basis(view_dir, active_degree, basis);
  Vec3<T> rgb = Vec3<T>::Zero();
  int n = (active_degree + 1) * (active_degree + 1);
  for (int i = 0; i < n; ++i) rgb += basis[i] * coeffs[i];
  rgb.array() += T(0.5);
  for (int c = 0; c < 3; ++c) clamped[c] = rgb[c] < T(0);
  return rgb.cwiseMax(T(0));
}

}  // namespace fsgs

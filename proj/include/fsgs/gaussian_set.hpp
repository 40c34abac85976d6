#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fsgs {

template <typename T> using Vec2 = Eigen::Matrix<T, 2, 1>;
template <typename T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T> using Vec4 = Eigen::Matrix<T, 4, 1>;
template <typename T> using Mat3 = Eigen::Matrix<T, 3, 3>;

// Max spherical-harmonic degree carried per Gaussian; 16 coefficients per
// color channel, the interoperable splat-PLY layout.
inline constexpr int kShDegreeMax = 3;
inline constexpr int kShCoeffCount = (kShDegreeMax + 1) * (kShDegreeMax + 1);

struct InvalidParameter : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T> T sigmoid(T x) { return T(1) / (T(1) + std::exp(-x)); }

template <typename T> T logit(T p) { return std::log(p / (T(1) - p)); }

// Rotation matrix from a (w,x,y,z) quaternion; normalizes internally.
template <typename T> Mat3<T> quat_to_rot(const Vec4<T>& q) {
  T n = q.norm();
  if (!(n > T(0))) throw InvalidParameter("quat_to_rot: zero-norm quaternion");
  T w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  Mat3<T> r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

// Sigma = R diag(exp(s))^2 R^T, symmetric PSD by construction.
template <typename T>
Mat3<T> covariance_from_params(const Vec3<T>& log_scale, const Vec4<T>& rotation) {
  Mat3<T> r = quat_to_rot(rotation);
  Vec3<T> s = log_scale.array().exp();
  Mat3<T> m = r * s.asDiagonal();
  return m * m.transpose();
}

// Normalized 3D Gaussian density at x.
template <typename T>
T gaussian_density(const Vec3<T>& x, const Vec3<T>& mu, const Mat3<T>& sigma) {
  T det = sigma.determinant();
  if (!(det > T(0)) || !std::isfinite(det))
    throw InvalidParameter("gaussian_density: singular covariance");
  Vec3<T> d = x - mu;
  T maha = d.dot(sigma.inverse() * d);
  T two_pi = T(2) * T(EIGEN_PI);
  return std::pow(two_pi, T(-1.5)) / std::sqrt(det) * std::exp(T(-0.5) * maha);
}

// Structure-of-arrays splat model. sh holds kShCoeffCount RGB triples per
// Gaussian, coefficient-major (sh[i*16 + c] is coefficient c as RGB).
template <typename T> struct GaussianSetT {
  std::vector<Vec3<T>> mu;
  std::vector<Vec3<T>> log_scale;
  std::vector<Vec4<T>> rotation;  // (w,x,y,z)
  std::vector<T> opacity_logit;
  std::vector<Vec3<T>> sh;

  std::size_t size() const { return mu.size(); }
  bool empty() const { return mu.empty(); }

  void resize(std::size_t n) {
    mu.resize(n, Vec3<T>::Zero());
    log_scale.resize(n, Vec3<T>::Zero());
    rotation.resize(n, Vec4<T>(1, 0, 0, 0));
    opacity_logit.resize(n, T(0));
    sh.resize(n * kShCoeffCount, Vec3<T>::Zero());
  }

  void append(const GaussianSetT& other) {
    mu.insert(mu.end(), other.mu.begin(), other.mu.end());
    log_scale.insert(log_scale.end(), other.log_scale.begin(), other.log_scale.end());
    rotation.insert(rotation.end(), other.rotation.begin(), other.rotation.end());
    opacity_logit.insert(opacity_logit.end(), other.opacity_logit.begin(),
                         other.opacity_logit.end());
    sh.insert(sh.end(), other.sh.begin(), other.sh.end());
  }

  // Keeps rows where keep[i] is true; used by prune and split.
  void filter(const std::vector<char>& keep) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (!keep[i]) continue;
      mu[w] = mu[i];
      log_scale[w] = log_scale[i];
      rotation[w] = rotation[i];
      opacity_logit[w] = opacity_logit[i];
      for (int c = 0; c < kShCoeffCount; ++c)
        sh[w * kShCoeffCount + c] = sh[i * kShCoeffCount + c];
      ++w;
    }
    resize(w);
  }

  T opacity(std::size_t i) const { return sigmoid(opacity_logit[i]); }
  Vec3<T> scale(std::size_t i) const { return log_scale[i].array().exp(); }
};

using GaussianSet = GaussianSetT<float>;

template <typename T, typename U>
GaussianSetT<T> to_scalar(const GaussianSetT<U>& s) {
  GaussianSetT<T> out;
  out.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.mu[i] = s.mu[i].template cast<T>();
    out.log_scale[i] = s.log_scale[i].template cast<T>();
    out.rotation[i] = s.rotation[i].template cast<T>();
    out.opacity_logit[i] = T(s.opacity_logit[i]);
  }
  for (std::size_t c = 0; c < s.sh.size(); ++c) out.sh[c] = s.sh[c].template cast<T>();
  return out;
}

}  // namespace fsgs

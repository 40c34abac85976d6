#pragma once

#include "fsgs/gaussian_set.hpp"

namespace fsgs {

// Pinhole camera with a rigid world-to-camera transform:
// x_cam = rot * x_world + trans.
template <typename T> struct CameraT {
  Vec2<T> focal = Vec2<T>::Zero();       // fx, fy in pixels
  Vec2<T> principal = Vec2<T>::Zero();   // cx, cy in pixels
  int width = 0;
  int height = 0;
  Mat3<T> rot = Mat3<T>::Identity();
  Vec3<T> trans = Vec3<T>::Zero();
  int id = -1;

  Vec3<T> center() const { return -(rot.transpose() * trans); }
};

using Camera = CameraT<float>;

template <typename T, typename U>
CameraT<T> cast_camera(const CameraT<U>& c) {
  CameraT<T> out;
  out.focal = c.focal.template cast<T>();
  out.principal = c.principal.template cast<T>();
  out.width = c.width;
  out.height = c.height;
  out.rot = c.rot.template cast<T>();
  out.trans = c.trans.template cast<T>();
  out.id = c.id;
  return out;
}

}  // namespace fsgs

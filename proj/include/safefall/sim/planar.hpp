// Copyright 2026 The safefall Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Planar spatial algebra. Motion vectors are (w, vx, vz) with the linear part
// taken at the frame origin; force vectors are (n, fx, fz).

#ifndef SAFEFALL_SIM_PLANAR_HPP_
#define SAFEFALL_SIM_PLANAR_HPP_

#include <Eigen/Core>
#include <cmath>

namespace safefall::planar {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline Mat2 rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

// w x r for a scalar angular rate.
inline Vec2 cross(double w, const Vec2& r) { return Vec2(-w * r.y(), w * r.x()); }

// r x f, the out-of-plane component.
inline double cross(const Vec2& r, const Vec2& f) {
  return r.x() * f.y() - r.y() * f.x();
}

// Coordinate transform for motion vectors from frame A to frame B, where B's
// origin is at `r` (A coordinates) and B is rotated by `angle` relative to A.
struct Transform {
  Mat2 e = Mat2::Identity();  // A -> B rotation (transpose of B's orientation)
  Vec2 r = Vec2::Zero();

  static Transform make(double angle, const Vec2& origin) {
    return Transform{rotation(angle).transpose(), origin};
  }

  Vec3 apply_motion(const Vec3& m) const {
    const Vec2 v = e * (m.tail<2>() + cross(m[0], r));
    return Vec3(m[0], v.x(), v.y());
  }

  // Transpose applied to a force in B: returns the same force in A.
  Vec3 apply_force_transpose(const Vec3& f) const {
    const Vec2 fa = e.transpose() * f.tail<2>();
    return Vec3(f[0] + cross(r, fa), fa.x(), fa.y());
  }

  Mat3 matrix() const {
    Mat3 x = Mat3::Zero();
    x(0, 0) = 1.0;
    x.block<2, 1>(1, 0) = e * Vec2(-r.y(), r.x());
    x.block<2, 2>(1, 1) = e;
    return x;
  }
};

// Spatial inertia about the frame origin of a body with mass m, centre of
// mass c and rotational inertia i_c about the centre of mass.
inline Mat3 spatial_inertia(double m, const Vec2& c, double i_c) {
  Mat3 inertia;
  inertia << i_c + m * c.squaredNorm(), -m * c.y(), m * c.x(),  //
      -m * c.y(), m, 0.0,                                       //
      m * c.x(), 0.0, m;
  return inertia;
}

// Motion cross product v x m.
inline Vec3 cross_motion(const Vec3& v, const Vec3& m) {
  return Vec3(0.0, -v[0] * m[2] + v[2] * m[0], v[0] * m[1] - v[1] * m[0]);
}

// Force cross product v x* f.
inline Vec3 cross_force(const Vec3& v, const Vec3& f) {
  return Vec3(v[1] * f[2] - v[2] * f[1], -v[0] * f[2], v[0] * f[1]);
}

}  // namespace safefall::planar

#endif  // SAFEFALL_SIM_PLANAR_HPP_

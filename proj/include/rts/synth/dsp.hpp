// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rts::synth {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 unit() const {
    const double n = norm();
    return n > 0 ? *this * (1.0 / n) : Vec3{0, 0, 1};
  }
};

// Rodrigues rotation of v about a unit axis.
inline Vec3 rotate(const Vec3& v, const Vec3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1 - c));
}

inline Vec3 rotate_xyz(Vec3 v, double ax, double ay, double az) {
  v = rotate(v, {1, 0, 0}, ax);
  v = rotate(v, {0, 1, 0}, ay);
  return rotate(v, {0, 0, 1}, az);
}

// Spherical interpolation between unit vectors.
inline Vec3 slerp(const Vec3& a, const Vec3& b, double t) {
  const double d = std::clamp(a.dot(b), -1.0, 1.0);
  const double th = std::acos(d);
  if (th < 1e-9) return a;
  const double s = std::sin(th);
  return a * (std::sin((1 - t) * th) / s) + b * (std::sin(t * th) / s);
}

// Minimum-jerk position profile on [0,1] and its second derivative.
inline double min_jerk(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10 + u * (-15 + 6 * u));
}
inline double min_jerk_acc(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return 60 * u - 180 * u * u + 120 * u * u * u;
}

struct OnePole {
  double a = 0, y = 0;
  static OnePole lowpass(double fc, double fs) {
    return {std::exp(-2.0 * std::numbers::pi * fc / fs), 0.0};
  }
  double operator()(double x) { return y = a * y + (1 - a) * x; }
  // Output std of unit white noise through this filter.
  double white_gain() const { return std::sqrt((1 - a) / (1 + a)); }
};

// Two-pole resonator at f Hz with bandwidth bw Hz, unit peak gain.
struct Resonator {
  double b0 = 0, a1 = 0, a2 = 0, y1 = 0, y2 = 0;
  Resonator() = default;
  Resonator(double f, double bw, double fs) {
    const double r = std::exp(-std::numbers::pi * bw / fs);
    const double th = 2 * std::numbers::pi * f / fs;
    a1 = 2 * r * std::cos(th);
    a2 = -r * r;
    b0 = (1 - r) * std::sqrt(1 - 2 * r * std::cos(2 * th) + r * r);
  }
  double operator()(double x) {
    const double y = b0 * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace rts::synth

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace hfsg {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Vec3&) const = default;

  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline Vec3 normalized(const Vec3& v) {
  const double n = v.norm();
  return n > 0.0 ? (1.0 / n) * v : v;
}

// Rigid world-from-camera transform, row-major 4x4. Camera axes follow the
// pinhole convention: +x right, +y down, +z forward.
struct Pose {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  bool operator==(const Pose&) const = default;

  double r(int row, int col) const { return m[static_cast<std::size_t>(row * 4 + col)]; }
  Vec3 translation() const { return {m[3], m[7], m[11]}; }

  Vec3 to_world(const Vec3& pc) const {
    return {r(0, 0) * pc.x + r(0, 1) * pc.y + r(0, 2) * pc.z + m[3],
            r(1, 0) * pc.x + r(1, 1) * pc.y + r(1, 2) * pc.z + m[7],
            r(2, 0) * pc.x + r(2, 1) * pc.y + r(2, 2) * pc.z + m[11]};
  }

  Vec3 to_camera(const Vec3& pw) const {
    const Vec3 d = pw - translation();
    return {r(0, 0) * d.x + r(1, 0) * d.y + r(2, 0) * d.z,
            r(0, 1) * d.x + r(1, 1) * d.y + r(2, 1) * d.z,
            r(0, 2) * d.x + r(1, 2) * d.y + r(2, 2) * d.z};
  }

  // Max deviation of R^T R from identity, plus a determinant check folded in.
  double orthonormality_error() const {
    double err = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += r(k, i) * r(k, j);
        err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    }
    const Vec3 c0{r(0, 0), r(1, 0), r(2, 0)};
    const Vec3 c1{r(0, 1), r(1, 1), r(2, 1)};
    const Vec3 c2{r(0, 2), r(1, 2), r(2, 2)};
    err = std::max(err, std::abs(cross(c0, c1).dot(c2) - 1.0));
    return std::max({err, std::abs(m[12]), std::abs(m[13]), std::abs(m[14]), std::abs(m[15] - 1.0)});
  }

  static Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = {0, 0, 1}) {
    const Vec3 fwd = normalized(target - eye);
    Vec3 right = normalized(cross(fwd, up));
    const Vec3 down = cross(fwd, right);
    Pose p;
    p.m = {right.x, down.x, fwd.x, eye.x,  //
           right.y, down.y, fwd.y, eye.y,  //
           right.z, down.z, fwd.z, eye.z,  //
           0,       0,      0,     1};
    return p;
  }
};

struct Intrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  bool operator==(const Intrinsics&) const = default;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

constexpr double kMinDepth = 1e-6;

// Pinhole projection; empty when the point is at or behind the image plane.
inline std::optional<Pixel> project(const Vec3& world, const Pose& pose, const Intrinsics& k) {
  const Vec3 pc = pose.to_camera(world);
  if (pc.z <= kMinDepth) return std::nullopt;
  return Pixel{k.fx * pc.x / pc.z + k.cx, k.fy * pc.y / pc.z + k.cy};
}

// Pixel-space box (x_min, y_min, x_max, y_max), origin top-left.
struct BBox2 {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool operator==(const BBox2&) const = default;

  bool well_ordered() const { return x_min < x_max && y_min < y_max; }
  double area() const { return std::max(0.0, x_max - x_min) * std::max(0.0, y_max - y_min); }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
};

inline double iou(const BBox2& a, const BBox2& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Axis-aligned 3D box, metres.
struct Box3 {
  Vec3 min;
  Vec3 max;

  bool operator==(const Box3&) const = default;

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
  double volume() const {
    const Vec3 e = extent();
    return std::max(0.0, e.x) * std::max(0.0, e.y) * std::max(0.0, e.z);
  }
  std::array<Vec3, 8> corners() const {
    return {Vec3{min.x, min.y, min.z}, Vec3{max.x, min.y, min.z}, Vec3{min.x, max.y, min.z},
            Vec3{max.x, max.y, min.z}, Vec3{min.x, min.y, max.z}, Vec3{max.x, min.y, max.z},
            Vec3{min.x, max.y, max.z}, Vec3{max.x, max.y, max.z}};
  }
  Box3 shifted(const Vec3& d) const { return {min + d, max + d}; }
};

inline Box3 bounding_box(std::span<const Vec3> pts) {
  Box3 b;
  if (pts.empty()) return b;
  b.min = b.max = pts.front();
  for (const auto& p : pts) {
    b.min = {std::min(b.min.x, p.x), std::min(b.min.y, p.y), std::min(b.min.z, p.z)};
    b.max = {std::max(b.max.x, p.x), std::max(b.max.y, p.y), std::max(b.max.z, p.z)};
  }
  return b;
}

inline double iou(const Box3& a, const Box3& b) {
  const double ix = std::min(a.max.x, b.max.x) - std::max(a.min.x, b.min.x);
  const double iy = std::min(a.max.y, b.max.y) - std::max(a.min.y, b.min.y);
  const double iz = std::min(a.max.z, b.max.z) - std::max(a.min.z, b.min.z);
  if (ix <= 0.0 || iy <= 0.0 || iz <= 0.0) return 0.0;
  const double inter = ix * iy * iz;
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline Vec3 mean(std::span<const Vec3> pts) {
  Vec3 s;
  for (const auto& p : pts) s += p;
  return pts.empty() ? s : (1.0 / static_cast<double>(pts.size())) * s;
}

// Linear-interpolated percentile (q in [0,1]) of an unsorted sample; the
// input is reordered.
inline double percentile(std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + frac * (b - a);
}

// Cosine similarity; zero for mismatched or zero-length inputs.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa <= 0.0 || bb <= 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace hfsg

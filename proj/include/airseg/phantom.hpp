#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "airseg/volume.hpp"

namespace airseg {

// Synthetic chest phantom: a binary-branching tube tree (the airway) inside
// an ellipsoidal lung region, with CT-like intensities in Hounsfield units.
struct PhantomConfig {
  Dims dims{48, 64, 64};
  Spacing spacing{1.0, 1.0, 1.0};
  double trunk_radius = 3.0;   // voxels
  double trunk_length = 0.0;   // voxels; 0 picks 0.32 * depth extent
  int branch_depth = 3;        // generations below the trunk
  double angle_min_deg = 20.0;
  double angle_max_deg = 40.0;
  double radius_decay = 0.78;  // per generation
  float lumen_hu = -1000.0f;
  float wall_hu = 0.0f;
  float parenchyma_hu = -800.0f;
  float soft_tissue_hu = 40.0f;
  double noise_std_hu = 15.0;

  void validate() const {
    require(dims.d > 0 && dims.h > 0 && dims.w > 0, "phantom dims must be positive");
    require(trunk_radius >= 1.0, "trunk_radius must be >= 1 voxel");
    require(branch_depth >= 0, "branch_depth must be >= 0");
    require(radius_decay > 0.0 && radius_decay <= 1.0,
            "radius_decay must lie in (0,1]");
    require(trunk_radius * std::pow(radius_decay, branch_depth) >= 1.0,
            "radius at maximum depth falls below 1 voxel; lower branch_depth or "
            "raise trunk_radius");
    require(angle_min_deg >= 0.0 && angle_max_deg >= angle_min_deg &&
                angle_max_deg <= 80.0,
            "branch angle range must satisfy 0 <= min <= max <= 80 degrees");
    require(noise_std_hu >= 0.0, "noise_std_hu must be >= 0");
  }
};

struct PhantomResult {
  Volume volume;
  Mask mask;
  int clipped_segments = 0;  // segments that left the grid and were cut
};

namespace detail {

struct Vec3 {
  double z, y, x;
  Vec3 operator+(const Vec3& o) const { return {z + o.z, y + o.y, x + o.x}; }
  Vec3 operator-(const Vec3& o) const { return {z - o.z, y - o.y, x - o.x}; }
  Vec3 operator*(double s) const { return {z * s, y * s, x * s}; }
  double dot(const Vec3& o) const { return z * o.z + y * o.y + x * o.x; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0 ? Vec3{z / n, y / n, x / n} : Vec3{1, 0, 0};
  }
};

struct TubeSegment {
  Vec3 a, b;
  double radius;
};

// two unit vectors orthogonal to d and each other
inline void orthonormal_frame(const Vec3& d, Vec3& u, Vec3& v) {
  const Vec3 ref = std::abs(d.z) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  u = Vec3{d.y * ref.x - d.x * ref.y, d.x * ref.z - d.z * ref.x,
           d.z * ref.y - d.y * ref.z}
          .normalized();
  v = Vec3{d.y * u.x - d.x * u.y, d.x * u.z - d.z * u.x, d.z * u.y - d.y * u.z};
}

inline void grow_tree(std::vector<TubeSegment>& segments, const Vec3& start,
                      const Vec3& dir, double length, double radius, int depth,
                      const PhantomConfig& cfg, std::mt19937_64& rng) {
  const Vec3 end = start + dir * length;
  segments.push_back({start, end, radius});
  if (depth == 0) return;
  std::uniform_real_distribution<double> angle_dist(cfg.angle_min_deg, cfg.angle_max_deg);
  std::uniform_real_distribution<double> azimuth_dist(0.0, 2.0 * 3.14159265358979323846);
  Vec3 u, v;
  orthonormal_frame(dir, u, v);
  const double phi = azimuth_dist(rng);
  for (int child = 0; child < 2; ++child) {
    const double theta = angle_dist(rng) * 3.14159265358979323846 / 180.0;
    const double az = phi + child * 3.14159265358979323846;
    const Vec3 lateral = (u * std::cos(az) + v * std::sin(az)) * std::sin(theta);
    const Vec3 cdir = (dir * std::cos(theta) + lateral).normalized();
    grow_tree(segments, end, cdir, length * 0.8, radius * cfg.radius_decay,
              depth - 1, cfg, rng);
  }
}

// squared distance from p to the finite segment [a,b]
inline double segment_dist2(const Vec3& p, const TubeSegment& s) {
  const Vec3 ab = s.b - s.a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0 ? (p - s.a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec3 c = s.a + ab * t;
  const Vec3 d = p - c;
  return d.dot(d);
}

}  // namespace detail

// Deterministic phantom generation: tree geometry first, then rasterization,
// then intensities with Gaussian noise rounded to whole HU.
inline PhantomResult gen_phantom(const PhantomConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);

  const double trunk_len =
      cfg.trunk_length > 0 ? cfg.trunk_length : 0.32 * cfg.dims.d;
  const detail::Vec3 start{std::max(1.0, 0.04 * cfg.dims.d), cfg.dims.h / 2.0,
                           cfg.dims.w / 2.0};
  std::vector<detail::TubeSegment> segments;
  detail::grow_tree(segments, start, {1, 0, 0}, trunk_len, cfg.trunk_radius,
                    cfg.branch_depth, cfg, rng);

  PhantomResult out;
  out.mask = Mask::zeros(cfg.dims, cfg.spacing);
  out.volume = Volume::zeros(cfg.dims, cfg.spacing);

  // rasterize lumen voxels segment by segment over each bounding box
  for (const auto& seg : segments) {
    const double r = seg.radius;
    const int z0 = static_cast<int>(std::floor(std::min(seg.a.z, seg.b.z) - r));
    const int z1 = static_cast<int>(std::ceil(std::max(seg.a.z, seg.b.z) + r));
    const int y0 = static_cast<int>(std::floor(std::min(seg.a.y, seg.b.y) - r));
    const int y1 = static_cast<int>(std::ceil(std::max(seg.a.y, seg.b.y) + r));
    const int x0 = static_cast<int>(std::floor(std::min(seg.a.x, seg.b.x) - r));
    const int x1 = static_cast<int>(std::ceil(std::max(seg.a.x, seg.b.x) + r));
    bool clipped = z0 < 0 || y0 < 0 || x0 < 0 || z1 >= cfg.dims.d ||
                   y1 >= cfg.dims.h || x1 >= cfg.dims.w;
    if (clipped) ++out.clipped_segments;
    const double r2 = r * r;
    for (int z = std::max(z0, 0); z <= std::min(z1, cfg.dims.d - 1); ++z)
      for (int y = std::max(y0, 0); y <= std::min(y1, cfg.dims.h - 1); ++y)
        for (int x = std::max(x0, 0); x <= std::min(x1, cfg.dims.w - 1); ++x)
          if (detail::segment_dist2({static_cast<double>(z), static_cast<double>(y),
                                     static_cast<double>(x)}, seg) <= r2)
            out.mask.at(z, y, x) = 1;
  }

  // one-voxel wall: 26-dilation of the lumen minus the lumen
  Mask wall = Mask::zeros(cfg.dims, cfg.spacing);
  for (int z = 0; z < cfg.dims.d; ++z)
    for (int y = 0; y < cfg.dims.h; ++y)
      for (int x = 0; x < cfg.dims.w; ++x) {
        if (out.mask.at(z, y, x)) continue;
        bool near = false;
        for (int dz = -1; dz <= 1 && !near; ++dz)
          for (int dy = -1; dy <= 1 && !near; ++dy)
            for (int dx = -1; dx <= 1 && !near; ++dx) {
              const int nz = z + dz, ny = y + dy, nx = x + dx;
              if (nz < 0 || nz >= cfg.dims.d || ny < 0 || ny >= cfg.dims.h ||
                  nx < 0 || nx >= cfg.dims.w)
                continue;
              near = out.mask.at(nz, ny, nx) != 0;
            }
        wall.at(z, y, x) = near ? 1 : 0;
      }

  // intensities: lumen / wall / parenchyma inside the lung ellipsoid / soft
  // tissue outside, plus noise, rounded to integral HU
  const double cz = cfg.dims.d / 2.0, cy = cfg.dims.h / 2.0, cx = cfg.dims.w / 2.0;
  const double az = 0.48 * cfg.dims.d, ay = 0.42 * cfg.dims.h, ax = 0.42 * cfg.dims.w;
  std::normal_distribution<double> noise(0.0, cfg.noise_std_hu);
  for (int z = 0; z < cfg.dims.d; ++z)
    for (int y = 0; y < cfg.dims.h; ++y)
      for (int x = 0; x < cfg.dims.w; ++x) {
        float hu;
        if (out.mask.at(z, y, x))
          hu = cfg.lumen_hu;
        else if (wall.at(z, y, x))
          hu = cfg.wall_hu;
        else {
          const double ez = (z + 0.5 - cz) / az, ey = (y + 0.5 - cy) / ay,
                       ex = (x + 0.5 - cx) / ax;
          hu = ez * ez + ey * ey + ex * ex <= 1.0 ? cfg.parenchyma_hu
                                                  : cfg.soft_tissue_hu;
        }
        double v = hu + (cfg.noise_std_hu > 0 ? noise(rng) : 0.0);
        v = std::clamp(std::round(v), -1024.0, 3071.0);
        out.volume.at(z, y, x) = static_cast<float>(v);
      }
  return out;
}

}  // namespace airseg

#pragma once

#include <array>
#include <string>
#include <vector>

#include "ov/rng.hpp"
#include "ov/vec.hpp"

namespace ov {

// Spherical look-at-origin pose. World frame: +z up, azimuth in the xy-plane
// measured from +x, elevation above the xy-plane. At the poles (|elevation| =
// 90) the up vector falls back to +x to keep the frame well defined.
struct CameraPose {
  double azimuth_deg = 0.0;    // [0, 360)
  double elevation_deg = 0.0;  // [-90, 90]
  double radius = 1.8;
  double fov_y_deg = 49.1;
  int width = 64;
  int height = 64;

  Vec3 position() const;
  // Orthonormal frame: forward points at the origin.
  void frame(Vec3& forward, Vec3& right, Vec3& up) const;
};

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
};

struct RayBundle {
  int width = 0;
  int height = 0;
  std::vector<Ray> rays;  // row-major pixel order

  const Ray& at(int y, int x) const {
    return rays[static_cast<std::size_t>(y) * width + x];
  }
};

// Pinhole rays through pixel centers.
RayBundle pose_to_rays(const CameraPose& pose);

// The orthogonal quadruple: same elevation/radius, azimuths base + {0, 90,
// 180, 270} (mod 360), in that order.
std::array<CameraPose, 4> extend_quadruple(const CameraPose& base);

struct PoseSampleConfig {
  double azimuth_min_deg = 0.0;
  double azimuth_max_deg = 360.0;
  double elevation_min_deg = 0.0;
  double elevation_max_deg = 45.0;
  double radius = 1.8;
  double fov_y_deg = 49.1;
  int width = 64;
  int height = 64;

  void validate() const;
};

CameraPose sample_base_pose(Rng& rng, const PoseSampleConfig& config);

// The 48 training-render poses: azimuths k*30 for k=0..11 crossed with
// elevations {0, 15, 30, 45}, radius 1.8, 512x512.
std::vector<CameraPose> enumerate_dataset_poses();

struct TrainingQuadruple {
  std::array<int, 4> indices;  // into the 48-pose list
  std::array<CameraPose, 4> poses;
};

// One elevation drawn uniformly from the four, one start azimuth from the
// twelve; the rest at +90/+180/+270.
TrainingQuadruple sample_training_quadruple(const std::vector<CameraPose>& poses,
                                            Rng& rng);

// Plain-text pose list: one "azimuth elevation radius fov width height" line
// per pose.
std::string poses_to_text(const std::vector<CameraPose>& poses);
std::vector<CameraPose> poses_from_text(const std::string& text);

}  // namespace ov

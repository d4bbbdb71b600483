#include "ov/camera.hpp"

#include <cmath>
#include <sstream>

#include "ov/errors.hpp"

namespace ov {

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}

Vec3 CameraPose::position() const {
  const double az = azimuth_deg * kDegToRad;
  const double el = elevation_deg * kDegToRad;
  return radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                       std::sin(el));
}

void CameraPose::frame(Vec3& forward, Vec3& right, Vec3& up) const {
  const Vec3 o = position();
  forward = (-o).normalized();
  Vec3 world_up(0, 0, 1);
  if (std::abs(std::abs(elevation_deg) - 90.0) < 1e-9) world_up = Vec3(1, 0, 0);
  right = forward.cross(world_up).normalized();
  up = right.cross(forward);
}

RayBundle pose_to_rays(const CameraPose& pose) {
  if (pose.width <= 0 || pose.height <= 0)
    throw ConfigError("image size must be positive");
  if (!(pose.fov_y_deg > 0.0 && pose.fov_y_deg < 180.0))
    throw ConfigError("fov out of range");
  if (!(pose.radius > 0.0)) throw ConfigError("radius must be positive");

  RayBundle out;
  out.width = pose.width;
  out.height = pose.height;
  out.rays.resize(static_cast<std::size_t>(pose.width) * pose.height);

  Vec3 fwd, right, up;
  pose.frame(fwd, right, up);
  const Vec3 origin = pose.position();
  const double tan_half = std::tan(0.5 * pose.fov_y_deg * kDegToRad);
  const double aspect = static_cast<double>(pose.width) / pose.height;

  for (int y = 0; y < pose.height; ++y) {
    const double ndc_y = 1.0 - 2.0 * (y + 0.5) / pose.height;
    for (int x = 0; x < pose.width; ++x) {
      const double ndc_x = 2.0 * (x + 0.5) / pose.width - 1.0;
      Ray& r = out.rays[static_cast<std::size_t>(y) * pose.width + x];
      r.origin = origin;
      r.dir = (fwd + ndc_x * tan_half * aspect * right + ndc_y * tan_half * up)
                  .normalized();
    }
  }
  return out;
}

std::array<CameraPose, 4> extend_quadruple(const CameraPose& base) {
  std::array<CameraPose, 4> quad;
  for (int k = 0; k < 4; ++k) {
    quad[k] = base;
    quad[k].azimuth_deg = std::fmod(base.azimuth_deg + 90.0 * k, 360.0);
  }
  return quad;
}

void PoseSampleConfig::validate() const {
  if (azimuth_max_deg < azimuth_min_deg)
    throw ConfigError("empty azimuth range");
  if (elevation_max_deg < elevation_min_deg)
    throw ConfigError("empty elevation range");
  if (!(radius > 0.0)) throw ConfigError("radius must be positive");
  if (!(fov_y_deg > 0.0 && fov_y_deg < 180.0))
    throw ConfigError("fov out of range");
}

CameraPose sample_base_pose(Rng& rng, const PoseSampleConfig& config) {
  config.validate();
  CameraPose p;
  p.azimuth_deg = config.azimuth_min_deg == config.azimuth_max_deg
                      ? config.azimuth_min_deg
                      : rng.uniform(config.azimuth_min_deg, config.azimuth_max_deg);
  p.azimuth_deg = std::fmod(p.azimuth_deg, 360.0);
  p.elevation_deg =
      config.elevation_min_deg == config.elevation_max_deg
          ? config.elevation_min_deg
          : rng.uniform(config.elevation_min_deg, config.elevation_max_deg);
  p.radius = config.radius;
  p.fov_y_deg = config.fov_y_deg;
  p.width = config.width;
  p.height = config.height;
  return p;
}

std::vector<CameraPose> enumerate_dataset_poses() {
  std::vector<CameraPose> poses;
  poses.reserve(48);
  const double elevations[4] = {0.0, 15.0, 30.0, 45.0};
  for (double el : elevations) {
    for (int k = 0; k < 12; ++k) {
      CameraPose p;
      p.azimuth_deg = 30.0 * k;
      p.elevation_deg = el;
      p.radius = 1.8;
      p.width = 512;
      p.height = 512;
      poses.push_back(p);
    }
  }
  return poses;
}

TrainingQuadruple sample_training_quadruple(const std::vector<CameraPose>& poses,
                                            Rng& rng) {
  if (poses.size() != 48)
    throw ConfigError("expected the 48-pose dataset enumeration");
  const int elev = rng.uniform_int(0, 3);
  const int start = rng.uniform_int(0, 11);
  TrainingQuadruple q;
  for (int k = 0; k < 4; ++k) {
    const int az = (start + 3 * k) % 12;  // +90 degrees = +3 azimuth slots
    q.indices[k] = elev * 12 + az;
    q.poses[k] = poses[q.indices[k]];
  }
  return q;
}

std::string poses_to_text(const std::vector<CameraPose>& poses) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& p : poses) {
    os << p.azimuth_deg << ' ' << p.elevation_deg << ' ' << p.radius << ' '
       << p.fov_y_deg << ' ' << p.width << ' ' << p.height << '\n';
  }
  return os.str();
}

std::vector<CameraPose> poses_from_text(const std::string& text) {
  std::vector<CameraPose> poses;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    CameraPose p;
    if (!(ls >> p.azimuth_deg >> p.elevation_deg >> p.radius >> p.fov_y_deg >>
          p.width >> p.height))
      throw IoError("malformed pose line: " + line);
    poses.push_back(p);
  }
  return poses;
}

}  // namespace ov

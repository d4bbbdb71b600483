#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ov {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

}  // namespace ov

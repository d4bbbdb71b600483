#include "ov/targets.hpp"

#include "ov/errors.hpp"

namespace ov {

AnalyticSdf target_sphere() {
  return AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25).with_color(Vec3(0.8, 0.2, 0.2));
}

AnalyticSdf target_box() {
  return AnalyticSdf::box(Vec3(0, 0, 0), Vec3(0.25, 0.2, 0.15))
      .with_color(Vec3(0.25, 0.45, 0.8));
}

AnalyticSdf target_two_spheres() {
  return AnalyticSdf::union_of(
      {AnalyticSdf::sphere(Vec3(-0.2, 0, 0), 0.15).with_color(Vec3(0.85, 0.65, 0.1)),
       AnalyticSdf::sphere(Vec3(0.2, 0, 0), 0.15).with_color(Vec3(0.2, 0.6, 0.3))});
}

AnalyticSdf target_nose() {
  return AnalyticSdf::union_of(
      {AnalyticSdf::sphere(Vec3(0, 0, 0), 0.22).with_color(Vec3(0.75, 0.3, 0.25)),
       AnalyticSdf::box(Vec3(0.30, 0, 0), Vec3(0.06, 0.28, 0.10))
           .with_color(Vec3(0.9, 0.8, 0.2))});
}

AnalyticSdf target_cottage() {
  return AnalyticSdf::union_of(
      {AnalyticSdf::box(Vec3(0, 0, -0.12), Vec3(0.28, 0.2, 0.14))
           .with_color(Vec3(0.8, 0.7, 0.5)),
       AnalyticSdf::box(Vec3(0, 0, 0.06), Vec3(0.22, 0.15, 0.08))
           .with_color(Vec3(0.55, 0.25, 0.15)),
       AnalyticSdf::box(Vec3(0.14, 0.08, 0.2), Vec3(0.03, 0.03, 0.1))
           .with_color(Vec3(0.4, 0.4, 0.45))});
}

AnalyticSdf make_target(const std::string& name) {
  if (name == "sphere") return target_sphere();
  if (name == "box") return target_box();
  if (name == "two-spheres") return target_two_spheres();
  if (name == "nose") return target_nose();
  if (name == "cottage") return target_cottage();
  throw ConfigError("unknown target: " + name);
}

std::vector<std::string> target_names() {
  return {"sphere", "box", "two-spheres", "nose", "cottage"};
}

}  // namespace ov

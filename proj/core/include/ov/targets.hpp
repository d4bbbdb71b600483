#pragma once

#include <string>
#include <vector>

#include "ov/field.hpp"

namespace ov {

// Canonical analytic targets shared by the CLI, tests, and experiments.
// All fit well inside the unit cube.
AnalyticSdf target_sphere();       // r = 0.25, warm red
AnalyticSdf target_box();          // half (0.25, 0.2, 0.15), steel blue
AnalyticSdf target_two_spheres();  // two disjoint r = 0.15 spheres
// Sphere with a wide box "nose" slab on its +x front; deliberately
// azimuth-asymmetric for view-consistency experiments.
AnalyticSdf target_nose();
// Box body, shallow roof box, and a thin chimney; the thin feature sits near
// the supervision resolution limit.
AnalyticSdf target_cottage();

AnalyticSdf make_target(const std::string& name);  // by CLI name
std::vector<std::string> target_names();

}  // namespace ov

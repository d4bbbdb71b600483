#pragma once

#include <array>
#include <string>
#include <vector>

#include "ov/camera.hpp"
#include "ov/image.hpp"
#include "ov/rng.hpp"

namespace ov {

// Four same-shape views ordered by azimuth offset 0/90/180/270.
struct ImageQuad {
  std::array<Image, 4> views;
};

// 2x2 clockwise composite: view 0 top-left, 1 top-right, 2 bottom-right,
// 3 bottom-left. Quadrant extraction is the bit-exact inverse.
Image tile(const ImageQuad& quad);
ImageQuad untile(const Image& composite);

// Bilinear resample (no anti-aliasing kernel) with edge clamp; an exact
// linear operator. Identity when the target matches the source size.
Image resize(const Image& src, int out_width, int out_height);

// Transpose of resize as a linear map: scatters an out-sized cotangent back
// to an in-sized image with the same weights.
Image resize_transpose(const Image& upstream, int in_width, int in_height);

struct TrainingComposite {
  Image composite;  // 512 x 512 x 3
  std::string caption;
  std::array<int, 4> render_indices;
};

// Builds one supervision composite from a 48-render set: draws a training
// quadruple, tiles clockwise, resizes to 512.
TrainingComposite assemble_training_composite(
    const std::vector<Image>& renders, const std::vector<CameraPose>& poses,
    const std::string& caption, Rng& rng);

}  // namespace ov

#pragma once

#include <string>

#include "ov/image.hpp"

namespace ov {

// 8-bit PNG (grayscale for 1-channel images, RGB for 3). Values are clamped
// to [0,1] and quantized. Deterministic byte output.
void write_png(const Image& image, const std::string& path);

// Depth maps get normalized to [lo, hi] before quantization.
void write_png_normalized(const Image& image, double lo, double hi,
                          const std::string& path);

}  // namespace ov

#include "ov/compose.hpp"

#include <algorithm>
#include <cmath>

#include "ov/errors.hpp"

namespace ov {

namespace {

// Quadrant origin (x, y) of view k in the 2x2 clockwise layout.
inline std::pair<int, int> quadrant_origin(int k, int w, int h) {
  switch (k) {
    case 0: return {0, 0};      // top-left
    case 1: return {w, 0};      // top-right
    case 2: return {w, h};      // bottom-right
    default: return {0, h};     // bottom-left
  }
}

struct Tap {
  int i0, i1;
  double w0, w1;
};

inline Tap axis_tap(int out_i, int out_n, int in_n) {
  const double s = (out_i + 0.5) * static_cast<double>(in_n) / out_n - 0.5;
  const double fl = std::floor(s);
  Tap t;
  t.w1 = s - fl;
  t.w0 = 1.0 - t.w1;
  t.i0 = std::clamp(static_cast<int>(fl), 0, in_n - 1);
  t.i1 = std::clamp(static_cast<int>(fl) + 1, 0, in_n - 1);
  return t;
}

}  // namespace

Image tile(const ImageQuad& quad) {
  const Image& first = quad.views[0];
  for (int k = 1; k < 4; ++k) {
    if (!quad.views[k].same_shape(first))
      throw ConfigError("tile: view dimensions differ");
  }
  const int w = first.width, h = first.height, c = first.channels;
  Image out(2 * w, 2 * h, c);
  for (int k = 0; k < 4; ++k) {
    const auto [ox, oy] = quadrant_origin(k, w, h);
    const Image& v = quad.views[k];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch)
          out.at(oy + y, ox + x, ch) = v.at(y, x, ch);
  }
  return out;
}

ImageQuad untile(const Image& composite) {
  if (composite.width % 2 != 0 || composite.height % 2 != 0)
    throw ConfigError("untile: composite dimensions must be even");
  const int w = composite.width / 2, h = composite.height / 2;
  ImageQuad quad;
  for (int k = 0; k < 4; ++k) {
    const auto [ox, oy] = quadrant_origin(k, w, h);
    Image v(w, h, composite.channels);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < composite.channels; ++ch)
          v.at(y, x, ch) = composite.at(oy + y, ox + x, ch);
    quad.views[k] = std::move(v);
  }
  return quad;
}

Image resize(const Image& src, int out_width, int out_height) {
  if (out_width <= 0 || out_height <= 0)
    throw ConfigError("resize: target must be positive");
  if (out_width == src.width && out_height == src.height) return src;

  Image out(out_width, out_height, src.channels);
  for (int y = 0; y < out_height; ++y) {
    const Tap ty = axis_tap(y, out_height, src.height);
    for (int x = 0; x < out_width; ++x) {
      const Tap tx = axis_tap(x, out_width, src.width);
      for (int ch = 0; ch < src.channels; ++ch) {
        out.at(y, x, ch) = ty.w0 * (tx.w0 * src.at(ty.i0, tx.i0, ch) +
                                    tx.w1 * src.at(ty.i0, tx.i1, ch)) +
                           ty.w1 * (tx.w0 * src.at(ty.i1, tx.i0, ch) +
                                    tx.w1 * src.at(ty.i1, tx.i1, ch));
      }
    }
  }
  return out;
}

Image resize_transpose(const Image& upstream, int in_width, int in_height) {
  if (in_width <= 0 || in_height <= 0)
    throw ConfigError("resize_transpose: source dims must be positive");
  if (in_width == upstream.width && in_height == upstream.height)
    return upstream;

  Image out(in_width, in_height, upstream.channels, 0.0);
  for (int y = 0; y < upstream.height; ++y) {
    const Tap ty = axis_tap(y, upstream.height, in_height);
    for (int x = 0; x < upstream.width; ++x) {
      const Tap tx = axis_tap(x, upstream.width, in_width);
      for (int ch = 0; ch < upstream.channels; ++ch) {
        const double v = upstream.at(y, x, ch);
        if (v == 0.0) continue;
        out.at(ty.i0, tx.i0, ch) += ty.w0 * tx.w0 * v;
        out.at(ty.i0, tx.i1, ch) += ty.w0 * tx.w1 * v;
        out.at(ty.i1, tx.i0, ch) += ty.w1 * tx.w0 * v;
        out.at(ty.i1, tx.i1, ch) += ty.w1 * tx.w1 * v;
      }
    }
  }
  return out;
}

TrainingComposite assemble_training_composite(
    const std::vector<Image>& renders, const std::vector<CameraPose>& poses,
    const std::string& caption, Rng& rng) {
  if (renders.size() != poses.size() || renders.size() != 48)
    throw ConfigError("expected 48 renders with matching poses");
  const TrainingQuadruple tq = sample_training_quadruple(poses, rng);
  ImageQuad quad;
  for (int k = 0; k < 4; ++k) {
    const Image& r = renders[tq.indices[k]];
    if (r.width == 0 || r.height == 0)
      throw ConfigError("missing render for pose index " +
                        std::to_string(tq.indices[k]));
    quad.views[k] = r;
  }
  TrainingComposite out;
  out.composite = resize(tile(quad), 512, 512);
  out.caption = caption;
  out.render_indices = tq.indices;
  return out;
}

}  // namespace ov

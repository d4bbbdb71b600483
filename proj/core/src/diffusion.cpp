#include "ov/diffusion.hpp"

#include <cmath>

#include "ov/compose.hpp"
#include "ov/errors.hpp"
#include "binio.hpp"

namespace ov {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_first,
                                    double beta_last) {
  if (steps < 2) throw ConfigError("schedule needs at least 2 steps");
  NoiseSchedule s;
  s.alpha_bar_.resize(steps);
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double beta =
        beta_first + (beta_last - beta_first) * i / (steps - 1);
    prod *= 1.0 - beta;
    s.alpha_bar_[i] = prod;
  }
  return s;
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 1 || t > steps())
    throw ConfigError("timestep out of range: " + std::to_string(t));
  return alpha_bar_[t - 1];
}

NoisedImage add_noise(const Image& x, int t, const NoiseSchedule& schedule,
                      Rng& rng) {
  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  NoisedImage out;
  out.noisy = Image(x.width, x.height, x.channels);
  out.eps = Image(x.width, x.height, x.channels);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double e = rng.normal();
    out.eps.data[i] = e;
    out.noisy.data[i] = signal * x.data[i] + noise * e;
  }
  return out;
}

namespace {

// Shared machinery of the two synthetic oracles.
class SyntheticOracleBase : public ScoreOracle {
 public:
  SyntheticOracleBase(const AnalyticSdf& target, const OraclePipeline& pipeline,
                      const NoiseSchedule& schedule)
      : pipeline_(pipeline),
        schedule_(schedule),
        baked_(bake_field(target, pipeline.bake_resolution,
                          pipeline.target_beta)) {}

  std::vector<Image> predict_noise(const std::vector<Image>& noisy, int t,
                                   const PromptContext& ctx) override {
    if (ctx.cameras.empty())
      throw OracleError(
          "synthetic oracle needs the camera side channel in the context");
    const double ab = schedule_.alpha_bar(t);
    const double signal = std::sqrt(ab);
    const double noise = std::sqrt(1.0 - ab);

    std::vector<Image> out;
    out.reserve(noisy.size());
    for (std::size_t b = 0; b < noisy.size(); ++b) {
      const Image& q = noisy[b];
      const Image target = target_image(q, b, ctx);
      Image eps_hat(q.width, q.height, q.channels);
      for (std::size_t i = 0; i < q.data.size(); ++i)
        eps_hat.data[i] = (q.data[i] - signal * target.data[i]) / noise;
      out.push_back(std::move(eps_hat));
    }
    return out;
  }

 protected:
  virtual CameraPose effective_pose(const CameraPose& query_pose) const = 0;

  // Renders the target through the query path: per-view render at the
  // pipeline resolution, optional 2x2 tile, resize to the query shape, then
  // map [0,1] pixels to the [-1,1] signal range.
  Image target_image(const Image& query, std::size_t batch_index,
                     const PromptContext& ctx) const {
    RenderConfig rc = pipeline_.render;
    if (ctx.render_beta > 0.0) rc.beta_override = ctx.render_beta;
    Image composed;
    if (ctx.composite) {
      if (ctx.cameras.size() != 4)
        throw OracleError("composite query needs exactly 4 cameras");
      ImageQuad quad;
      for (int k = 0; k < 4; ++k)
        quad.views[k] = render_view(ctx.cameras[k], rc);
      composed = tile(quad);
    } else {
      if (batch_index >= ctx.cameras.size())
        throw OracleError("batch larger than the camera side channel");
      composed = render_view(ctx.cameras[batch_index], rc);
    }
    Image sized = resize(composed, query.width, query.height);
    for (double& v : sized.data) v = 2.0 * v - 1.0;
    return sized;
  }

  Image render_view(const CameraPose& query_pose, const RenderConfig& rc) const {
    CameraPose pose = effective_pose(query_pose);
    pose.width = pipeline_.render_width;
    pose.height = pipeline_.render_height;
    return render(baked_, pose_to_rays(pose), rc).color;
  }

  OraclePipeline pipeline_;
  NoiseSchedule schedule_;
  VoxelField baked_;
};

class SyntheticTargetOracle final : public SyntheticOracleBase {
 public:
  using SyntheticOracleBase::SyntheticOracleBase;

 protected:
  CameraPose effective_pose(const CameraPose& query_pose) const override {
    return query_pose;
  }
};

class FrontBiasedOracle final : public SyntheticOracleBase {
 public:
  using SyntheticOracleBase::SyntheticOracleBase;

 protected:
  CameraPose effective_pose(const CameraPose& query_pose) const override {
    CameraPose p = query_pose;
    p.azimuth_deg = 0.0;
    return p;
  }
};

}  // namespace

std::unique_ptr<ScoreOracle> make_synthetic_target_oracle(
    const AnalyticSdf& target, const OraclePipeline& pipeline,
    const NoiseSchedule& schedule) {
  return std::make_unique<SyntheticTargetOracle>(target, pipeline, schedule);
}

std::unique_ptr<ScoreOracle> make_front_biased_oracle(
    const AnalyticSdf& target, const OraclePipeline& pipeline,
    const NoiseSchedule& schedule) {
  return std::make_unique<FrontBiasedOracle>(target, pipeline, schedule);
}

// ---------------------------------------------------------------------------
// Wire frames

std::string encode_score_frame(const Image& image, int t,
                               const std::string& prompt) {
  std::string out;
  out.reserve(20 + image.data.size() * 4 + prompt.size());
  out.append("OVSC");
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(t));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(image.width));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(image.height));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(image.channels));
  for (double v : image.data) binio::put<float>(out, static_cast<float>(v));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(prompt.size()));
  out.append(prompt);
  return out;
}

ScoreFrame decode_score_frame(const std::string& bytes) {
  std::size_t off = 0;
  if (bytes.size() < 4 || bytes.compare(0, 4, "OVSC") != 0)
    throw ProtocolError("bad frame magic");
  off = 4;
  ScoreFrame f;
  f.t = static_cast<int>(binio::get<std::uint32_t>(bytes, off));
  const auto w = binio::get<std::uint32_t>(bytes, off);
  const auto h = binio::get<std::uint32_t>(bytes, off);
  const auto c = binio::get<std::uint32_t>(bytes, off);
  if (w == 0 || h == 0 || c == 0 || w > 1u << 15 || h > 1u << 15 || c > 16)
    throw ProtocolError("implausible frame dimensions");
  const std::size_t count = static_cast<std::size_t>(w) * h * c;
  if (off + 4 * count + 4 > bytes.size())
    throw ProtocolError("frame shorter than its declared image");
  f.image = Image(static_cast<int>(w), static_cast<int>(h),
                  static_cast<int>(c));
  for (std::size_t i = 0; i < count; ++i)
    f.image.data[i] = binio::get<float>(bytes, off);
  const auto plen = binio::get<std::uint32_t>(bytes, off);
  if (off + plen > bytes.size()) throw ProtocolError("prompt truncated");
  f.prompt = bytes.substr(off, plen);
  return f;
}

}  // namespace ov

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ov/camera.hpp"
#include "ov/field.hpp"
#include "ov/image.hpp"
#include "ov/render.hpp"
#include "ov/rng.hpp"

namespace ov {

// Forward-diffusion signal coefficients. alpha_bar(t) is the cumulative
// product of (1 - variance_t) for t in [1, steps]; strictly decreasing.
class NoiseSchedule {
 public:
  // Standard linear variance ramp, 1e-4 to 2e-2 over 1000 steps.
  static NoiseSchedule linear(int steps = 1000, double beta_first = 1e-4,
                              double beta_last = 2e-2);

  int steps() const { return static_cast<int>(alpha_bar_.size()); }
  double alpha_bar(int t) const;  // t in [1, steps]

 private:
  std::vector<double> alpha_bar_;
};

struct NoisedImage {
  Image noisy;
  Image eps;
};

// x is expected in [-1, 1]; returns sqrt(abar_t) x + sqrt(1 - abar_t) eps
// with eps drawn i.i.d. standard normal.
NoisedImage add_noise(const Image& x, int t, const NoiseSchedule& schedule,
                      Rng& rng);

// Query-side context handed to an oracle. Synthetic oracles require the
// camera side channel to render their target; a real model ignores it.
struct PromptContext {
  std::string prompt;
  std::vector<std::uint8_t> embedding;  // opaque payload, passed through
  std::vector<CameraPose> cameras;
  bool composite = false;  // query images are 2x2 composites of `cameras`
  // Kernel sharpness the query renders used; synthetic oracles replicate it
  // so the residual compares like with like. Ignored by real models.
  double render_beta = -1.0;
};

// Noise-prediction contract: same shapes out as in, deterministic for
// identical inputs. Implementations must be safe to call from many workers.
class ScoreOracle {
 public:
  virtual ~ScoreOracle() = default;
  virtual std::vector<Image> predict_noise(const std::vector<Image>& noisy,
                                           int t,
                                           const PromptContext& ctx) = 0;
};

// Rendering pipeline the synthetic oracles replicate when producing their
// target images; must match the query path exactly.
struct OraclePipeline {
  RenderConfig render;
  int render_width = 64;
  int render_height = 64;
  double target_beta = 0.005;  // kernel sharpness for target renders
  int bake_resolution = 96;
};

// Ideal denoiser for a known target: renders the target through the same
// cameras/tile/resize path as the query, then inverts the forward process so
// the residual (eps_hat - eps) points from the current render toward the
// target render.
std::unique_ptr<ScoreOracle> make_synthetic_target_oracle(
    const AnalyticSdf& target, const OraclePipeline& pipeline,
    const NoiseSchedule& schedule);

// View-blind failure model: the target is always rendered from azimuth 0
// regardless of the query cameras. Drives single-view optimization toward a
// front view at every azimuth.
std::unique_ptr<ScoreOracle> make_front_biased_oracle(
    const AnalyticSdf& target, const OraclePipeline& pipeline,
    const NoiseSchedule& schedule);

// ---------------------------------------------------------------------------
// Remote oracle wire protocol. Frame layout (little endian):
//   magic "OVSC", u32 t, u32 width, u32 height, u32 channels,
//   f32 row-major interleaved image data, u32 prompt byte length, prompt.
// The response carries eps_hat in the same frame layout.

struct ScoreFrame {
  Image image;
  int t = 0;
  std::string prompt;
};

std::string encode_score_frame(const Image& image, int t,
                               const std::string& prompt);
ScoreFrame decode_score_frame(const std::string& bytes);

struct RemoteRetryPolicy {
  int attempts = 3;
  int initial_backoff_ms = 1000;  // doubles per retry
};

// HTTP adapter: POST /v1/score per image; batches preserve request order.
// Transport failures retry with exponential backoff and surface as
// OracleUnavailableError; malformed or mis-shaped responses raise
// ProtocolError.
std::unique_ptr<ScoreOracle> make_remote_oracle(
    const std::string& host, int port,
    const RemoteRetryPolicy& policy = RemoteRetryPolicy{});

}  // namespace ov

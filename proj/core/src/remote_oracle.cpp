#include <chrono>
#include <thread>

#include "ov/diffusion.hpp"
#include "ov/errors.hpp"

#include <httplib.h>

namespace ov {

namespace {

class RemoteOracle final : public ScoreOracle {
 public:
  RemoteOracle(std::string host, int port, RemoteRetryPolicy policy)
      : host_(std::move(host)), port_(port), policy_(policy) {}

  std::vector<Image> predict_noise(const std::vector<Image>& noisy, int t,
                                   const PromptContext& ctx) override {
    std::vector<Image> out;
    out.reserve(noisy.size());
    for (const Image& img : noisy) out.push_back(score_one(img, t, ctx));
    return out;
  }

 private:
  Image score_one(const Image& img, int t, const PromptContext& ctx) {
    const std::string body = encode_score_frame(img, t, ctx.prompt);
    int backoff_ms = policy_.initial_backoff_ms;
    std::string last_error = "no attempt made";

    for (int attempt = 0; attempt < policy_.attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms *= 2;
      }
      httplib::Client client(host_, port_);
      client.set_read_timeout(120, 0);
      auto res = client.Post("/v1/score", body, "application/octet-stream");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 422)
        throw ProtocolError("endpoint rejected frame shape (422)");
      if (res->status != 200) {
        last_error = "unexpected status " + std::to_string(res->status);
        continue;
      }
      ScoreFrame frame = decode_score_frame(res->body);
      if (!frame.image.same_shape(img))
        throw ProtocolError("response shape mismatch: expected " +
                            std::to_string(img.width) + "x" +
                            std::to_string(img.height) + "x" +
                            std::to_string(img.channels) + ", got " +
                            std::to_string(frame.image.width) + "x" +
                            std::to_string(frame.image.height) + "x" +
                            std::to_string(frame.image.channels));
      return std::move(frame.image);
    }
    throw OracleUnavailableError("score endpoint unreachable after " +
                                 std::to_string(policy_.attempts) +
                                 " attempts: " + last_error);
  }

  std::string host_;
  int port_;
  RemoteRetryPolicy policy_;
};

}  // namespace

std::unique_ptr<ScoreOracle> make_remote_oracle(const std::string& host,
                                                int port,
                                                const RemoteRetryPolicy& policy) {
  return std::make_unique<RemoteOracle>(host, port, policy);
}

}  // namespace ov

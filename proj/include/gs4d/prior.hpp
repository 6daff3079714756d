// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gs4d/camera.hpp"
#include "gs4d/image.hpp"

namespace gs4d {

struct PriorCondition {
  /// Front-view frame at the current timestep; must match the render size.
  const Image* reference_image = nullptr;
  double delta_azimuth_deg = 0;
  double delta_elevation_deg = 0;
  double delta_radius = 0;

  // Test channel, ignored by production priors.
  const Image* clean_render = nullptr;  // x0
  double alpha_bar = 0;
  const Camera* camera = nullptr;
  double time = 0;
};

/// Predicts the noise in a noised render.
class Prior {
 public:
  virtual ~Prior() = default;
  virtual Image predict_noise(const Image& x_t, int noise_level, const PriorCondition& cond) = 0;
  virtual std::string name() const = 0;
};

/// eps_hat = eps + gain * (x0 - target), with eps recovered from x_t, x0 and alpha_bar.
class OraclePrior final : public Prior {
 public:
  using TargetFn = std::function<Image(const PriorCondition&)>;

  OraclePrior(Image target, double gain);
  OraclePrior(TargetFn target, double gain);

  Image predict_noise(const Image& x_t, int noise_level, const PriorCondition& cond) override;
  std::string name() const override { return "oracle"; }
  double gain() const { return gain_; }
  std::size_t calls() const { return calls_; }

 private:
  TargetFn target_;
  double gain_;
  std::size_t calls_ = 0;
};

struct RemotePriorOptions {
  int retries = 2;
  std::vector<std::chrono::milliseconds> backoff = {std::chrono::milliseconds(100),
                                                    std::chrono::milliseconds(400)};
  std::chrono::milliseconds connect_timeout{1000};
  std::chrono::milliseconds read_timeout{30000};
  /// Forwarded verbatim in the request body when set.
  std::optional<double> guidance_scale;
};

/// HTTP client for POST {endpoint}/v1/epsilon.
class RemotePrior final : public Prior {
 public:
  explicit RemotePrior(std::string endpoint, RemotePriorOptions options = {});

  Image predict_noise(const Image& x_t, int noise_level, const PriorCondition& cond) override;
  std::string name() const override { return "remote"; }
  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
  RemotePriorOptions options_;
};

/// Base64 of the float32 little-endian row-major channel-interleaved RGB values.
std::string encode_image_f32(const Image& img);
/// Inverse of encode_image_f32; throws ProtocolError on bad base64 or size.
Image decode_image_f32(const std::string& b64, int width, int height);

nlohmann::json make_prior_request(const Image& x_t, int noise_level, const PriorCondition& cond,
                                  std::optional<double> guidance_scale = std::nullopt);
/// Parses a response body; checks dimensions against the request.
Image parse_prior_response(const std::string& body, int width, int height);

}  // namespace gs4d

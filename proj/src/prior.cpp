// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/prior.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <thread>

#include "httplib.h"

#include "gs4d/error.hpp"

namespace gs4d {

// ---------------------------------------------------------------------------
// Oracle

OraclePrior::OraclePrior(Image target, double gain)
    : target_([t = std::move(target)](const PriorCondition&) { return t; }), gain_(gain) {}

OraclePrior::OraclePrior(TargetFn target, double gain) : target_(std::move(target)), gain_(gain) {}

Image OraclePrior::predict_noise(const Image& x_t, int /*noise_level*/,
                                 const PriorCondition& cond) {
  if (!cond.clean_render) throw ContractError("oracle prior: clean render not provided");
  const Image& x0 = *cond.clean_render;
  if (!x0.same_shape(x_t)) throw ContractError("oracle prior: clean render shape differs");
  if (!(cond.alpha_bar > 0 && cond.alpha_bar < 1))
    throw ContractError("oracle prior: alpha_bar must be in (0,1)");
  const Image target = target_(cond);
  if (!target.same_shape(x_t)) throw ContractError("oracle prior: target shape differs");
  ++calls_;
  const double sa = std::sqrt(cond.alpha_bar), sb = std::sqrt(1.0 - cond.alpha_bar);
  Image eps_hat(x_t.width, x_t.height, x_t.channels);
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double eps = (x_t.data[i] - sa * x0.data[i]) / sb;
    eps_hat.data[i] = eps + gain_ * (x0.data[i] - target.data[i]);
  }
  return eps_hat;
}

// ---------------------------------------------------------------------------
// Wire encoding

std::string encode_image_f32(const Image& img) {
  std::vector<unsigned char> raw(img.size() * 4);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(img.data[i]));
    raw[4 * i + 0] = static_cast<unsigned char>(u);
    raw[4 * i + 1] = static_cast<unsigned char>(u >> 8);
    raw[4 * i + 2] = static_cast<unsigned char>(u >> 16);
    raw[4 * i + 3] = static_cast<unsigned char>(u >> 24);
  }
  std::string out(4 * ((raw.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), raw.data(),
                                static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Image decode_image_f32(const std::string& b64, int width, int height) {
  if (width < 1 || height < 1) throw ProtocolError("prior: invalid image dimensions");
  if (b64.size() % 4 != 0) throw ProtocolError("prior: base64 length not a multiple of 4");
  std::vector<unsigned char> raw(b64.size() / 4 * 3);
  const int n = EVP_DecodeBlock(raw.data(), reinterpret_cast<const unsigned char*>(b64.data()),
                                static_cast<int>(b64.size()));
  if (n < 0) throw ProtocolError("prior: invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  if (!b64.empty() && b64.back() == '=') --len;
  if (b64.size() > 1 && b64[b64.size() - 2] == '=') --len;
  Image img(width, height, 3);
  if (len != img.size() * 4)
    throw ProtocolError("prior: payload has " + std::to_string(len) + " bytes, expected " +
                        std::to_string(img.size() * 4));
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(raw[4 * i]) |
                            static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
                            static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 |
                            static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
    img.data[i] = std::bit_cast<float>(u);
  }
  return img;
}

nlohmann::json make_prior_request(const Image& x_t, int noise_level, const PriorCondition& cond,
                                  std::optional<double> guidance_scale) {
  if (x_t.channels != 3) throw ParameterError("prior request: image must be RGB");
  if (!cond.reference_image || !cond.reference_image->same_shape(x_t))
    throw ParameterError("prior request: reference image must match the render size");
  nlohmann::json j = {
      {"image", encode_image_f32(x_t)},
      {"height", x_t.height},
      {"width", x_t.width},
      {"noise_level", noise_level},
      {"condition",
       {{"reference_image", encode_image_f32(*cond.reference_image)},
        {"delta_azimuth_deg", cond.delta_azimuth_deg},
        {"delta_elevation_deg", cond.delta_elevation_deg},
        {"delta_radius", cond.delta_radius}}},
  };
  if (guidance_scale) j["guidance_scale"] = *guidance_scale;
  return j;
}

Image parse_prior_response(const std::string& body, int width, int height) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("prior response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("epsilon_hat") || !j["epsilon_hat"].is_string() ||
      !j.contains("height") || !j.contains("width") || !j["height"].is_number_integer() ||
      !j["width"].is_number_integer())
    throw ProtocolError("prior response lacks epsilon_hat/height/width");
  if (j["height"].get<int>() != height || j["width"].get<int>() != width)
    throw ProtocolError("prior response dimensions differ from the request");
  Image eps = decode_image_f32(j["epsilon_hat"].get<std::string>(), width, height);
  for (double v : eps.data)
    if (!std::isfinite(v)) throw ProtocolError("prior response contains non-finite values");
  return eps;
}

// ---------------------------------------------------------------------------
// Remote

RemotePrior::RemotePrior(std::string endpoint, RemotePriorOptions options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {
  if (endpoint_.empty()) throw ParameterError("remote prior: empty endpoint");
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

namespace {

// Splits "http://host:port/prefix" into the client base and the path prefix.
std::pair<std::string, std::string> split_endpoint(const std::string& e) {
  const auto scheme = e.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = e.find('/', host_start);
  if (slash == std::string::npos) return {e, ""};
  return {e.substr(0, slash), e.substr(slash)};
}

}  // namespace

Image RemotePrior::predict_noise(const Image& x_t, int noise_level, const PriorCondition& cond) {
  const std::string body =
      make_prior_request(x_t, noise_level, cond, options_.guidance_scale).dump();
  const auto [base, prefix] = split_endpoint(endpoint_);
  const std::string path = prefix + "/v1/epsilon";

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      const auto& b = options_.backoff;
      const std::size_t k = static_cast<std::size_t>(attempt - 1);
      if (!b.empty()) std::this_thread::sleep_for(b[std::min(k, b.size() - 1)]);
    }
    httplib::Client client(base);
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);
    client.set_write_timeout(options_.read_timeout);
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200)
      throw PriorUnavailableError("prior at " + endpoint_ + " returned HTTP " +
                                  std::to_string(res->status));
    return parse_prior_response(res->body, x_t.width, x_t.height);
  }
  throw PriorUnavailableError("prior at " + endpoint_ + " unreachable after " +
                              std::to_string(options_.retries) + " retries: " + last_error);
}

}  // namespace gs4d

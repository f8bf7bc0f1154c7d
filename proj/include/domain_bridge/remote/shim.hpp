// Copyright 2026 The Domain Bridge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/errors.hpp"
#include "domain_bridge/oracles.hpp"
#include "domain_bridge/remote/cache.hpp"
#include "domain_bridge/remote/codec.hpp"
#include "domain_bridge/remote/http.hpp"
#include "domain_bridge/types.hpp"

namespace domain_bridge::remote {

inline constexpr int kMinGeneralityLevel = 1;
inline constexpr int kMaxGeneralityLevel = 12;

/// Engine level g in [0,1] to the shim's integer level: 1.0 is the most
/// general setting (12), 0.0 the most specific (1).
inline int shim_generality_level(double g) {
  if (!(g >= 0.0 && g <= 1.0)) throw InvalidInput("generality level must lie in [0,1]");
  return kMinGeneralityLevel + static_cast<int>(std::lround(g * (kMaxGeneralityLevel - kMinGeneralityLevel)));
}

inline bool has_png_signature(const std::vector<std::uint8_t>& b) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return b.size() > 8 && std::equal(std::begin(kSig), std::end(kSig), b.begin());
}

struct ShimInfo {
  std::size_t dim = 0;
  std::optional<std::size_t> num_classes;
  std::string backend;
};

/// One shim endpoint plus its response cache. Requests are keyed by
/// (kind, digest of the request JSON); the digest doubles as the
/// idempotency key so retried requests can be deduplicated server side.
class ShimClient {
 public:
  ShimClient(std::shared_ptr<HttpTransport> transport, std::shared_ptr<ResponseCache> cache)
      : http_(std::move(transport)), cache_(std::move(cache)) {}

  /// Cached response for a request, already validated by `decode`.
  template <class Decode>
  auto cached(const std::string& kind, const Json& request, Decode decode) const
      -> std::optional<decltype(decode(Json{}))> {
    if (auto bytes = cache_->get(kind, key(kind, request))) return decode(parse_cached(*bytes, kind));
    return std::nullopt;
  }

  /// Network round-trip; the response is cached only after it validates,
  /// in a lossless (shortest round-trip) JSON form.
  template <class Decode>
  auto fetch(const std::string& kind, const Json& request, Decode decode) const {
    const std::string digest = key(kind, request);
    const Json resp = http_->post("/v1/" + kind, request, digest);
    auto value = decode(resp);
    cache_->put(kind, digest, resp.dump());
    return value;
  }

  ShimInfo info() const {
    const Json req = Json::object();
    if (auto hit = cached("info", req, parse_info)) return *hit;
    const Json resp = http_->get("/v1/info");
    auto value = parse_info(resp);
    cache_->put("info", key("info", req), resp.dump());
    return value;
  }

  const HttpTransport& transport() const { return *http_; }
  const ResponseCache& cache() const { return *cache_; }

  static ShimInfo parse_info(const Json& r) {
    if (!r.is_object() || !r.contains("dim") || !r["dim"].is_number_unsigned() || r["dim"].get<std::size_t>() == 0)
      throw OracleProtocolError("info: 'dim' must be a positive integer");
    ShimInfo info{.dim = r["dim"].get<std::size_t>()};
    if (!r.contains("num_classes")) throw OracleProtocolError("info: 'num_classes' missing");
    if (!r["num_classes"].is_null()) {
      if (!r["num_classes"].is_number_unsigned()) throw OracleProtocolError("info: 'num_classes' must be int or null");
      info.num_classes = r["num_classes"].get<std::size_t>();
    }
    if (!r.contains("backend") || !r["backend"].is_string()) throw OracleProtocolError("info: 'backend' missing");
    info.backend = r["backend"].get<std::string>();
    return info;
  }

 private:
  std::string key(const std::string& kind, const Json& request) const {
    return argument_digest({{"endpoint", http_->config().model_name}, {"kind", kind}, {"request", request}});
  }
  static Json parse_cached(const std::string& bytes, const std::string& kind) {
    try {
      return Json::parse(bytes);
    } catch (const Json::parse_error&) {
      throw OracleProtocolError("cache entry for '" + kind + "' is not JSON");
    }
  }

  std::shared_ptr<HttpTransport> http_;
  std::shared_ptr<ResponseCache> cache_;
};

namespace detail {

inline const Json& require(const Json& r, const char* kind, const char* field) {
  if (!r.is_object() || !r.contains(field))
    throw OracleProtocolError(std::string(kind) + ": response lacks '" + field + "'");
  return r[field];
}

inline Embedding parse_embedding(const Json& r, const char* kind, std::optional<std::size_t> expected_dim) {
  const Json& v = require(r, kind, "embedding");
  const Json& d = require(r, kind, "dim");
  if (!v.is_array() || !d.is_number_unsigned()) throw OracleProtocolError(std::string(kind) + ": bad embedding types");
  std::vector<double> values;
  values.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw OracleProtocolError(std::string(kind) + ": embedding entries must be numbers");
    values.push_back(x.get<double>());
  }
  if (values.size() != d.get<std::size_t>())
    throw OracleProtocolError(std::string(kind) + ": embedding length differs from 'dim'");
  if (expected_dim && values.size() != *expected_dim)
    throw OracleProtocolError(std::string(kind) + ": embedding length differs from the advertised dimension");
  try {
    return Embedding(std::move(values));
  } catch (const InvalidInput& e) {
    throw OracleProtocolError(std::string(kind) + ": " + e.what());
  }
}

inline Json image_request(const Sample& x) { return {{"image_b64", base64_encode(x.payload)}}; }

inline auto decode_parser(const Description& p, std::uint64_t seed) {
  return [p, seed](const Json& r) {
    const Json& img = require(r, "decode", "image_b64");
    const Json& fmt = require(r, "decode", "format");
    const Json& echoed = require(r, "decode", "seed");
    if (!fmt.is_string() || fmt.get<std::string>() != "png")
      throw OracleProtocolError("decode: format must be \"png\"");
    if (!echoed.is_number_unsigned() || echoed.get<std::uint64_t>() != seed)
      throw OracleProtocolError("decode: response seed does not echo the request seed");
    if (!img.is_string()) throw OracleProtocolError("decode: image_b64 must be a string");
    std::vector<std::uint8_t> bytes;
    try {
      bytes = base64_decode(img.get<std::string>());
    } catch (const ParseError& e) {
      throw OracleProtocolError(std::string("decode: ") + e.what());
    }
    if (!has_png_signature(bytes)) throw OracleProtocolError("decode: image is not a PNG");
    return Sample(std::move(bytes), seed, p);
  };
}

inline auto embedding_parser(const char* kind, std::optional<std::size_t> dim) {
  return [kind, dim](const Json& r) { return parse_embedding(r, kind, dim); };
}

inline auto label_parser(std::optional<std::size_t> n) {
  return [n](const Json& r) {
    const Json& l = require(r, "classify", "label");
    if (!l.is_number_integer() || l.get<long long>() < 0)
      throw OracleProtocolError("classify: label must be a non-negative integer");
    const auto label = l.get<std::size_t>();
    if (n && label >= *n) throw OracleProtocolError("classify: label exceeds the advertised class count");
    return ClassLabel{label};
  };
}

inline Description parse_caption(const Json& r) {
  const Json& d = require(r, "caption", "description");
  if (!d.is_string()) throw OracleProtocolError("caption: description must be a string");
  try {
    return Description(d.get<std::string>());
  } catch (const InvalidInput&) {
    throw OracleProtocolError("caption: description is empty");
  }
}

}  // namespace detail

class ShimDecoder final : public Decoder {
 public:
  explicit ShimDecoder(std::shared_ptr<const ShimClient> c) : c_(std::move(c)) {}

  static Json request(const Description& p, std::uint64_t seed, double g) {
    return {{"description", p.text()}, {"seed", seed}, {"generality_level", shim_generality_level(g)}};
  }

 protected:
  std::optional<Sample> lookup(const Description& p, std::uint64_t seed, double g) const override {
    return c_->cached("decode", request(p, seed, g), detail::decode_parser(p, seed));
  }
  Sample generate(const Description& p, std::uint64_t seed, double g) const override {
    return c_->fetch("decode", request(p, seed, g), detail::decode_parser(p, seed));
  }

 private:
  std::shared_ptr<const ShimClient> c_;
};

class ShimTextEmbedder final : public TextEmbedder {
 public:
  explicit ShimTextEmbedder(std::shared_ptr<const ShimClient> c, std::optional<std::size_t> dim = std::nullopt)
      : c_(std::move(c)), dim_(dim) {}

 protected:
  std::optional<Embedding> lookup(const Description& p) const override {
    return c_->cached("embed_text", {{"text", p.text()}}, detail::embedding_parser("embed_text", dim_));
  }
  Embedding compute(const Description& p) const override {
    return c_->fetch("embed_text", {{"text", p.text()}}, detail::embedding_parser("embed_text", dim_));
  }

 private:
  std::shared_ptr<const ShimClient> c_;
  std::optional<std::size_t> dim_;
};

class ShimImageEncoder final : public ImageEncoder {
 public:
  explicit ShimImageEncoder(std::shared_ptr<const ShimClient> c, std::optional<std::size_t> dim = std::nullopt)
      : c_(std::move(c)), dim_(dim) {}

 protected:
  std::optional<Embedding> lookup_embedding(const Sample& x) const override {
    return c_->cached("embed_image", detail::image_request(x), detail::embedding_parser("embed_image", dim_));
  }
  Embedding compute_embedding(const Sample& x) const override {
    return c_->fetch("embed_image", detail::image_request(x), detail::embedding_parser("embed_image", dim_));
  }
  std::optional<Description> lookup_caption(const Sample& x) const override {
    return c_->cached("caption", detail::image_request(x), detail::parse_caption);
  }
  Description compute_caption(const Sample& x) const override {
    return c_->fetch("caption", detail::image_request(x), detail::parse_caption);
  }

 private:
  std::shared_ptr<const ShimClient> c_;
  std::optional<std::size_t> dim_;
};

/// Reads the hard label only; any other response field is ignored.
class ShimTarget final : public TargetModel {
 public:
  explicit ShimTarget(std::shared_ptr<const ShimClient> c, std::optional<std::size_t> num_classes = std::nullopt)
      : c_(std::move(c)), n_(num_classes) {}

  std::optional<std::size_t> num_classes() const override { return n_; }

 protected:
  std::optional<ClassLabel> lookup(const Sample& x) const override {
    return c_->cached("classify", detail::image_request(x), detail::label_parser(n_));
  }
  ClassLabel compute(const Sample& x) const override {
    return c_->fetch("classify", detail::image_request(x), detail::label_parser(n_));
  }

 private:
  std::shared_ptr<const ShimClient> c_;
  std::optional<std::size_t> n_;
};

}  // namespace domain_bridge::remote

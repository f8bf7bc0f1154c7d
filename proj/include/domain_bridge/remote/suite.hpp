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

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "domain_bridge/oracles.hpp"
#include "domain_bridge/remote/cache.hpp"
#include "domain_bridge/remote/http.hpp"
#include "domain_bridge/remote/llm.hpp"
#include "domain_bridge/remote/shim.hpp"

namespace domain_bridge::remote {

inline constexpr const char* kApiKeyVariable = "DOMAIN_BRIDGE_LLM_API_KEY";

struct RemoteSettings {
  EndpointConfig shim;
  EndpointConfig llm;
  std::filesystem::path prompt_dir = DOMAIN_BRIDGE_PROMPT_DIR;
  std::shared_ptr<ResponseCache> cache;  // from the environment when null
  LlmClient::Log log;
};

struct RemoteSuite {
  OracleSuite suite;
  ShimInfo info;
  std::map<std::string, std::string> template_digests;
  std::shared_ptr<HttpTransport> shim_transport;
  std::shared_ptr<HttpTransport> llm_transport;
  std::shared_ptr<ResponseCache> cache;
};

/// Wires shim- and LLM-backed oracles around one shared cache. Queries
/// /v1/info (through the cache) to learn the embedding dimension and class
/// count, so an unreachable shim fails here with OracleUnavailable.
inline RemoteSuite make_remote_suite(RemoteSettings s) {
  if (!s.llm.api_key) {
    if (const char* k = std::getenv(kApiKeyVariable); k && *k) s.llm.api_key = k;
  }
  RemoteSuite r;
  r.cache = s.cache ? s.cache : ResponseCache::from_environment();
  r.shim_transport = std::make_shared<HttpTransport>(s.shim);
  r.llm_transport = std::make_shared<HttpTransport>(s.llm);
  auto shim = std::make_shared<const ShimClient>(r.shim_transport, r.cache);
  r.info = shim->info();
  auto prompts = PromptSet::load(s.prompt_dir);
  r.template_digests = prompts.digests();
  auto llm = std::make_shared<const LlmClient>(r.llm_transport, r.cache, std::move(prompts), s.log);

  r.suite.decoder = std::make_shared<ShimDecoder>(shim);
  r.suite.text_embedder = std::make_shared<ShimTextEmbedder>(shim, r.info.dim);
  r.suite.image_encoder = std::make_shared<ShimImageEncoder>(shim, r.info.dim);
  r.suite.target = std::make_shared<ShimTarget>(shim, r.info.num_classes);
  r.suite.summarizer = std::make_shared<LlmSummarizer>(llm);
  r.suite.grouper = std::make_shared<LlmGrouper>(llm);
  r.suite.enricher = std::make_shared<LlmEnricher>(llm);
  return r;
}

}  // namespace domain_bridge::remote

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


#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>
#include <vector>

#include "domain_bridge/cli/manifest.hpp"
#include "domain_bridge/remote/suite.hpp"
#include "domain_bridge/search.hpp"
#include "domain_bridge/synthetic/bench.hpp"
#include "remote_support.hpp"

namespace db = domain_bridge;
namespace rb = domain_bridge::remote;
namespace syn = domain_bridge::synthetic;
namespace ts = testing_support;
using db::ClassLabel;
using db::Description;
using db::Json;

using ts::dead_endpoint;
using ts::endpoint;
using ts::image_sample;
using ts::quiet_transport;
using ts::RemoteWorld;


TEST(Codec, Sha256KnownVectors) {
  EXPECT_EQ(rb::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(rb::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Codec, Base64RoundTripAndStrictness) {
  const std::string text = "any carnal pleas";
  for (std::size_t n = 0; n <= text.size(); ++n) {
    const std::vector<std::uint8_t> bytes(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_EQ(rb::base64_decode(rb::base64_encode(bytes)), bytes);
  }
  EXPECT_EQ(rb::base64_encode({'M', 'a'}), "TWE=");
  EXPECT_THROW(rb::base64_decode("TWE"), db::ParseError);
  EXPECT_THROW(rb::base64_decode("T!E="), db::ParseError);
}

TEST(Shim, GeneralityLevelMapping) {
  EXPECT_EQ(rb::shim_generality_level(1.0), 12);
  EXPECT_EQ(rb::shim_generality_level(0.0), 1);
  EXPECT_EQ(rb::shim_generality_level(0.5), 7);
  EXPECT_THROW(rb::shim_generality_level(1.5), db::InvalidInput);
  EXPECT_EQ(rb::ShimDecoder::request(Description("A  Bird"), 9, 0.0),
            Json({{"description", "a bird"}, {"seed", 9}, {"generality_level", 1}}));
}

TEST(Shim, GoldenFixtures) {
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(ts::kShimFixtures)) {
    EXPECT_EQ(ts::check_fixture(entry.path()), std::vector<std::string>{}) << entry.path();
    ++seen;
  }
  EXPECT_EQ(seen, 13u);
}

TEST(Shim, DecodeRejectsNonPngPayload) {
  ts::MockServer server([](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body);
    ts::reply_json(res, 200, {{"image_b64", rb::base64_encode({1, 2, 3, 4, 5, 6, 7, 8, 9})}, {"format", "png"},
                              {"seed", body.at("seed")}});
  });
  auto client = std::make_shared<const rb::ShimClient>(quiet_transport(endpoint(server.url())),
                                                       std::make_shared<rb::ResponseCache>());
  db::Budget budget;
  EXPECT_THROW(rb::ShimDecoder(client).decode(Description("bird"), 1, 0.5, budget), db::OracleProtocolError);
}

TEST(Shim, OnlyCacheMissesSpendBudget) {
  ts::MockServer server([](const httplib::Request&, httplib::Response& res) {
    ts::reply_json(res, 200, {{"label", 1}, {"scores", {0.1, 0.9}}});
  });
  auto cache = std::make_shared<rb::ResponseCache>();
  auto http = quiet_transport(endpoint(server.url()));
  auto client = std::make_shared<const rb::ShimClient>(http, cache);
  const rb::ShimTarget target(client, 2);
  db::Budget budget;
  const auto x = image_sample("iVBORw0KGgo=");
  EXPECT_EQ(target.classify(x, budget).index, 1u);
  EXPECT_EQ(target.classify(x, budget).index, 1u);
  EXPECT_EQ(budget.spent(db::OracleKind::kClassify), 1u);
  EXPECT_EQ(http->network_calls(), 1u);
  EXPECT_EQ(cache->hits(), 1u);
}

TEST(Http, RetriesWithTheSameIdempotencyKey) {
  std::atomic<int> n{0};
  ts::MockServer server([&n](const httplib::Request&, httplib::Response& res) {
    const int i = n++;
    if (i == 0) return ts::reply_error(res, 503, "busy", "warming up");
    if (i == 1) return ts::reply_error(res, 429, "rate", "slow down");
    ts::reply_json(res, 200, {{"ok", true}});
  });
  auto cfg = endpoint(server.url("/base/"));
  cfg.backoff = std::chrono::milliseconds(250);
  cfg.api_key = "sekret";
  std::vector<std::chrono::milliseconds> waits;
  auto http = quiet_transport(cfg, &waits);
  EXPECT_EQ(http->post("/v1/thing", {{"a", 1}}, "key-1"), Json({{"ok", true}}));
  const auto reqs = server.requests();
  ASSERT_EQ(reqs.size(), 3u);
  for (const auto& r : reqs) {
    EXPECT_EQ(r.idempotency_key, "key-1");
    EXPECT_EQ(r.authorization, "Bearer sekret");
    EXPECT_EQ(r.path, "/base/v1/thing");
    EXPECT_EQ(r.body, reqs.front().body);
  }
  EXPECT_EQ(waits, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(250),
                                                           std::chrono::milliseconds(500)}));
  EXPECT_EQ(http->network_calls(), 3u);
}

TEST(Http, ClientErrorsAreNotRetried) {
  ts::MockServer server(
      [](const httplib::Request&, httplib::Response& res) { ts::reply_error(res, 404, "nope", "missing"); });
  auto http = quiet_transport(endpoint(server.url()));
  try {
    http->get("/v1/info");
    FAIL();
  } catch (const db::OracleUnavailable& e) {
    EXPECT_NE(std::string(e.what()).find("404"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
  EXPECT_EQ(server.request_count(), 1u);
}

TEST(Http, TransportFailuresExhaustRetries) {
  auto cfg = dead_endpoint();
  cfg.max_retries = 2;
  auto http = quiet_transport(cfg);
  EXPECT_THROW(http->get("/v1/info"), db::OracleUnavailable);
  EXPECT_EQ(http->network_calls(), 3u);
}

TEST(Http, NonJsonBodyIsAProtocolError) {
  ts::MockServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content("<html>", "text/html");
  });
  EXPECT_THROW(quiet_transport(endpoint(server.url()))->get("/v1/info"), db::OracleProtocolError);
}

TEST(Http, InFlightLimit) {
  std::atomic<int> active{0}, peak{0};
  ts::MockServer server([&](const httplib::Request&, httplib::Response& res) {
    const int now = ++active;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(40));
    --active;
    ts::reply_json(res, 200, Json::object());
  });
  auto cfg = endpoint(server.url());
  cfg.max_in_flight = 2;
  auto http = quiet_transport(cfg);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { http->get("/v1/x"); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(server.request_count(), 8u);
  EXPECT_LE(peak.load(), 2);
}

TEST(Http, EndpointConfigFromJson) {
  ::setenv("DB_TEST_KEY", "from-env", 1);
  const auto c = rb::EndpointConfig::from_json(
      {{"base_url", "https://example.invalid/v1"}, {"api_key_env", "DB_TEST_KEY"}, {"timeout_s", 1.5},
       {"max_retries", 5}},
      "llm");
  EXPECT_EQ(c.api_key, std::optional<std::string>("from-env"));
  EXPECT_EQ(c.timeout, std::chrono::milliseconds(1500));
  EXPECT_EQ(c.max_retries, 5);
  EXPECT_THROW(rb::EndpointConfig::from_json({{"base_url", "ftp://x"}}, "shim"), db::ParseError);
  EXPECT_THROW(rb::EndpointConfig::from_json({{"timeout_s", 3}}, "shim"), db::ParseError);
}

TEST(Cache, FirstWriteWinsAndDivergenceIsCounted) {
  rb::ResponseCache cache;
  cache.put("classify", "d1", "{\"label\":1}");
  cache.put("classify", "d1", "{\"label\":1}");
  EXPECT_EQ(cache.divergences(), 0u);
  cache.put("classify", "d1", "{\"label\":2}");
  EXPECT_EQ(cache.divergences(), 1u);
  EXPECT_EQ(cache.get("classify", "d1"), std::optional<std::string>("{\"label\":1}"));
  EXPECT_FALSE(cache.get("classify", "d2").has_value());
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 1u);
}

TEST(Cache, DirectoryPersists) {
  const auto dir = ts::fresh_temp_dir("cache");
  rb::ResponseCache(dir).put("embed_text", "abc", "{\"x\":1}");
  EXPECT_TRUE(std::filesystem::exists(dir / "embed_text" / "abc.json"));
  rb::ResponseCache again(dir);
  EXPECT_EQ(again.get("embed_text", "abc"), std::optional<std::string>("{\"x\":1}"));
}

TEST(Cache, ArgumentDigestIgnoresKeyOrder) {
  EXPECT_EQ(rb::argument_digest(Json::parse(R"({"a":1,"b":[2,3]})")),
            rb::argument_digest(Json::parse(R"({"b":[2,3],"a":1})")));
  EXPECT_NE(rb::argument_digest({{"a", 1}}), rb::argument_digest({{"a", 2}}));
}

TEST(Prompts, RenderAndDigests) {
  const auto p = rb::PromptSet::from_strings(ts::scripted_prompt_texts());
  EXPECT_EQ(p.render("enrich", {{"text", "bird"}, {"n_variants", 3}}), "enrich\nbird\n3");
  EXPECT_THROW(p.render("enrich", {{"text", "bird"}}), db::InvalidInput);
  const auto d = p.digests();
  EXPECT_EQ(d.size(), 4u);
  EXPECT_EQ(d.at("prompt/system"), rb::sha256_hex("scripted"));
  // Field values are inserted verbatim, never re-scanned for placeholders.
  EXPECT_EQ(p.render("enrich", {{"text", "{{n_variants}}"}, {"n_variants", 2}}), "enrich\n{{n_variants}}\n2");
}

TEST(Prompts, BundledTemplatesLoad) {
  const auto p = rb::PromptSet::load();
  for (const char* k : {"system", "summarize", "group", "enrich"})
    EXPECT_TRUE(p.digests().count(std::string("prompt/") + k)) << k;
}

TEST(Prompts, ParseStringArray) {
  EXPECT_EQ(rb::parse_string_array("[\"a\", \"b\"]"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(rb::parse_string_array("```json\n[\"a\"]\n```"), (std::vector<std::string>{"a"}));
  EXPECT_FALSE(rb::parse_string_array("Here you go: a, b").has_value());
  EXPECT_FALSE(rb::parse_string_array("[1, 2]").has_value());
  EXPECT_FALSE(rb::parse_string_array("{\"a\": 1}").has_value());
}

TEST(Llm, DeduplicatesReplies) {
  ts::MockServer server([](const httplib::Request&, httplib::Response& res) {
    ts::reply_json(res, 200, ts::chat_reply("[\"a\",\"a\",\"b\"]"));
  });
  const auto out = rb::llm_batch("enrich", {{"text", "bird"}, {"n_variants", 3}}, endpoint(server.url()));
  EXPECT_EQ(out, (std::vector<Description>{Description("a"), Description("b")}));
}

TEST(Llm, ProseGetsOneRepairThenFails) {
  ts::MockServer server([](const httplib::Request&, httplib::Response& res) {
    ts::reply_json(res, 200, ts::chat_reply("Certainly! A parrot would be a good choice."));
  });
  std::vector<std::string> logged;
  rb::LlmClient client(quiet_transport(endpoint(server.url())), std::make_shared<rb::ResponseCache>(),
                       rb::PromptSet::from_strings(ts::scripted_prompt_texts()),
                       [&](std::string_view s) { logged.emplace_back(s); });
  EXPECT_THROW(client.fetch("enrich", {{"text", "parrot"}, {"n_variants", 2}}), db::OracleProtocolError);
  const auto reqs = server.requests();
  ASSERT_EQ(reqs.size(), 2u);
  const Json second = Json::parse(reqs[1].body);
  ASSERT_EQ(second.at("messages").size(), 4u);
  EXPECT_EQ(second["messages"][3]["content"], std::string(rb::kRepairInstruction));
  EXPECT_EQ(second["messages"][2]["role"], "assistant");
  EXPECT_EQ(reqs[1].idempotency_key, reqs[0].idempotency_key + "-repair");
  ASSERT_EQ(logged.size(), 1u);
  EXPECT_NE(logged[0].find("parrot would be"), std::string::npos);
}

TEST(Llm, RepairCanSucceed) {
  std::atomic<int> n{0};
  ts::MockServer server([&n](const httplib::Request&, httplib::Response& res) {
    ts::reply_json(res, 200, ts::chat_reply(n++ == 0 ? "parrot, flying" : "[\"parrot, flying\"]"));
  });
  rb::LlmClient client(quiet_transport(endpoint(server.url())), std::make_shared<rb::ResponseCache>(),
                       rb::PromptSet::from_strings(ts::scripted_prompt_texts()));
  EXPECT_EQ(client.fetch("enrich", {{"text", "parrot"}, {"n_variants", 1}}),
            std::vector<Description>{Description("parrot, flying")});
  EXPECT_EQ(server.request_count(), 2u);
}

TEST(Llm, GroupingRequestShapeAndCaching) {
  ts::MockServer server([](const httplib::Request&, httplib::Response& res) {
    ts::reply_json(res, 200, ts::chat_reply("[\"parrot\"]"));
  });
  auto http = quiet_transport(endpoint(server.url("/v1")));
  auto cache = std::make_shared<rb::ResponseCache>();
  auto client = std::make_shared<const rb::LlmClient>(http, cache, rb::PromptSet::load());
  const rb::LlmGrouper grouper(client);
  db::Budget budget;
  const std::vector<Description> in{Description("green parrot"), Description("parrot on branch"),
                                    Description("flying parrot")};
  EXPECT_EQ(grouper.group(in, 1, budget), std::vector<Description>{Description("parrot")});
  EXPECT_EQ(grouper.group(in, 1, budget), std::vector<Description>{Description("parrot")});
  EXPECT_EQ(http->network_calls(), 1u);
  EXPECT_EQ(budget.spent(db::OracleKind::kGroup), 1u);

  const auto r = server.requests().at(0);
  EXPECT_EQ(r.path, "/v1/chat/completions");
  const Json body = Json::parse(r.body);
  EXPECT_EQ(body.at("model"), "test-model");
  EXPECT_EQ(body.at("temperature"), 0);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  const std::string user = body["messages"][1]["content"];
  for (const auto& d : in) EXPECT_NE(user.find(d.text()), std::string::npos);
}

TEST(Llm, EmptyGroupingIsAProtocolError) {
  ts::MockServer server(
      [](const httplib::Request&, httplib::Response& res) { ts::reply_json(res, 200, ts::chat_reply("[]")); });
  auto client = std::make_shared<const rb::LlmClient>(quiet_transport(endpoint(server.url())),
                                                      std::make_shared<rb::ResponseCache>(),
                                                      rb::PromptSet::from_strings(ts::scripted_prompt_texts()));
  db::Budget budget;
  EXPECT_THROW(rb::LlmGrouper(client).group({Description("a"), Description("b")}, 1, budget),
               db::OracleProtocolError);
}

TEST(Llm, BatchValidatesFields) {
  const auto cfg = endpoint("http://127.0.0.1:9");
  EXPECT_THROW(rb::llm_batch("paraphrase", {{"text", "x"}}, cfg), db::InvalidInput);
  EXPECT_THROW(rb::llm_batch("group", {{"texts", {"a"}}}, cfg), db::InvalidInput);
  EXPECT_THROW(rb::llm_batch("summarize", {{"text", "a"}, {"l", 2}}, cfg), db::InvalidInput);
}

TEST(RemoteSuite, UnreachableShimFailsUpFront) {
  rb::RemoteSettings s;
  s.shim = dead_endpoint();
  s.llm = dead_endpoint();
  s.cache = std::make_shared<rb::ResponseCache>();
  EXPECT_THROW(rb::make_remote_suite(s), db::OracleUnavailable);
}

TEST(RemoteSuite, SearchOverHttpMatchesInProcess) {
  RemoteWorld w;
  const auto dir = ts::fresh_temp_dir("remote_cache");
  const auto cfg = syn::bench_config();
  const auto roots = syn::single_token_roots(w.u->spec());

  auto remote = rb::make_remote_suite(w.settings(std::make_shared<rb::ResponseCache>(dir)));
  EXPECT_EQ(remote.info.dim, w.u->dim());
  EXPECT_EQ(remote.info.num_classes, std::optional<std::size_t>(4));
  db::SearchOptions opt;
  opt.template_digests = remote.template_digests;
  const auto over_http = db::run_search(roots, ClassLabel{0}, cfg, remote.suite, opt);
  EXPECT_EQ(over_http.best_description, w.u->render(w.u->spec().classes[0].required_tokens));
  EXPECT_GT(remote.shim_transport->network_calls(), 0u);
  EXPECT_EQ(over_http.tree.template_digests.at("prompt/group"), remote.template_digests.at("prompt/group"));

  const auto local = db::run_search(roots, ClassLabel{0}, cfg, syn::make_suite(w.u));
  EXPECT_EQ(over_http.best_description, local.best_description);
  EXPECT_EQ(over_http.best_objective.relevance, local.best_objective.relevance);
  EXPECT_NEAR(over_http.best_objective.value, local.best_objective.value, 1e-12);

  // Warm cache read back from disk, with both services gone.
  rb::RemoteSettings offline;
  offline.shim = dead_endpoint();
  offline.shim.model_name = "test-model";
  offline.llm = dead_endpoint();
  offline.llm.model_name = "test-model";
  offline.prompt_dir = w.prompts;
  offline.cache = std::make_shared<rb::ResponseCache>(dir);
  auto warm = rb::make_remote_suite(offline);
  const auto replay = db::run_search(roots, ClassLabel{0}, cfg, warm.suite, opt);
  EXPECT_EQ(warm.shim_transport->network_calls(), 0u);
  EXPECT_EQ(warm.llm_transport->network_calls(), 0u);
  EXPECT_EQ(warm.suite.budget->total_spent(), 0u);
  EXPECT_TRUE(db::serialize_tree(replay.tree) == db::serialize_tree(over_http.tree));
  EXPECT_EQ(offline.cache->divergences(), 0u);
}

TEST(RemoteSuite, WarmMemoryCacheReproducesTheTreeByteForByte) {
  RemoteWorld w;
  auto cache = std::make_shared<rb::ResponseCache>();
  const auto cfg = syn::bench_config();
  const auto roots = syn::single_token_roots(w.u->spec());
  auto first = rb::make_remote_suite(w.settings(cache));
  const auto a = db::run_search(roots, ClassLabel{2}, cfg, first.suite);
  auto second = rb::make_remote_suite(w.settings(cache));
  const auto b = db::run_search(roots, ClassLabel{2}, cfg, second.suite);
  EXPECT_EQ(second.shim_transport->network_calls(), 0u);
  EXPECT_EQ(second.llm_transport->network_calls(), 0u);
  EXPECT_EQ(first.suite.budget->total_spent(), first.shim_transport->network_calls() +
                                                   first.llm_transport->network_calls() - 1);
  EXPECT_TRUE(db::serialize_tree(a.tree) == db::serialize_tree(b.tree));
  EXPECT_EQ(b.total_spent(db::OracleKind::kDecode), 0u);
}

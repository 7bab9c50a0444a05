#include <atomic>
#include <filesystem>
#include <sstream>
#include <thread>

#include "coqforge/classifier.hpp"
#include "coqforge/corpus_io.hpp"
#include "coqforge/error.hpp"
#include "coqforge/evaluate.hpp"
#include "coqforge/llm_client.hpp"
#include "coqforge/polisher.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "process.hpp"
#include "stub_server.hpp"

using namespace coqforge;
using namespace coqforge::testing;
namespace fs = std::filesystem;

namespace {

LlmClientConfig stub_config(const std::string& endpoint) {
  LlmClientConfig config;
  config.endpoint = endpoint;
  config.model = "stub-model";
  config.api_key_env = "";
  config.requests_per_minute = 0;
  config.max_retries = 1;
  config.retry_backoff_ms = 1;
  config.timeout_seconds = 5;
  return config;
}

// An endpoint on a port nobody listens on.
std::string dead_endpoint() {
  int port;
  {
    StubChatServer probe(echo_reply);
    port = probe.port();
  }
  return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
}

Conversation conv_of(std::string id, std::vector<std::string> texts) {
  Conversation c;
  c.id = std::move(id);
  for (std::size_t i = 0; i < texts.size(); ++i)
    c.utterances.push_back({i % 2 == 0 ? Speaker::Patient : Speaker::Doctor, texts[i]});
  return c;
}

struct VectorReader final : CorpusReader {
  explicit VectorReader(std::vector<Conversation> v) : convs(std::move(v)) {}
  std::optional<Conversation> next() override {
    if (pos >= convs.size()) return std::nullopt;
    return convs[pos++];
  }
  std::vector<Conversation> convs;
  std::size_t pos = 0;
};

struct PolishRun {
  std::vector<Conversation> out;
  PolishReport report;
};

PolishRun run_polish(Polisher& polisher, std::vector<Conversation> input, PolishRunOptions options = {}) {
  VectorReader reader(std::move(input));
  PolishRun run;
  run.report = polish_corpus(
      reader, [&](const Conversation& c) { run.out.push_back(c); }, polisher, LexiconClassifier(), options);
  return run;
}

}  // namespace

TEST_SUITE("template") {
  TEST_CASE("direct substitution") {
    const PromptTemplate t("t", "H:{history}|A:{answer}");
    const auto c = conv_of("c", {"咳嗽", "多喝水"});
    CHECK(render_prompt(t, c, 1) == "H:病人：咳嗽|A:多喝水");
  }
  TEST_CASE("history is the transcript before the target") {
    const auto c = conv_of("c", {"咳嗽", "几天了？", "三天", "多喝水"});
    CHECK(render_history(c, 3) == "病人：咳嗽\n医生：几天了？\n病人：三天");
    CHECK(render_prompt(PromptTemplate("t", "{history}#{answer}"), c, 3) ==
          "病人：咳嗽\n医生：几天了？\n病人：三天#多喝水");
  }
  TEST_CASE("placeholders must occur exactly once") {
    CHECK_THROWS_AS(PromptTemplate("t", "{history}{history}{answer}"), ConfigError);
    CHECK_THROWS_AS(PromptTemplate("t", "{answer}"), ConfigError);
    CHECK_NOTHROW(PromptTemplate::default_template());
  }
  TEST_CASE("only doctor turns can be targets") {
    CHECK_THROWS_AS(render_prompt(PromptTemplate::default_template(), conv_of("c", {"a", "b"}), 0),
                    ArgumentError);
  }
  TEST_CASE("substitution does not re-expand placeholders in the data") {
    const PromptTemplate t("t", "{history}|{answer}");
    const auto c = conv_of("c", {"{answer}", "{history}"});
    CHECK(render_prompt(t, c, 1) == "病人：{answer}|{history}");
  }
}

TEST_SUITE("client") {
  TEST_CASE("request body shape") {
    ChatRequest r{"你好", 0.5, 128, 0.75};
    const auto body = chat_request_body("m", r);
    CHECK(body["model"] == "m");
    CHECK(body["messages"].size() == 1);
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "你好");
    CHECK(body["temperature"] == 0.5);
    CHECK(body["max_tokens"] == 128);
    CHECK(body["top_p"] == 0.75);
    CHECK_FALSE(chat_request_body("m", ChatRequest{"x"}).contains("top_p"));
  }

  TEST_CASE("missing key variable is a config error") {
    LlmClientConfig config;
    config.api_key_env = "COQ_FORGE_TEST_DEFINITELY_UNSET";
    CHECK_THROWS_AS(LlmClient{config}, ConfigError);
  }

  TEST_CASE("bearer token comes from the environment") {
    StubChatServer stub(echo_reply);
    auto config = stub_config(stub.endpoint());
    config.api_key_env = "COQ_FORGE_API_KEY";  // set by the test harness
    LlmClient client(config);
    CHECK(client.complete({"hi"}) == "hi");
    CHECK(stub.requests().at(0).authorization == "Bearer test-key");
  }

  TEST_CASE("auth failures are fatal, server errors are retried then transient") {
    StubChatServer denied([](const nlohmann::json&) { return StubReply{401, "bad key", std::nullopt}; });
    LlmClient a(stub_config(denied.endpoint()));
    try {
      a.complete({"x"});
      FAIL("expected PolishError");
    } catch (const PolishError& e) {
      CHECK(e.kind() == PolishError::Kind::Fatal);
      CHECK(e.status() == 401);
    }
    CHECK(denied.request_count() == 1);

    StubChatServer broken([](const nlohmann::json&) { return StubReply{503, "busy", std::nullopt}; });
    LlmClient b(stub_config(broken.endpoint()));
    try {
      b.complete({"x"});
      FAIL("expected PolishError");
    } catch (const PolishError& e) {
      CHECK(e.kind() == PolishError::Kind::Transient);
    }
    CHECK(broken.request_count() == 2);
  }

  TEST_CASE("malformed bodies are transient") {
    StubChatServer junk([](const nlohmann::json&) { return StubReply{200, "", std::string("{\"nope\":1}")}; });
    LlmClient client(stub_config(junk.endpoint()));
    CHECK_THROWS_AS(client.complete({"x"}), PolishError);
  }

  TEST_CASE("rate limiter spaces requests") {
    StubChatServer stub(echo_reply);
    auto config = stub_config(stub.endpoint());
    config.requests_per_minute = 600;  // one per 100 ms
    config.max_in_flight = 4;
    LlmClient client(config);
    std::vector<std::jthread> threads;
    for (int t = 0; t < 4; ++t)
      threads.emplace_back([&, t] {
        for (int i = 0; i < 3; ++i) client.complete({std::to_string(t * 10 + i)});
      });
    threads.clear();
    auto reqs = stub.requests();
    REQUIRE(reqs.size() == 12);
    std::sort(reqs.begin(), reqs.end(), [](auto& a, auto& b) { return a.received < b.received; });
    const std::chrono::duration<double> span = reqs.back().received - reqs.front().received;
    // 11 gaps of at least 100 ms, minus scheduling jitter.
    CHECK(span.count() >= 1.1 - 0.05);
  }
}

TEST_SUITE("cache") {
  TEST_CASE("persists across instances") {
    const auto dir = make_temp_dir("coqforge-cache");
    {
      PolishCache cache(dir);
      cache.put("k", "v1");
      cache.put("k", "v2");
      cache.put("other", "多喝水");
    }
    PolishCache reopened(dir);
    CHECK(reopened.get("k") == "v2");
    CHECK(reopened.get("other") == "多喝水");
    CHECK(reopened.size() == 2);
    fs::remove_all(dir);
  }

  TEST_CASE("identical prompt twice makes one request") {
    StubChatServer stub(hash_reply);
    LlmClient client(stub_config(stub.endpoint()));
    PolishCache cache;
    Polisher polisher(client, cache, PromptTemplate::default_template());
    const auto a = polisher.polish_answer("prompt");
    const auto b = polisher.polish_answer("prompt");
    CHECK(a == b);
    CHECK(a == "POLISHED:" + sha256_hex("prompt"));
    CHECK(stub.request_count() == 1);
    CHECK(polisher.cache_hits() == 1);
  }

  TEST_CASE("concurrent identical prompts share one request") {
    StubChatServer stub([](const nlohmann::json& body) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      return hash_reply(body);
    });
    LlmClient client(stub_config(stub.endpoint()));
    PolishCache cache;
    Polisher polisher(client, cache, PromptTemplate::default_template());
    std::vector<std::string> results(8);
    {
      std::vector<std::jthread> threads;
      for (std::size_t t = 0; t < results.size(); ++t)
        threads.emplace_back([&, t] { results[t] = polisher.polish_answer("same"); });
    }
    CHECK(stub.request_count() == 1);
    for (const auto& r : results) CHECK(r == results[0]);
  }

  TEST_CASE("cache key covers the template name") {
    StubChatServer stub(echo_reply);
    LlmClient client(stub_config(stub.endpoint()));
    PolishCache cache;
    Polisher a(client, cache, PromptTemplate("a", "{history}{answer}"));
    Polisher b(client, cache, PromptTemplate("b", "{history}{answer}"));
    CHECK(a.cache_key("p") != b.cache_key("p"));
  }
}

TEST_SUITE("polish_corpus") {
  TEST_CASE("only suggestions are sent") {
    StubChatServer stub(hash_reply);
    LlmClient client(stub_config(stub.endpoint()));
    PolishCache cache;
    Polisher polisher(client, cache, PromptTemplate::default_template());
    const auto run = run_polish(polisher, {conv_of("c", {"咳嗽", "多久了？", "三天", "建议多喝水"})});
    REQUIRE(stub.request_count() == 1);
    const auto prompt = StubChatServer::prompt_of(stub.requests()[0].body);
    CHECK(prompt.find("建议多喝水") != std::string::npos);
    REQUIRE(run.out.size() == 1);
    CHECK(run.out[0].utterances[1].text == "多久了？");
    CHECK(run.out[0].utterances[3].text == "POLISHED:" + sha256_hex(prompt));
    CHECK(run.report.polished == 1);
    CHECK(run.report.questions_preserved == 1);
  }

  TEST_CASE("questions and structure are preserved on the demo corpus") {
    StubChatServer stub(hash_reply);
    LlmClient client(stub_config(stub.endpoint()));
    PolishCache cache;
    Polisher polisher(client, cache, PromptTemplate::default_template());
    const auto input = demo_corpus();
    const auto run = run_polish(polisher, input);
    REQUIRE(run.out.size() == input.size());
    const LexiconClassifier classifier;
    for (std::size_t c = 0; c < input.size(); ++c) {
      CHECK(run.out[c].id == input[c].id);
      REQUIRE(run.out[c].utterances.size() == input[c].utterances.size());
      for (std::size_t i = 0; i < input[c].utterances.size(); ++i) {
        const auto& before = input[c].utterances[i];
        const auto& after = run.out[c].utterances[i];
        CHECK(after.speaker == before.speaker);
        if (before.speaker == Speaker::Patient || classifier.classify(before.text) == AnswerKind::Question)
          CHECK(after.text == before.text);
      }
    }
    CHECK(run.report.polished == kDemoDoctorTurns - kDemoQuestions);
  }

  TEST_CASE("final-suggestion policy") {
    StubChatServer stub(hash_reply);
    LlmClient client(stub_config(stub.endpoint()));
    PolishCache cache;
    Polisher polisher(client, cache, PromptTemplate::default_template());
    PolishRunOptions options;
    options.policy = PolishPolicy::FinalSuggestionOnly;
    const auto run = run_polish(polisher, {conv_of("c", {"a", "多喝水", "b", "多休息"})}, options);
    CHECK(stub.request_count() == 1);
    CHECK(run.out[0].utterances[1].text == "多喝水");
    CHECK(run.report.suggestions_not_selected == 1);
  }

  TEST_CASE("empty completion keeps the original and flags the conversation") {
    StubChatServer stub([](const nlohmann::json&) { return StubReply{200, "  ", std::nullopt}; });
    LlmClient client(stub_config(stub.endpoint()));
    PolishCache cache;
    Polisher polisher(client, cache, PromptTemplate::default_template());
    const auto input = conv_of("c", {"咳嗽", "多喝水"});
    const auto run = run_polish(polisher, {input});
    CHECK(run.out[0].utterances == input.utterances);
    CHECK(run.out[0].meta.at(std::string(kPolishStatusKey)) == "unpolished");
    CHECK(run.report.failed == 1);
  }

  TEST_CASE("endpoint down for the whole run") {
    LlmClient client(stub_config(dead_endpoint()));
    PolishCache cache;
    Polisher polisher(client, cache, PromptTemplate::default_template());
    const auto input = demo_corpus();
    const auto run = run_polish(polisher, input);
    REQUIRE(run.out.size() == input.size());
    for (std::size_t c = 0; c < input.size(); ++c) CHECK(run.out[c].utterances == input[c].utterances);
    CHECK(run.report.failed == kDemoDoctorTurns - kDemoQuestions);
    CHECK(run.report.polished == 0);
  }

  TEST_CASE("abort at conversation 500 of 1000, then resume") {
    std::vector<Conversation> input;
    for (int i = 0; i < 1000; ++i)
      input.push_back(conv_of("c" + std::to_string(i), {"患者" + std::to_string(i), "建议休息"}));
    std::atomic<bool> deny{true};
    StubChatServer stub([&](const nlohmann::json& body) {
      if (deny && StubChatServer::prompt_of(body).find("患者500\n") != std::string::npos)
        return StubReply{401, "quota", std::nullopt};
      return hash_reply(body);
    });
    LlmClient client(stub_config(stub.endpoint()));
    PolishCache cache;
    Polisher polisher(client, cache, PromptTemplate("t", "{history}\n{answer}"));

    std::vector<Conversation> out;
    std::string checkpoint;
    {
      VectorReader reader(input);
      try {
        polish_corpus(reader, [&](const Conversation& c) { out.push_back(c); }, polisher, LexiconClassifier(), {});
        FAIL("expected PolishAborted");
      } catch (const PolishAborted& e) {
        checkpoint = e.checkpoint_id();
        CHECK(e.report().conversations == 500);
      }
    }
    CHECK(checkpoint == "c499");
    CHECK(out.size() == 500);

    deny = false;
    const std::size_t before = stub.request_count();
    PolishRunOptions options;
    options.resume_after = checkpoint;
    VectorReader reader(input);
    const auto report = polish_corpus(
        reader, [&](const Conversation& c) { out.push_back(c); }, polisher, LexiconClassifier(), options);
    CHECK(report.resumed_skipped == 500);
    CHECK(report.conversations == 500);
    CHECK(out.size() == 1000);
    for (int i = 0; i < 1000; ++i) CHECK(out[i].id == "c" + std::to_string(i));
    // Every remaining conversation needed one request (some may already have
    // been answered during the aborted batch and come from the cache).
    CHECK(report.network_requests + report.cache_hits == 500);
    CHECK(stub.request_count() - before == report.network_requests);
  }

  TEST_CASE("unknown resume id is a config error") {
    StubChatServer stub(hash_reply);
    LlmClient client(stub_config(stub.endpoint()));
    PolishCache cache;
    Polisher polisher(client, cache, PromptTemplate::default_template());
    PolishRunOptions options;
    options.resume_after = "nope";
    CHECK_THROWS_AS(run_polish(polisher, {conv_of("c", {"a", "b"})}, options), ConfigError);
  }
}

TEST_SUITE("generate") {
  TEST_CASE("echo stub returns the inputs in order with the sampling defaults") {
    StubChatServer stub(echo_reply);
    LlmClient client(stub_config(stub.endpoint()));
    std::istringstream in(
        "{\"id\":\"x\",\"input\":\"病人：头疼\\n医生：\"}\n{\"input\":\"病人：咳嗽\\n医生：\"}\n");
    std::ostringstream out;
    const auto report = generate_predictions(client, in, out, GenerationConfig{});
    CHECK(report.samples == 2);
    CHECK(report.failed == 0);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    auto j = nlohmann::json::parse(line);
    CHECK(j["id"] == "x");
    CHECK(j["prediction"] == "病人：头疼\n医生：");
    CHECK(j["failed"] == false);
    std::getline(lines, line);
    j = nlohmann::json::parse(line);
    CHECK(j["id"] == "1");
    for (const auto& r : stub.requests()) {
      CHECK(r.body["top_p"] == 0.75);
      CHECK(r.body["temperature"] == 0.95);
      CHECK(r.body["max_tokens"] == 512);
    }
  }

  TEST_CASE("unreachable endpoint flags every sample") {
    LlmClient client(stub_config(dead_endpoint()));
    std::istringstream in("{\"input\":\"a\"}\n{\"input\":\"b\"}\n");
    std::ostringstream out;
    const auto report = generate_predictions(client, in, out, GenerationConfig{});
    CHECK(report.samples == 2);
    CHECK(report.failed == 2);
  }

  TEST_CASE("generation config validation") {
    GenerationConfig g;
    g.top_p = 0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
  }
}

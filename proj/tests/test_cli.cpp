#include <filesystem>

#include "coqforge/corpus_io.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "process.hpp"
#include "stub_server.hpp"

using namespace coqforge;
using namespace coqforge::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  std::string path = make_temp_dir("coqforge-cli");
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

std::size_t line_count(const std::string& path) {
  const auto text = read_file(path);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(read_file(path)); }

const std::string kDemoConfig = (data_dir() / "demo" / "pipeline.json").string();

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run_cli({"--help"}).exit_code == 0);
  CHECK(run_cli({"clean", "--help"}).exit_code == 0);
  CHECK(run_cli({}).exit_code == 2);
  CHECK(run_cli({"bogus"}).exit_code == 2);
  CHECK(run_cli({"clean", "--in", "x"}).exit_code == 2);
}

TEST_SUITE("ingest") {
  TEST_CASE("meddg fixture") {
    TempDir dir;
    write_file(dir.file("raw.json"), R"([
      [{"id":"Patients","Sentence":"肚子疼"},{"id":"Doctor","Sentence":"多久了?"}],
      [{"id":"Patients","Sentence":"拉肚子"},{"id":"Doctor","Sentence":"建议补液"}],
      [{"id":"Patients","Sentence":"胃胀"},{"id":"Doctor","Sentence":"饭后吗"}]
    ])");
    const auto r = run_cli({"ingest", "--format", "meddg", "--in", dir.file("raw.json"), "--out", dir.file("c.jsonl")});
    CHECK(r.exit_code == 0);
    CHECK(r.out.empty());
    CHECK(line_count(dir.file("c.jsonl")) == 3);
    const auto summary = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
    CHECK(summary["kept"] == 3);
    CHECK(summary["skipped"] == 0);
  }

  TEST_CASE("unknown format names the valid formats") {
    TempDir dir;
    write_file(dir.file("raw.json"), "[]");
    const auto r = run_cli({"ingest", "--format", "nope", "--in", dir.file("raw.json"), "--out", dir.file("c.jsonl")});
    CHECK(r.exit_code == 2);
    for (const char* name : {"native", "meddialog_cn", "imcs_v2", "chip_mdcfnpc", "meddg"})
      CHECK(r.err.find(name) != std::string::npos);
  }

  TEST_CASE("empty input") {
    TempDir dir;
    write_file(dir.file("empty.jsonl"), "");
    const auto r = run_cli({"ingest", "--in", dir.file("empty.jsonl"), "--out", dir.file("c.jsonl")});
    CHECK(r.exit_code == 0);
    CHECK(line_count(dir.file("c.jsonl")) == 0);
    CHECK(r.err.find("warning") != std::string::npos);
  }

  TEST_CASE("missing input is an IO error") {
    TempDir dir;
    CHECK(run_cli({"ingest", "--in", dir.file("none.jsonl"), "--out", dir.file("c.jsonl")}).exit_code == 1);
  }
}

TEST_SUITE("stage commands") {
  TEST_CASE("clean report has per-rule hits; workers do not change output") {
    TempDir dir;
    write_corpus(noise_corpus(), dir.file("in.jsonl"));
    const auto a = run_cli({"clean", "--rules", "default", "--in", dir.file("in.jsonl"), "--out",
                            dir.file("a.jsonl"), "--report", dir.file("r.json"), "--workers", "1"});
    REQUIRE(a.exit_code == 0);
    const auto report = read_json(dir.file("r.json"));
    CHECK(report["rule_hits"].contains("link_http"));
    CHECK(report["rule_hits"]["link_http"].get<int>() > 0);
    const auto b = run_cli({"clean", "--in", dir.file("in.jsonl"), "--out", dir.file("b.jsonl"), "--workers", "3"});
    REQUIRE(b.exit_code == 0);
    CHECK(read_file(dir.file("a.jsonl")) == read_file(dir.file("b.jsonl")));
  }

  TEST_CASE("bad rule file is a usage error") {
    TempDir dir;
    write_file(dir.file("in.jsonl"), "");
    write_file(dir.file("rules.json"), "[{\"name\":\"x\",\"pattern\":\"(\",\"action\":\"strip_match\",\"category\":\"other\"}]");
    CHECK(run_cli({"clean", "--rules", dir.file("rules.json"), "--in", dir.file("in.jsonl"), "--out", dir.file("o")})
              .exit_code == 2);
  }

  TEST_CASE("serialize and stats; stdout carries only data") {
    TempDir dir;
    write_corpus(demo_corpus(), dir.file("in.jsonl"));
    const auto s = run_cli({"serialize", "--in", dir.file("in.jsonl"), "--out", dir.file("train.jsonl"),
                            "--eval-out", dir.file("refs.jsonl"), "--report", dir.file("sr.json")});
    REQUIRE(s.exit_code == 0);
    CHECK(s.out.empty());
    CHECK(line_count(dir.file("train.jsonl")) == kDemoDoctorTurns);
    CHECK(line_count(dir.file("refs.jsonl")) == kDemoDoctorTurns);
    CHECK(read_json(dir.file("sr.json"))["samples"] == kDemoDoctorTurns);

    const auto st = run_cli({"stats", "--in", dir.file("in.jsonl")});
    REQUIRE(st.exit_code == 0);
    const auto stats = nlohmann::json::parse(st.out);
    CHECK(stats["n_question_turns"] == kDemoQuestions);
    CHECK(stats["question_fraction"] == 0.462);
  }

  TEST_CASE("bad budget is a usage error") {
    TempDir dir;
    write_file(dir.file("in.jsonl"), "");
    CHECK(run_cli({"serialize", "--in", dir.file("in.jsonl"), "--out", dir.file("t"), "--max-input", "0"}).exit_code ==
          2);
  }

  TEST_CASE("eval prints the eight-column table") {
    TempDir dir;
    write_file(dir.file("ref.jsonl"), "{\"id\":\"1\",\"target\":\"多久了？\"}\n{\"id\":\"2\",\"target\":\"多喝水\"}\n");
    write_file(dir.file("pred.jsonl"),
               "{\"id\":\"1\",\"prediction\":\"几天了？\"}\n{\"id\":\"2\",\"prediction\":\"多喝水\"}\n");
    const auto r = run_cli({"eval", "--pred", dir.file("pred.jsonl"), "--ref", dir.file("ref.jsonl"), "--tokenizer",
                            "char", "--pqa-variant", "paper", "--report", dir.file("e.json")});
    REQUIRE(r.exit_code == 0);
    for (const char* col : {"BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "R-1", "R-2", "R-L", "PQA"})
      CHECK(r.out.find(col) != std::string::npos);
    CHECK(read_json(dir.file("e.json"))["samples"] == 2);
    CHECK(run_cli({"eval", "--pred", dir.file("pred.jsonl"), "--ref", dir.file("ref.jsonl"), "--pqa-variant", "x"})
              .exit_code == 2);
  }
}

TEST_SUITE("external service") {
  TEST_CASE("polish without an API key exits 2 before any request") {
    TempDir dir;
    StubChatServer stub(hash_reply);
    write_corpus(demo_corpus(), dir.file("in.jsonl"));
    const auto r = run_cli({"polish", "--in", dir.file("in.jsonl"), "--out", dir.file("p.jsonl"), "--endpoint",
                            stub.endpoint()},
                           {.unset_env = {"COQ_FORGE_API_KEY"}});
    CHECK(r.exit_code == 2);
    CHECK(stub.request_count() == 0);
  }

  TEST_CASE("fatal endpoint error exits 3 and leaves a resumable checkpoint") {
    TempDir dir;
    std::atomic<bool> deny{true};
    StubChatServer stub([&](const nlohmann::json& body) {
      if (deny) return StubReply{403, "quota exceeded", std::nullopt};
      return hash_reply(body);
    });
    write_corpus(demo_corpus(), dir.file("in.jsonl"));
    write_file(dir.file("client.json"),
               nlohmann::json{{"endpoint", stub.endpoint()}, {"requests_per_minute", 0}}.dump());
    const std::vector<std::string> args = {"polish", "--in", dir.file("in.jsonl"), "--out", dir.file("p.jsonl"),
                                           "--client", dir.file("client.json"), "--cache-dir", dir.file("cache")};
    const auto first = run_cli(args);
    CHECK(first.exit_code == 3);
    REQUIRE(fs::exists(dir.file("p.jsonl.checkpoint.json")));

    deny = false;
    auto resume = args;
    resume.push_back("--resume");
    const auto second = run_cli(resume);
    CHECK(second.exit_code == 0);
    CHECK(read_corpus(dir.file("p.jsonl"), CorpusFormat::Native).size() == kDemoConversations);
    CHECK_FALSE(fs::exists(dir.file("p.jsonl.checkpoint.json")));
  }

  TEST_CASE("generate against an unreachable endpoint exits 3") {
    TempDir dir;
    int port;
    {
      StubChatServer probe(echo_reply);
      port = probe.port();
    }
    write_file(dir.file("ctx.jsonl"), "{\"input\":\"病人：头疼\\n医生：\"}\n");
    const auto r = run_cli({"generate", "--in", dir.file("ctx.jsonl"), "--out", dir.file("pred.jsonl"),
                            "--endpoint", "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"});
    CHECK(r.exit_code == 3);
    const auto line = nlohmann::json::parse(read_file(dir.file("pred.jsonl")));
    CHECK(line["failed"] == true);
  }

  TEST_CASE("generate passes the sampling defaults") {
    TempDir dir;
    StubChatServer stub(echo_reply);
    write_file(dir.file("ctx.jsonl"), "{\"id\":\"a#1\",\"input\":\"病人：头疼\\n医生：\"}\n");
    const auto r = run_cli({"generate", "--in", dir.file("ctx.jsonl"), "--out", dir.file("pred.jsonl"), "--endpoint",
                            stub.endpoint()});
    REQUIRE(r.exit_code == 0);
    REQUIRE(stub.request_count() == 1);
    CHECK(stub.requests()[0].body["top_p"] == 0.75);
    CHECK(stub.requests()[0].body["temperature"] == 0.95);
  }
}

TEST_SUITE("pipeline") {
  const std::vector<std::string> kDataFiles = {"corpus.jsonl", "cleaned.jsonl", "train.jsonl", "eval_refs.jsonl",
                                               "stats.json", "clean_report.json", "serialize_report.json"};

  TEST_CASE("skip-polish equals a run against a no-op model") {
    TempDir dir;
    StubChatServer stub(marker_reply);
    write_file(dir.file("noop.txt"), "{history}\n<<<{answer}>>>");
    auto config = read_json(kDemoConfig);
    config["input"]["path"] = (data_dir() / "demo" / "demo_corpus.jsonl").string();
    config["template"] = dir.file("noop.txt");
    config["client"]["endpoint"] = stub.endpoint();
    write_file(dir.file("pipeline.json"), config.dump());

    const auto full = run_cli({"pipeline", "--config", dir.file("pipeline.json"), "--out-dir", dir.file("full")});
    REQUIRE(full.exit_code == 0);
    CHECK(stub.request_count() == kDemoDoctorTurns - kDemoQuestions);
    const auto skip = run_cli(
        {"pipeline", "--config", dir.file("pipeline.json"), "--out-dir", dir.file("skip"), "--skip-polish"});
    REQUIRE(skip.exit_code == 0);
    for (const auto& name : kDataFiles)
      CHECK_MESSAGE(read_file(dir.file("full/" + name)) == read_file(dir.file("skip/" + name)), name);
    CHECK(read_file(dir.file("full/polished.jsonl")) == read_file(dir.file("skip/polished.jsonl")));
  }

  TEST_CASE("rerun is byte-identical and the bundled config resolves relative paths") {
    TempDir dir;
    StubChatServer stub(hash_reply);
    const std::vector<std::string> args = {"pipeline", "--config", kDemoConfig, "--endpoint", stub.endpoint(),
                                           "--out-dir", dir.file("out")};
    const auto first = run_cli(args);
    REQUIRE(first.exit_code == 0);
    const auto stats = read_json(dir.file("out/stats.json"));
    CHECK(stats["question_fraction"] == 0.462);
    std::map<std::string, std::string> snapshot;
    for (const auto& name : kDataFiles) snapshot[name] = read_file(dir.file("out/" + name));
    snapshot["polished.jsonl"] = read_file(dir.file("out/polished.jsonl"));

    const std::size_t requests = stub.request_count();
    const auto second = run_cli(args);
    REQUIRE(second.exit_code == 0);
    CHECK(stub.request_count() == requests);  // everything came from the cache
    for (const auto& [name, content] : snapshot) CHECK_MESSAGE(read_file(dir.file("out/" + name)) == content, name);
  }

  TEST_CASE("failing stage propagates its exit code and keeps earlier outputs") {
    TempDir dir;
    StubChatServer stub([](const nlohmann::json&) { return StubReply{401, "denied", std::nullopt}; });
    const auto r = run_cli({"pipeline", "--config", kDemoConfig, "--endpoint", stub.endpoint(), "--out-dir",
                            dir.file("out")});
    CHECK(r.exit_code == 3);
    CHECK(fs::exists(dir.file("out/cleaned.jsonl")));
    CHECK(fs::exists(dir.file("out/clean_report.json")));
    CHECK_FALSE(fs::exists(dir.file("out/train.jsonl")));
  }

  TEST_CASE("missing config is a usage error") {
    CHECK(run_cli({"pipeline", "--config", "/nonexistent/p.json"}).exit_code == 2);
  }
}

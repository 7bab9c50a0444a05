#include "coqforge/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "coqforge/classifier.hpp"
#include "coqforge/cleaner.hpp"
#include "coqforge/corpus_io.hpp"
#include "coqforge/error.hpp"
#include "coqforge/evaluate.hpp"
#include "coqforge/llm_client.hpp"
#include "coqforge/parallel.hpp"
#include "coqforge/polisher.hpp"
#include "coqforge/serializer.hpp"
#include "coqforge/stages.hpp"
#include "coqforge/stats.hpp"
#include "json.hpp"

namespace coqforge::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Raised by the external-service stages; maps to exit code 3.
class ExternalServiceError : public Error {
 public:
  using Error::Error;
};

std::string dump(const Json& j) {
  return j.dump(2, ' ', false, Json::error_handler_t::replace);
}

void write_json_file(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << dump(j) << '\n';
  if (!out) throw IoError("write to " + path.string() + " failed");
}

void require_parent_dir(const fs::path& path) {
  const auto parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw IoError("output directory " + parent.string() + " does not exist");
}

std::size_t resolve_workers(std::size_t requested) {
  return requested == 0 ? default_workers() : requested;
}

void report_diagnostics(const ReadStats& stats, std::ostream& err) {
  constexpr std::size_t kShown = 20;
  for (std::size_t i = 0; i < stats.diagnostics.size() && i < kShown; ++i)
    err << "warning: skipped " << stats.diagnostics[i] << '\n';
  if (stats.skipped > kShown) err << "warning: ... " << stats.skipped - kShown << " more skipped\n";
}

// ---------------------------------------------------------------- stages

struct IngestArgs {
  std::string format = "native";
  fs::path in;
  fs::path out;
};

Json do_ingest(const IngestArgs& a, std::ostream& err) {
  const CorpusFormat format = parse_format(a.format);
  require_parent_dir(a.out);
  auto reader = open_corpus(a.in, format);
  CorpusWriter writer(a.out);
  while (auto conv = reader->next()) writer.write(*conv);
  writer.close();
  const auto& stats = reader->stats();
  report_diagnostics(stats, err);
  if (stats.records == 0) err << "warning: " << a.in.string() << " contains no records\n";
  return Json{{"format", a.format},
              {"records", stats.records},
              {"kept", stats.kept},
              {"skipped", stats.skipped},
              {"written", writer.count()}};
}

struct CleanArgs {
  std::string rules = "default";
  fs::path in;
  fs::path out;
  double threshold = 1.0;
  std::size_t workers = 0;
};

Json do_clean(const CleanArgs& a, std::ostream& err) {
  const RuleSet rules = resolve_rules(a.rules);
  const QualityScorer scorer(rules, a.threshold);
  require_parent_dir(a.out);
  auto reader = open_corpus(a.in, CorpusFormat::Native);
  CorpusWriter writer(a.out);
  const auto report = run_clean_stage(
      *reader, [&](const Conversation& c) { writer.write(c); }, rules, scorer,
      {resolve_workers(a.workers), 1024});
  writer.close();
  report_diagnostics(reader->stats(), err);
  Json j = report.to_json();
  j["input_skipped_invalid"] = reader->stats().skipped;
  return j;
}

struct PolishArgs {
  fs::path in;
  fs::path out;
  std::optional<fs::path> client_config;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<fs::path> template_path;
  std::optional<fs::path> cache_dir;
  std::string policy = "all_suggestions";
  std::string classifier = "lexicon";
  std::optional<fs::path> checkpoint;
  bool resume = false;
};

LlmClientConfig client_config_from(const std::optional<fs::path>& path, const Json* inline_json,
                                   const std::optional<std::string>& endpoint,
                                   const std::optional<std::string>& model) {
  LlmClientConfig config;
  if (path) config = LlmClientConfig::load(*path);
  else if (inline_json) config = LlmClientConfig::from_json(nlohmann::json::parse(inline_json->dump()));
  if (endpoint) config.endpoint = *endpoint;
  if (model) config.model = *model;
  config.validate();
  return config;
}

Json do_polish(const PolishArgs& a, const LlmClientConfig& config, std::ostream& err) {
  const PolishPolicy policy = parse_polish_policy(a.policy);
  const auto classifier = make_classifier(a.classifier);
  const PromptTemplate tmpl =
      a.template_path ? PromptTemplate::load(*a.template_path) : PromptTemplate::default_template();
  // Fails with a config error before any request when the key is missing.
  LlmClient client(config);
  require_parent_dir(a.out);
  const fs::path checkpoint = a.checkpoint.value_or(fs::path(a.out.string() + ".checkpoint.json"));

  PolishRunOptions options;
  options.policy = policy;
  bool append = false;
  if (a.resume) {
    std::ifstream in(checkpoint);
    if (!in) throw ConfigError("--resume given but checkpoint " + checkpoint.string() + " is missing");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("last_completed_id") || !j["last_completed_id"].is_string())
      throw ConfigError("checkpoint " + checkpoint.string() + " is malformed");
    const auto id = j["last_completed_id"].get<std::string>();
    if (!id.empty()) {
      options.resume_after = id;
      append = true;
    }
  }

  PolishCache cache = a.cache_dir ? PolishCache(*a.cache_dir) : PolishCache();
  Polisher polisher(client, cache, tmpl);
  auto reader = open_corpus(a.in, CorpusFormat::Native);
  CorpusWriter writer(a.out, append);
  try {
    const auto report = polish_corpus(
        *reader, [&](const Conversation& c) { writer.write(c); }, polisher, *classifier, options);
    writer.close();
    std::error_code ec;
    fs::remove(checkpoint, ec);
    Json j = report.to_json();
    j["policy"] = to_string(policy);
    j["template"] = tmpl.name();
    return j;
  } catch (const PolishAborted& e) {
    writer.close();
    write_json_file(checkpoint, Json{{"last_completed_id", e.checkpoint_id()},
                                     {"output", a.out.string()},
                                     {"report", e.report().to_json()}});
    err << "error: polishing aborted: " << e.what() << "\n"
        << "checkpoint written to " << checkpoint.string()
        << " (rerun with --resume to continue after '" << e.checkpoint_id() << "')\n";
    throw ExternalServiceError(e.what());
  }
}

struct SerializeArgs {
  fs::path in;
  fs::path out;
  std::optional<fs::path> eval_out;
  std::size_t max_input = 1536;
  std::size_t max_target = 512;
  std::string expansion = "all_doctor_turns";
  std::size_t workers = 0;
};

Json do_serialize(const SerializeArgs& a) {
  LengthBudget budget;
  budget.max_input_units = a.max_input;
  budget.max_target_units = a.max_target;
  budget.validate();
  const ExpansionPolicy policy = parse_expansion_policy(a.expansion);
  require_parent_dir(a.out);
  auto reader = open_corpus(a.in, CorpusFormat::Native);
  TrainingWriter writer(a.out);
  std::optional<std::ofstream> eval_out;
  if (a.eval_out) {
    require_parent_dir(*a.eval_out);
    eval_out.emplace(*a.eval_out, std::ios::binary | std::ios::trunc);
    if (!*eval_out) throw IoError("cannot create " + a.eval_out->string());
  }
  const auto report = run_serialize_stage(
      *reader,
      [&](const TrainingSample& s) {
        writer.write(s);
        if (eval_out) *eval_out << eval_jsonl(s) << '\n';
      },
      budget, policy, {resolve_workers(a.workers), 1024});
  writer.close();
  if (eval_out && !eval_out->flush()) throw IoError("write to " + a.eval_out->string() + " failed");
  Json j = report.to_json();
  j["max_input_units"] = a.max_input;
  j["max_target_units"] = a.max_target;
  j["unit"] = "code points";
  j["expansion"] = a.expansion;
  return j;
}

Json do_stats(const fs::path& in, const std::string& classifier_name, std::size_t workers) {
  const auto classifier = make_classifier(classifier_name);
  auto reader = open_corpus(in, CorpusFormat::Native);
  const auto stats = run_stats_stage(*reader, *classifier, {resolve_workers(workers), 1024});
  Json j = stats.to_json();
  j["classifier"] = classifier->name();
  return j;
}

// ---------------------------------------------------------------- pipeline

struct PipelineArgs {
  fs::path config;
  bool skip_polish = false;
  std::optional<std::string> endpoint;
  std::optional<fs::path> out_dir;
  std::size_t workers = 0;
};

fs::path resolve_relative(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <typename T>
T config_value(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("pipeline config '") + key + "': " + e.what());
  }
}

void copy_file_contents(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  if (ec) throw IoError("cannot copy " + from.string() + " to " + to.string() + ": " + ec.message());
}

Json do_pipeline(const PipelineArgs& a, std::ostream& err) {
  std::ifstream in(a.config);
  if (!in) throw ConfigError("cannot read pipeline config " + a.config.string());
  const nlohmann::json cfg = nlohmann::json::parse(in, nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object())
    throw ConfigError("pipeline config " + a.config.string() + " is not a JSON object");
  const fs::path base = a.config.parent_path();

  const auto input = cfg.value("input", nlohmann::json::object());
  if (!input.contains("path") || !input["path"].is_string())
    throw ConfigError("pipeline config needs input.path");
  const fs::path input_path = resolve_relative(base, input["path"].get<std::string>());
  const std::string format = config_value<std::string>(input, "format", "native");
  const fs::path out_dir =
      a.out_dir.value_or(resolve_relative(base, config_value<std::string>(cfg, "output_dir", "out")));
  std::string rules = config_value<std::string>(cfg, "rules", "default");
  if (rules != "default") rules = resolve_relative(base, rules).string();
  const std::string classifier = config_value<std::string>(cfg, "classifier", "lexicon");
  const bool skip_polish = a.skip_polish || config_value<bool>(cfg, "skip_polish", false);
  const std::size_t workers = a.workers > 0 ? a.workers : config_value<std::size_t>(cfg, "workers", 0);
  // Nothing in the pipeline samples; the seed is recorded for provenance.
  const auto seed = config_value<long long>(cfg, "seed", 0);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir.string());

  auto timed = [&](const char* stage, auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto result = fn();
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    err << "[pipeline] " << stage << " done in " << elapsed.count() << " s\n";
    return result;
  };

  Json summary{{"seed", seed}};

  summary["ingest"] = timed("ingest", [&] {
    auto j = do_ingest({format, input_path, out_dir / "corpus.jsonl"}, err);
    write_json_file(out_dir / "ingest_report.json", j);
    return j;
  });

  summary["clean"] = timed("clean", [&] {
    CleanArgs c;
    c.rules = rules;
    c.in = out_dir / "corpus.jsonl";
    c.out = out_dir / "cleaned.jsonl";
    c.threshold = config_value<double>(cfg, "excellent_threshold", 1.0);
    c.workers = workers;
    auto j = do_clean(c, err);
    write_json_file(out_dir / "clean_report.json", j);
    return j;
  });

  summary["polish"] = timed("polish", [&] {
    Json j;
    if (skip_polish) {
      copy_file_contents(out_dir / "cleaned.jsonl", out_dir / "polished.jsonl");
      j = Json{{"skipped", true}};
    } else {
      PolishArgs p;
      p.in = out_dir / "cleaned.jsonl";
      p.out = out_dir / "polished.jsonl";
      p.policy = config_value<std::string>(cfg, "polish_policy", "all_suggestions");
      p.classifier = classifier;
      if (auto t = cfg.find("template"); t != cfg.end() && t->is_string())
        p.template_path = resolve_relative(base, t->get<std::string>());
      p.cache_dir = out_dir / "cache";
      if (auto c = cfg.find("cache_dir"); c != cfg.end() && c->is_string())
        p.cache_dir = resolve_relative(base, c->get<std::string>());
      std::optional<fs::path> client_path;
      Json inline_client;
      const Json* inline_ptr = nullptr;
      if (auto c = cfg.find("client"); c != cfg.end()) {
        if (c->is_string()) {
          client_path = resolve_relative(base, c->get<std::string>());
        } else if (c->is_object()) {
          inline_client = Json::parse(c->dump());
          inline_ptr = &inline_client;
        }
      }
      const auto config = client_config_from(client_path, inline_ptr, a.endpoint, std::nullopt);
      j = do_polish(p, config, err);
    }
    write_json_file(out_dir / "polish_report.json", j);
    return j;
  });

  summary["serialize"] = timed("serialize", [&] {
    SerializeArgs s;
    s.in = out_dir / "polished.jsonl";
    s.out = out_dir / "train.jsonl";
    s.eval_out = out_dir / "eval_refs.jsonl";
    const auto budget = cfg.value("budget", nlohmann::json::object());
    s.max_input = config_value<std::size_t>(budget, "max_input_units", 1536);
    s.max_target = config_value<std::size_t>(budget, "max_target_units", 512);
    s.expansion = config_value<std::string>(cfg, "expansion", "all_doctor_turns");
    s.workers = workers;
    auto j = do_serialize(s);
    write_json_file(out_dir / "serialize_report.json", j);
    return j;
  });

  summary["stats"] = timed("stats", [&] {
    auto j = do_stats(out_dir / "polished.jsonl", classifier, workers);
    write_json_file(out_dir / "stats.json", j);
    return j;
  });

  write_json_file(out_dir / "pipeline_report.json", summary);
  return summary;
}

// ---------------------------------------------------------------- errors

int exit_code_for(const std::exception_ptr& error, std::ostream& err) {
  try {
    std::rethrow_exception(error);
  } catch (const ExternalServiceError& e) {
    err << "error: " << e.what() << '\n';
    return kExternalServiceError;
  } catch (const PolishAborted& e) {
    err << "error: " << e.what() << '\n';
    return kExternalServiceError;
  } catch (const PolishError& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == PolishError::Kind::Fatal ? kExternalServiceError : kRuntimeError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"coq-forge: multi-turn consultation corpus construction and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "coq-forge 0.1.0");

  std::optional<fs::path> report_path;
  auto add_report = [&](CLI::App* cmd) {
    cmd->add_option("--report", report_path, "Write the stage report JSON here");
  };

  // ingest
  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert a dataset into native JSONL");
  ingest_cmd->add_option("--format", ingest.format,
                         "native, meddialog_cn, imcs_v2, chip_mdcfnpc or meddg")
      ->capture_default_str();
  ingest_cmd->add_option("--in", ingest.in, "Input file")->required();
  ingest_cmd->add_option("--out", ingest.out, "Output native JSONL")->required();
  add_report(ingest_cmd);

  // clean
  CleanArgs clean;
  auto* clean_cmd = app.add_subcommand("clean", "Apply the regex cleaning rules");
  clean_cmd->add_option("--rules", clean.rules, "'default' or a rule file path")->capture_default_str();
  clean_cmd->add_option("--in", clean.in)->required();
  clean_cmd->add_option("--out", clean.out)->required();
  clean_cmd->add_option("--excellent-threshold", clean.threshold)->capture_default_str();
  clean_cmd->add_option("--workers", clean.workers, "0 = all cores")->capture_default_str();
  add_report(clean_cmd);

  // polish
  PolishArgs polish;
  auto* polish_cmd = app.add_subcommand("polish", "Rewrite doctor suggestions with a chat model");
  polish_cmd->add_option("--in", polish.in)->required();
  polish_cmd->add_option("--out", polish.out)->required();
  polish_cmd->add_option("--client", polish.client_config, "Client config JSON");
  polish_cmd->add_option("--endpoint", polish.endpoint, "Override the endpoint URL");
  polish_cmd->add_option("--model", polish.model, "Override the model name");
  polish_cmd->add_option("--template", polish.template_path, "Prompt template file");
  polish_cmd->add_option("--cache-dir", polish.cache_dir, "Persistent response cache");
  polish_cmd->add_option("--policy", polish.policy, "all_suggestions or final_suggestion_only")
      ->capture_default_str();
  polish_cmd->add_option("--classifier", polish.classifier)->capture_default_str();
  polish_cmd->add_option("--checkpoint", polish.checkpoint, "Checkpoint file (default <out>.checkpoint.json)");
  polish_cmd->add_flag("--resume", polish.resume, "Continue after the checkpointed conversation");
  add_report(polish_cmd);

  // serialize
  SerializeArgs serialize;
  auto* serialize_cmd = app.add_subcommand("serialize", "Emit (input, target) training JSONL");
  serialize_cmd->add_option("--in", serialize.in)->required();
  serialize_cmd->add_option("--out", serialize.out)->required();
  serialize_cmd->add_option("--eval-out", serialize.eval_out,
                            "Also write {id, input, target} lines for evaluation");
  serialize_cmd->add_option("--max-input", serialize.max_input)->capture_default_str();
  serialize_cmd->add_option("--max-target", serialize.max_target)->capture_default_str();
  serialize_cmd->add_option("--expansion", serialize.expansion, "all_doctor_turns or final_turn_only")
      ->capture_default_str();
  serialize_cmd->add_option("--workers", serialize.workers, "0 = all cores")->capture_default_str();
  add_report(serialize_cmd);

  // stats
  fs::path stats_in;
  std::optional<fs::path> stats_out;
  std::string stats_classifier = "lexicon";
  std::size_t stats_workers = 0;
  auto* stats_cmd = app.add_subcommand("stats", "Question/suggestion corpus statistics");
  stats_cmd->add_option("--in", stats_in)->required();
  stats_cmd->add_option("--out", stats_out, "Stats JSON (default: standard output)");
  stats_cmd->add_option("--classifier", stats_classifier)->capture_default_str();
  stats_cmd->add_option("--workers", stats_workers, "0 = all cores")->capture_default_str();

  // eval
  fs::path pred_path;
  fs::path ref_path;
  std::string tokenizer_spec = "char";
  std::string eval_classifier = "lexicon";
  std::string pqa_variant = "paper";
  std::string bleu_mode = "cumulative";
  std::string smoothing = "none";
  std::optional<fs::path> table_out;
  EvalOptions eval_options;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against references");
  eval_cmd->add_option("--pred", pred_path)->required();
  eval_cmd->add_option("--ref", ref_path)->required();
  eval_cmd->add_option("--tokenizer", tokenizer_spec, "char, whitespace or dict:<lexicon>")
      ->capture_default_str();
  eval_cmd->add_option("--classifier", eval_classifier)->capture_default_str();
  eval_cmd->add_option("--pqa-variant", pqa_variant, "paper or conventional")->capture_default_str();
  eval_cmd->add_option("--bleu-mode", bleu_mode, "cumulative or per-order")->capture_default_str();
  eval_cmd->add_option("--smoothing", smoothing, "none or add-one")->capture_default_str();
  eval_cmd->add_option("--dataset", eval_options.dataset)->capture_default_str();
  eval_cmd->add_option("--model", eval_options.model)->capture_default_str();
  eval_cmd->add_option("--table-out", table_out, "Write the text table here instead of stdout");
  add_report(eval_cmd);

  // generate
  fs::path gen_in;
  fs::path gen_out;
  std::optional<fs::path> gen_client;
  std::optional<std::string> gen_endpoint;
  std::optional<std::string> gen_model;
  GenerationConfig gen;
  auto* gen_cmd = app.add_subcommand("generate", "Query a model for predictions on serialized inputs");
  gen_cmd->add_option("--in", gen_in, "JSONL with 'input' (and optional 'id')")->required();
  gen_cmd->add_option("--out", gen_out, "Prediction JSONL")->required();
  gen_cmd->add_option("--client", gen_client, "Client config JSON");
  gen_cmd->add_option("--endpoint", gen_endpoint);
  gen_cmd->add_option("--model", gen_model);
  gen_cmd->add_option("--top-p", gen.top_p)->capture_default_str();
  gen_cmd->add_option("--temperature", gen.temperature)->capture_default_str();
  gen_cmd->add_option("--max-new", gen.max_new_units)->capture_default_str();
  add_report(gen_cmd);

  // pipeline
  PipelineArgs pipeline;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "ingest -> clean -> polish -> serialize -> stats");
  pipeline_cmd->add_option("--config", pipeline.config, "Pipeline config JSON")->required();
  pipeline_cmd->add_flag("--skip-polish", pipeline.skip_polish);
  pipeline_cmd->add_option("--endpoint", pipeline.endpoint, "Override the polishing endpoint");
  pipeline_cmd->add_option("--out-dir", pipeline.out_dir, "Override output_dir");
  pipeline_cmd->add_option("--workers", pipeline.workers, "0 = config or all cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    Json report;
    if (*ingest_cmd) {
      report = do_ingest(ingest, err);
      err << report.dump() << '\n';
    } else if (*clean_cmd) {
      report = do_clean(clean, err);
      err << "cleaned: kept " << report["conversations_kept"] << ", dropped "
          << report["conversations_dropped"] << ", rule hits " << report["total_hits"] << '\n';
    } else if (*polish_cmd) {
      const auto config =
          client_config_from(polish.client_config, nullptr, polish.endpoint, polish.model);
      report = do_polish(polish, config, err);
      err << "polished " << report["polished"] << " turns, failed " << report["failed"] << '\n';
    } else if (*serialize_cmd) {
      report = do_serialize(serialize);
      err << "samples " << report["samples"] << ", skipped " << report["skipped_over_budget"] << '\n';
    } else if (*stats_cmd) {
      const auto j = do_stats(stats_in, stats_classifier, stats_workers);
      if (stats_out) {
        write_json_file(*stats_out, j);
      } else {
        out << dump(j) << '\n';
      }
    } else if (*eval_cmd) {
      const auto tokenizer = Tokenizer::from_spec(tokenizer_spec);
      const auto classifier = make_classifier(eval_classifier);
      eval_options.pqa_variant = parse_pqa_variant(pqa_variant);
      if (bleu_mode == "cumulative")
        eval_options.bleu.cumulative = true;
      else if (bleu_mode == "per-order")
        eval_options.bleu.cumulative = false;
      else
        throw ConfigError("unknown --bleu-mode '" + bleu_mode + "' (valid: cumulative, per-order)");
      if (smoothing == "none")
        eval_options.bleu.smoothing = BleuSmoothing::None;
      else if (smoothing == "add-one")
        eval_options.bleu.smoothing = BleuSmoothing::AddOne;
      else
        throw ConfigError("unknown --smoothing '" + smoothing + "' (valid: none, add-one)");
      const auto result = evaluate(pred_path, ref_path, tokenizer, *classifier, eval_options);
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      report = result.to_json();
      if (table_out) {
        std::ofstream t(*table_out);
        if (!t) throw IoError("cannot create " + table_out->string());
        t << result.to_table();
      } else {
        out << result.to_table();
      }
    } else if (*gen_cmd) {
      gen.validate();
      const auto config = client_config_from(gen_client, nullptr, gen_endpoint, gen_model);
      LlmClient client(config);
      std::ifstream in(gen_in);
      if (!in) throw IoError("cannot read " + gen_in.string());
      require_parent_dir(gen_out);
      std::ofstream pred(gen_out, std::ios::binary | std::ios::trunc);
      if (!pred) throw IoError("cannot create " + gen_out.string());
      GenerationReport result;
      try {
        result = generate_predictions(client, in, pred, gen);
      } catch (const PolishError& e) {
        throw ExternalServiceError(e.what());
      }
      report = result.to_json();
      err << "predictions " << result.samples << ", failed " << result.failed << '\n';
      if (result.samples > 0 && result.failed == result.samples) {
        if (report_path) write_json_file(*report_path, report);
        err << "error: every prediction failed; is the endpoint reachable?\n";
        return kExternalServiceError;
      }
    } else if (*pipeline_cmd) {
      report = do_pipeline(pipeline, err);
    }
    if (report_path && !report.is_null()) write_json_file(*report_path, report);
    return kOk;
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
}

}  // namespace coqforge::cli

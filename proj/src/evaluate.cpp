#include "coqforge/evaluate.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "coqforge/parallel.hpp"
#include "coqforge/utf8.hpp"

namespace coqforge {
namespace {

struct Accumulator {
  BleuStats bleu;
  double rouge_1 = 0.0;
  double rouge_2 = 0.0;
  double rouge_l = 0.0;
  std::size_t rouge_2_degenerate = 0;
  PqaConfusion confusion;
  std::size_t samples = 0;

  void add(const std::string& prediction, const std::string& target, const Tokenizer& tokenizer,
           const AnswerClassifier& classifier) {
    const Tokens hyp = tokenizer.tokenize(prediction);
    const Tokens ref = tokenizer.tokenize(target);
    bleu.merge(bleu_stats(hyp, ref));
    rouge_1 += rouge_n(hyp, ref, 1).f1;
    const auto r2 = rouge_n(hyp, ref, 2);
    rouge_2 += r2.f1;
    if (r2.degenerate) ++rouge_2_degenerate;
    rouge_l += coqforge::rouge_l(hyp, ref).f1;
    // Blank predictions (failed generations) count as suggestions.
    const AnswerKind predicted =
        utf8::is_blank(prediction) ? AnswerKind::Suggestion : classifier.classify(prediction);
    const AnswerKind expected =
        utf8::is_blank(target) ? AnswerKind::Suggestion : classifier.classify(target);
    confusion.add(expected, predicted);
    ++samples;
  }
};

EvalReport finish(const Accumulator& acc, const Tokenizer& tokenizer,
                  const AnswerClassifier& classifier, const EvalOptions& options) {
  EvalReport report;
  report.dataset = options.dataset;
  report.model = options.model;
  report.tokenizer = tokenizer.name();
  report.classifier = classifier.name();
  report.pqa_variant = options.pqa_variant;
  report.bleu_options = options.bleu;
  report.samples = acc.samples;
  const auto bleu = bleu_from_stats(acc.bleu, options.bleu);
  report.bleu = bleu.bleu;
  report.bleu_degenerate = bleu.degenerate;
  const double n = static_cast<double>(acc.samples);
  report.rouge_1 = acc.rouge_1 / n;
  report.rouge_2 = acc.rouge_2 / n;
  report.rouge_l = acc.rouge_l / n;
  report.rouge_2_degenerate = acc.rouge_2_degenerate;
  report.confusion = acc.confusion;
  report.pqa = pqa(acc.confusion, options.pqa_variant);
  if (report.pqa.degenerate)
    report.warnings.push_back("PQA denominator is zero (no question targets/predictions?); reported as 0");
  return report;
}

nlohmann::json parse_line(const std::string& line, const std::filesystem::path& path,
                          std::size_t line_no) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
  return j;
}

std::string id_of(const nlohmann::json& j, const std::filesystem::path& path, std::size_t line_no) {
  auto it = j.find("id");
  if (it != j.end() && it->is_string()) return it->get<std::string>();
  if (it != j.end() && it->is_number_integer()) return std::to_string(it->get<long long>());
  throw Error(path.string() + ":" + std::to_string(line_no) + ": missing 'id'");
}

std::string string_of(const nlohmann::json& j, const char* key, const std::filesystem::path& path,
                      std::size_t line_no) {
  auto it = j.find(key);
  if (it != j.end() && it->is_string()) return it->get<std::string>();
  throw Error(path.string() + ":" + std::to_string(line_no) + ": missing string '" + key + "'");
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json warnings_json = nlohmann::ordered_json::array();
  for (const auto& w : warnings) warnings_json.push_back(w);
  return {
      {"dataset", dataset},
      {"model", model},
      {"scale", "fraction in [0,1]"},
      {"conventions",
       {{"bleu", std::string(bleu_options.cumulative ? "cumulative" : "per-order") +
                     ", corpus-level (clipped counts and lengths summed over pairs)" +
                     (bleu_options.smoothing == BleuSmoothing::AddOne ? ", add-one smoothing"
                                                                       : ", no smoothing")},
        {"rouge", "mean of per-sample F1"},
        {"pqa_variant", to_string(pqa_variant)}}},
      {"tokenizer", tokenizer},
      {"classifier", classifier},
      {"samples", samples},
      {"bleu_1", bleu[0]},
      {"bleu_2", bleu[1]},
      {"bleu_3", bleu[2]},
      {"bleu_4", bleu[3]},
      {"rouge_1", rouge_1},
      {"rouge_2", rouge_2},
      {"rouge_l", rouge_l},
      {"pqa", pqa.score},
      {"pqa_precision", pqa.precision},
      {"pqa_recall", pqa.recall},
      {"pqa_degenerate", pqa.degenerate},
      {"confusion",
       {{"q_tp", confusion.q_tp},
        {"q_t_notp", confusion.q_t_notp},
        {"q_nott_p", confusion.q_nott_p},
        {"q_nott_notp", confusion.q_nott_notp}}},
      {"bleu_degenerate", bleu_degenerate},
      {"rouge_2_degenerate_samples", rouge_2_degenerate},
      {"missing_predictions", missing_predictions},
      {"unknown_predictions", unknown_predictions},
      {"failed_predictions", failed_predictions},
      {"warnings", std::move(warnings_json)},
  };
}

std::string EvalReport::to_table() const {
  const std::vector<std::string> header{"Dataset", "Model", "BLEU-1", "BLEU-2", "BLEU-3",
                                        "BLEU-4",  "R-1",   "R-2",    "R-L",    "PQA"};
  const std::vector<std::string> row{dataset,
                                     model,
                                     fixed(bleu[0] * 100, 2),
                                     fixed(bleu[1] * 100, 2),
                                     fixed(bleu[2] * 100, 2),
                                     fixed(bleu[3] * 100, 2),
                                     fixed(rouge_1 * 100, 2),
                                     fixed(rouge_2 * 100, 2),
                                     fixed(rouge_l * 100, 2),
                                     fixed(pqa.score, 2)};
  std::ostringstream os;
  os << "# BLEU/ROUGE x100, PQA in [0,1] (" << to_string(pqa_variant) << "), " << samples
     << " samples, tokenizer " << tokenizer << "\n";
  for (const auto* cells : {&header, &row}) {
    for (std::size_t i = 0; i < cells->size(); ++i) {
      const auto& cell = (*cells)[i];
      const std::size_t width =
          std::max(utf8::length(header[i]), utf8::length(row[i])) + (i + 1 < cells->size() ? 2 : 0);
      os << cell;
      if (i + 1 < cells->size()) os << std::string(width - utf8::length(cell), ' ');
    }
    os << "\n";
  }
  return os.str();
}

EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, const Tokenizer& tokenizer,
                          const AnswerClassifier& classifier, const EvalOptions& options) {
  if (pairs.empty()) throw Error("evaluation needs at least one prediction/reference pair");
  Accumulator acc;
  for (const auto& p : pairs) acc.add(p.prediction, p.target, tokenizer, classifier);
  return finish(acc, tokenizer, classifier, options);
}

EvalReport evaluate(const std::filesystem::path& predictions,
                    const std::filesystem::path& references, const Tokenizer& tokenizer,
                    const AnswerClassifier& classifier, const EvalOptions& options) {
  std::ifstream ref_in(references);
  if (!ref_in) throw IoError("cannot read references " + references.string());
  std::unordered_map<std::string, std::string> targets;
  std::vector<std::string> ref_order;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ref_in, line)) {
    ++line_no;
    if (utf8::is_blank(line)) continue;
    const auto j = parse_line(line, references, line_no);
    auto id = id_of(j, references, line_no);
    if (targets.emplace(id, string_of(j, "target", references, line_no)).second)
      ref_order.push_back(std::move(id));
  }

  std::ifstream pred_in(predictions);
  if (!pred_in) throw IoError("cannot read predictions " + predictions.string());
  Accumulator acc;
  std::unordered_set<std::string> matched;
  std::size_t unknown = 0;
  std::size_t failed = 0;
  line_no = 0;
  while (std::getline(pred_in, line)) {
    ++line_no;
    if (utf8::is_blank(line)) continue;
    const auto j = parse_line(line, predictions, line_no);
    const auto id = id_of(j, predictions, line_no);
    auto it = targets.find(id);
    if (it == targets.end()) {
      ++unknown;
      continue;
    }
    if (!matched.insert(id).second) continue;  // duplicate prediction: first wins
    if (auto f = j.find("failed"); f != j.end() && f->is_boolean() && f->get<bool>()) ++failed;
    acc.add(string_of(j, "prediction", predictions, line_no), it->second, tokenizer, classifier);
  }
  if (acc.samples == 0)
    throw Error("no prediction id matches a reference id (" + predictions.string() + " vs " +
                references.string() + ")");

  EvalReport report = finish(acc, tokenizer, classifier, options);
  report.missing_predictions = targets.size() - matched.size();
  report.unknown_predictions = unknown;
  report.failed_predictions = failed;
  if (report.missing_predictions > 0)
    report.warnings.push_back(std::to_string(report.missing_predictions) +
                              " reference ids have no prediction and were excluded");
  if (unknown > 0)
    report.warnings.push_back(std::to_string(unknown) + " prediction ids are not in the references");
  if (failed > 0)
    report.warnings.push_back(std::to_string(failed) + " predictions are flagged failed");
  return report;
}

void GenerationConfig::validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (max_new_units == 0) throw ConfigError("max_new_units must be > 0");
}

nlohmann::ordered_json GenerationReport::to_json() const {
  return {{"samples", samples}, {"failed", failed}};
}

GenerationReport generate_predictions(LlmClient& client, std::istream& contexts,
                                      std::ostream& predictions, const GenerationConfig& gen,
                                      std::size_t batch_size) {
  gen.validate();
  struct Item {
    std::string id;
    std::string input;
    std::string prediction;
    bool failed = false;
  };
  GenerationReport report;
  std::string line;
  std::size_t line_index = 0;
  bool exhausted = false;
  std::vector<Item> batch;
  while (!exhausted) {
    batch.clear();
    while (batch.size() < std::max<std::size_t>(1, batch_size)) {
      if (!std::getline(contexts, line)) {
        exhausted = true;
        break;
      }
      const std::size_t index = line_index++;
      if (utf8::is_blank(line)) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("input") || !j["input"].is_string())
        throw Error("context line " + std::to_string(index + 1) + " has no string 'input'");
      Item item;
      item.input = j["input"].get<std::string>();
      if (auto id = j.find("id"); id != j.end() && id->is_string())
        item.id = id->get<std::string>();
      else
        item.id = std::to_string(index);
      batch.push_back(std::move(item));
    }

    for_each_index(batch.size(), client.config().max_in_flight, [&](std::size_t i) {
      ChatRequest request;
      request.prompt = batch[i].input;
      request.temperature = gen.temperature;
      request.top_p = gen.top_p;
      request.max_tokens = gen.max_new_units;
      try {
        batch[i].prediction = utf8::trim(client.complete(request));
        batch[i].failed = batch[i].prediction.empty();
      } catch (const PolishError& e) {
        if (e.kind() == PolishError::Kind::Fatal) throw;
        batch[i].failed = true;
      }
    });

    for (auto& item : batch) {
      nlohmann::ordered_json out{{"id", item.id},
                                 {"prediction", item.failed ? std::string() : item.prediction},
                                 {"failed", item.failed}};
      predictions << out.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace)
                  << '\n';
      ++report.samples;
      if (item.failed) ++report.failed;
    }
    if (!predictions) throw IoError("writing predictions failed");
  }
  return report;
}

}  // namespace coqforge

#pragma once

// Dataset-level evaluation (prediction file vs reference file) and
// prediction generation against a chat endpoint.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "coqforge/classifier.hpp"
#include "coqforge/llm_client.hpp"
#include "coqforge/metrics.hpp"
#include "coqforge/tokenizer.hpp"
#include "json.hpp"

namespace coqforge {

struct EvalOptions {
  std::string dataset = "dataset";
  std::string model = "model";
  PqaVariant pqa_variant = PqaVariant::PaperVerbatim;
  BleuOptions bleu;
};

/// One row of the results table. Metric values are fractions in [0, 1].
struct EvalReport {
  std::string dataset;
  std::string model;
  std::string tokenizer;
  std::string classifier;
  PqaVariant pqa_variant = PqaVariant::PaperVerbatim;
  BleuOptions bleu_options;

  std::array<double, kMaxBleuOrder> bleu{};  // corpus BLEU-1..4
  double rouge_1 = 0.0;                      // mean per-sample F1
  double rouge_2 = 0.0;
  double rouge_l = 0.0;
  PqaScore pqa;
  PqaConfusion confusion;
  bool bleu_degenerate = false;

  std::size_t samples = 0;
  std::size_t missing_predictions = 0;  // reference ids with no prediction
  std::size_t unknown_predictions = 0;  // prediction ids absent from refs
  std::size_t failed_predictions = 0;   // predictions flagged failed
  std::size_t rouge_2_degenerate = 0;   // references shorter than two tokens
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
  /// Aligned text table in the results-table column order. BLEU and ROUGE
  /// are printed x100, PQA as a fraction.
  std::string to_table() const;
};

/// Scores predictions ({"id", "prediction"[, "failed"]} JSONL) against
/// references ({"id", "target"} JSONL), matched by id. Throws Error when no
/// pair matches.
EvalReport evaluate(const std::filesystem::path& predictions,
                    const std::filesystem::path& references, const Tokenizer& tokenizer,
                    const AnswerClassifier& classifier, const EvalOptions& options = {});

struct EvalPair {
  std::string prediction;
  std::string target;
};

/// In-memory variant over already matched pairs.
EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, const Tokenizer& tokenizer,
                          const AnswerClassifier& classifier, const EvalOptions& options = {});

/// Decoding parameters passed through to the model server.
struct GenerationConfig {
  double top_p = 0.75;
  double temperature = 0.95;
  std::size_t max_new_units = 512;

  /// Throws ConfigError unless 0 < top_p <= 1 and temperature > 0.
  void validate() const;
};

struct GenerationReport {
  std::size_t samples = 0;
  std::size_t failed = 0;

  nlohmann::ordered_json to_json() const;
};

/// Reads {"input"[, "id"]} JSONL contexts and writes one
/// {"id", "prediction", "failed"} line per context, in input order. Lines
/// without an id get their 0-based line number. Transient or empty failures
/// yield an empty prediction flagged failed; Fatal client errors throw.
GenerationReport generate_predictions(LlmClient& client, std::istream& contexts,
                                      std::ostream& predictions, const GenerationConfig& gen,
                                      std::size_t batch_size = 64);

}  // namespace coqforge

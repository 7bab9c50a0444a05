#pragma once

// Reference-based text metrics (BLEU, ROUGE) and the proactive-questioning
// score (PQA) over question/suggestion agreement.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "coqforge/core.hpp"
#include "coqforge/tokenizer.hpp"

namespace coqforge {

using TokenSpan = std::span<const std::string>;

inline constexpr std::size_t kMaxBleuOrder = 4;

/// Sufficient statistics for BLEU. Sentence scores use one pair's stats;
/// corpus scores sum the stats of every pair first.
struct BleuStats {
  std::array<std::size_t, kMaxBleuOrder> matches{};  // clipped n-gram matches
  std::array<std::size_t, kMaxBleuOrder> totals{};   // hypothesis n-grams
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;

  void merge(const BleuStats& other);
};

BleuStats bleu_stats(TokenSpan hyp, TokenSpan ref);

enum class BleuSmoothing { None, AddOne };

struct BleuOptions {
  std::size_t max_order = kMaxBleuOrder;
  /// BLEU-n as the geometric mean of orders 1..n (true) or order n alone.
  bool cumulative = true;
  /// AddOne adds one to matches and totals for orders >= 2.
  BleuSmoothing smoothing = BleuSmoothing::None;
};

struct BleuScore {
  /// bleu[n-1] is BLEU-n; orders above max_order stay 0.
  std::array<double, kMaxBleuOrder> bleu{};
  std::array<double, kMaxBleuOrder> precision{};
  double brevity_penalty = 1.0;
  /// Empty hypothesis: every value is 0.
  bool degenerate = false;
};

BleuScore bleu_from_stats(const BleuStats& stats, const BleuOptions& options = {});

inline BleuScore bleu(TokenSpan hyp, TokenSpan ref, const BleuOptions& options = {}) {
  return bleu_from_stats(bleu_stats(hyp, ref), options);
}

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Reference shorter than n (ROUGE-N) or an empty sequence.
  bool degenerate = false;
};

/// 2PR/(P+R), 0 when P+R = 0.
double f1_score(double precision, double recall);

PrfScore rouge_n(TokenSpan hyp, TokenSpan ref, std::size_t n);

/// Length of the longest common subsequence (two-row dynamic programme).
std::size_t lcs_length(TokenSpan a, TokenSpan b);

PrfScore rouge_l(TokenSpan hyp, TokenSpan ref);

/// Target/prediction question-suggestion counts.
struct PqaConfusion {
  std::size_t q_tp = 0;         // target question, prediction question
  std::size_t q_t_notp = 0;     // target question, prediction suggestion
  std::size_t q_nott_p = 0;     // target suggestion, prediction question
  std::size_t q_nott_notp = 0;  // target suggestion, prediction suggestion

  void add(AnswerKind target, AnswerKind prediction);
  void merge(const PqaConfusion& other);
  std::size_t total() const { return q_tp + q_t_notp + q_nott_p + q_nott_notp; }

  friend bool operator==(const PqaConfusion&, const PqaConfusion&) = default;
};

enum class PqaVariant {
  /// P = tp / (tp + t_notp), R = tp / (tp + nott_notp), PQA = 2PR/(P+R),
  /// exactly as published.
  PaperVerbatim,
  /// Question-class F1: P = tp / (tp + nott_p), R = tp / (tp + t_notp).
  ConventionalF1,
};

PqaVariant parse_pqa_variant(std::string_view name);
std::string_view to_string(PqaVariant variant);

struct PqaScore {
  double score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  /// Some denominator (including P + R) was zero; score is reported as 0.
  bool degenerate = false;
};

PqaScore pqa(const PqaConfusion& conf, PqaVariant variant);

}  // namespace coqforge

#include "coqforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "coqforge/error.hpp"

namespace coqforge {
namespace {

// n-gram -> count, keyed by the tokens joined with a unit separator.
using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts count_ngrams(TokenSpan tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  std::string key;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    key.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) key.push_back('\x1f');
      key.append(tokens[i + k]);
    }
    ++counts[key];
  }
  return counts;
}

std::size_t clipped_overlap(const NgramCounts& hyp, const NgramCounts& ref) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

}  // namespace

void BleuStats::merge(const BleuStats& other) {
  for (std::size_t k = 0; k < kMaxBleuOrder; ++k) {
    matches[k] += other.matches[k];
    totals[k] += other.totals[k];
  }
  hyp_length += other.hyp_length;
  ref_length += other.ref_length;
}

BleuStats bleu_stats(TokenSpan hyp, TokenSpan ref) {
  BleuStats stats;
  stats.hyp_length = hyp.size();
  stats.ref_length = ref.size();
  for (std::size_t n = 1; n <= kMaxBleuOrder; ++n) {
    const auto hyp_counts = count_ngrams(hyp, n);
    stats.totals[n - 1] = hyp.size() >= n ? hyp.size() - n + 1 : 0;
    if (hyp_counts.empty()) continue;
    stats.matches[n - 1] = clipped_overlap(hyp_counts, count_ngrams(ref, n));
  }
  return stats;
}

BleuScore bleu_from_stats(const BleuStats& stats, const BleuOptions& options) {
  if (options.max_order < 1 || options.max_order > kMaxBleuOrder)
    throw ArgumentError("BLEU max_order must be in 1..4");
  BleuScore score;
  if (stats.hyp_length == 0) {
    score.degenerate = true;
    score.brevity_penalty = 0.0;
    return score;
  }
  score.brevity_penalty =
      stats.hyp_length >= stats.ref_length
          ? 1.0
          : std::exp(1.0 - static_cast<double>(stats.ref_length) /
                               static_cast<double>(stats.hyp_length));

  for (std::size_t k = 0; k < options.max_order; ++k) {
    double m = static_cast<double>(stats.matches[k]);
    double t = static_cast<double>(stats.totals[k]);
    if (options.smoothing == BleuSmoothing::AddOne && k >= 1) {
      m += 1.0;
      t += 1.0;
    }
    score.precision[k] = t > 0 ? m / t : 0.0;
  }

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 1; n <= options.max_order; ++n) {
    const double p = score.precision[n - 1];
    if (options.cumulative) {
      zero = zero || p <= 0.0;
      if (!zero) log_sum += std::log(p);
      score.bleu[n - 1] =
          zero ? 0.0 : score.brevity_penalty * std::exp(log_sum / static_cast<double>(n));
    } else {
      score.bleu[n - 1] = score.brevity_penalty * p;
    }
  }
  return score;
}

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

PrfScore rouge_n(TokenSpan hyp, TokenSpan ref, std::size_t n) {
  if (n == 0) throw ArgumentError("ROUGE-N needs n >= 1");
  PrfScore s;
  if (ref.size() < n) {
    s.degenerate = true;
    return s;
  }
  const auto ref_counts = count_ngrams(ref, n);
  const auto hyp_counts = count_ngrams(hyp, n);
  const std::size_t overlap = clipped_overlap(hyp_counts, ref_counts);
  const std::size_t ref_total = ref.size() - n + 1;
  const std::size_t hyp_total = hyp.size() >= n ? hyp.size() - n + 1 : 0;
  s.recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  s.precision = hyp_total > 0 ? static_cast<double>(overlap) / static_cast<double>(hyp_total) : 0.0;
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

std::size_t lcs_length(TokenSpan a, TokenSpan b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

PrfScore rouge_l(TokenSpan hyp, TokenSpan ref) {
  PrfScore s;
  if (hyp.empty() || ref.empty()) {
    s.degenerate = true;
    return s;
  }
  const auto lcs = static_cast<double>(lcs_length(hyp, ref));
  s.recall = lcs / static_cast<double>(ref.size());
  s.precision = lcs / static_cast<double>(hyp.size());
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

void PqaConfusion::add(AnswerKind target, AnswerKind prediction) {
  const bool t = target == AnswerKind::Question;
  const bool p = prediction == AnswerKind::Question;
  if (t && p)
    ++q_tp;
  else if (t)
    ++q_t_notp;
  else if (p)
    ++q_nott_p;
  else
    ++q_nott_notp;
}

void PqaConfusion::merge(const PqaConfusion& other) {
  q_tp += other.q_tp;
  q_t_notp += other.q_t_notp;
  q_nott_p += other.q_nott_p;
  q_nott_notp += other.q_nott_notp;
}

PqaVariant parse_pqa_variant(std::string_view name) {
  if (name == "paper" || name == "paper_verbatim") return PqaVariant::PaperVerbatim;
  if (name == "conventional" || name == "conventional_f1") return PqaVariant::ConventionalF1;
  throw ConfigError("unknown PQA variant '" + std::string(name) + "' (valid: paper, conventional)");
}

std::string_view to_string(PqaVariant variant) {
  return variant == PqaVariant::PaperVerbatim ? "paper" : "conventional";
}

PqaScore pqa(const PqaConfusion& conf, PqaVariant variant) {
  const std::size_t p_denom =
      variant == PqaVariant::PaperVerbatim ? conf.q_tp + conf.q_t_notp : conf.q_tp + conf.q_nott_p;
  const std::size_t r_denom =
      variant == PqaVariant::PaperVerbatim ? conf.q_tp + conf.q_nott_notp : conf.q_tp + conf.q_t_notp;
  PqaScore s;
  if (p_denom == 0 || r_denom == 0) {
    s.degenerate = true;
    return s;
  }
  s.precision = static_cast<double>(conf.q_tp) / static_cast<double>(p_denom);
  s.recall = static_cast<double>(conf.q_tp) / static_cast<double>(r_denom);
  if (s.precision + s.recall == 0.0) {
    s.degenerate = true;
    return s;
  }
  s.score = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace coqforge

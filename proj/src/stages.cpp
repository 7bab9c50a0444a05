#include "coqforge/stages.hpp"

#include <optional>
#include <vector>

#include "coqforge/parallel.hpp"

namespace coqforge {
namespace {

bool fill_batch(CorpusReader& in, std::vector<Conversation>& batch, std::size_t size) {
  batch.clear();
  while (batch.size() < size) {
    auto conv = in.next();
    if (!conv) return false;
    batch.push_back(std::move(*conv));
  }
  return true;
}

// Calls fn(chunk, begin, end) for `chunks` contiguous slices of [0, n).
template <typename Fn>
void for_each_chunk(std::size_t n, std::size_t chunks, Fn&& fn) {
  chunks = std::max<std::size_t>(1, std::min(chunks, n));
  for_each_index(chunks, chunks, [&](std::size_t c) {
    fn(c, n * c / chunks, n * (c + 1) / chunks);
  });
}

}  // namespace

CleaningReport run_clean_stage(CorpusReader& in, const ConversationSink& out, const RuleSet& rules,
                               const QualityScorer& scorer, const StreamOptions& options) {
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  std::vector<CorpusCleaner> cleaners;
  for (std::size_t w = 0; w < workers; ++w) cleaners.emplace_back(rules, scorer);

  std::vector<Conversation> batch;
  std::vector<std::optional<Conversation>> results;
  bool more = true;
  while (more) {
    more = fill_batch(in, batch, options.batch_size);
    results.assign(batch.size(), std::nullopt);
    for_each_chunk(batch.size(), workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) results[i] = cleaners[c].process(batch[i]);
    });
    for (const auto& r : results)
      if (r) out(*r);
  }
  CleaningReport report = CleaningReport::for_rules(rules);
  for (const auto& cleaner : cleaners) report.merge(cleaner.report());
  return report;
}

SerializeReport run_serialize_stage(CorpusReader& in, const SampleSink& out,
                                    const LengthBudget& budget, ExpansionPolicy policy,
                                    const StreamOptions& options) {
  budget.validate();
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  std::vector<SerializeReport> reports(workers);

  std::vector<Conversation> batch;
  std::vector<std::vector<TrainingSample>> results;
  bool more = true;
  while (more) {
    more = fill_batch(in, batch, options.batch_size);
    results.assign(batch.size(), {});
    for_each_chunk(batch.size(), workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        results[i] = serialize_conversation(batch[i], budget, policy, reports[c]);
    });
    for (const auto& samples : results)
      for (const auto& s : samples) out(s);
  }
  SerializeReport report;
  for (const auto& r : reports) report.merge(r);
  return report;
}

CorpusStats run_stats_stage(CorpusReader& in, const AnswerClassifier& classifier,
                            const StreamOptions& options) {
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  std::vector<CorpusStats> partial(workers);
  std::vector<Conversation> batch;
  bool more = true;
  while (more) {
    more = fill_batch(in, batch, options.batch_size);
    for_each_chunk(batch.size(), workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) partial[c].add(batch[i], classifier);
    });
  }
  CorpusStats stats;
  for (const auto& p : partial) stats.merge(p);
  return stats;
}

}  // namespace coqforge

#pragma once

// Streaming drivers for the batchable stages. Each reads a bounded batch of
// conversations, fans it out over `workers` threads in contiguous chunks and
// emits results in input order, so memory stays constant in corpus size.

#include <cstddef>
#include <functional>

#include "coqforge/cleaner.hpp"
#include "coqforge/classifier.hpp"
#include "coqforge/corpus_io.hpp"
#include "coqforge/serializer.hpp"
#include "coqforge/stats.hpp"

namespace coqforge {

struct StreamOptions {
  std::size_t workers = 1;
  std::size_t batch_size = 1024;
};

using SampleSink = std::function<void(const TrainingSample&)>;

CleaningReport run_clean_stage(CorpusReader& in, const ConversationSink& out, const RuleSet& rules,
                               const QualityScorer& scorer, const StreamOptions& options = {});

SerializeReport run_serialize_stage(CorpusReader& in, const SampleSink& out,
                                    const LengthBudget& budget, ExpansionPolicy policy,
                                    const StreamOptions& options = {});

CorpusStats run_stats_stage(CorpusReader& in, const AnswerClassifier& classifier,
                            const StreamOptions& options = {});

}  // namespace coqforge

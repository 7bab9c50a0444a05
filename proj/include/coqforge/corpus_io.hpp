#pragma once

// Reading and writing corpora: the native JSONL format plus adapters for the
// four public multi-turn consultation benchmarks. Adapter input layouts are
// described in docs/formats.md.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coqforge/core.hpp"
#include "json.hpp"

namespace coqforge {

enum class CorpusFormat { Native, MedDialogCn, ImcsV2, ChipMdcfnpc, MedDg };

std::string_view to_string(CorpusFormat format);

/// Throws ConfigError naming the valid tags when `tag` is unknown.
CorpusFormat parse_format(std::string_view tag);
std::vector<std::string_view> format_names();

struct ReadStats {
  std::size_t records = 0;
  std::size_t kept = 0;
  std::size_t skipped = 0;
  /// First kMaxDiagnostics skip reasons, "record <n>: <why>".
  std::vector<std::string> diagnostics;

  static constexpr std::size_t kMaxDiagnostics = 100;
};

nlohmann::ordered_json to_json(const Conversation& conv);

/// Strict native-schema decode; throws ArgumentError describing the first
/// schema violation. Does not validate conversation invariants.
Conversation conversation_from_json(const nlohmann::json& j);

/// One JSON line in the native schema, no trailing newline.
std::string to_jsonl(const Conversation& conv);

/// Pull-based conversation stream. Records that cannot be repaired into a
/// valid Conversation are skipped and counted in stats(); they never throw.
class CorpusReader {
 public:
  virtual ~CorpusReader() = default;
  virtual std::optional<Conversation> next() = 0;
  const ReadStats& stats() const { return stats_; }

 protected:
  void skip(std::size_t record, std::string_view why);
  ReadStats stats_;
};

using ConversationSink = std::function<void(const Conversation&)>;

/// Native JSONL read from an arbitrary stream (the stream must outlive the
/// reader).
std::unique_ptr<CorpusReader> make_native_reader(std::istream& in);

/// Opens `path` with the adapter for `format`. Throws IoError if the file
/// cannot be read.
std::unique_ptr<CorpusReader> open_corpus(const std::filesystem::path& path,
                                          CorpusFormat format);

/// Streams conversations to a native JSONL file.
class CorpusWriter {
 public:
  /// Throws IoError if the file cannot be created.
  explicit CorpusWriter(const std::filesystem::path& path, bool append = false);

  void write(const Conversation& conv);
  void close();
  std::size_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t count_ = 0;
};

/// Reads every conversation from `path`; convenience for small corpora.
std::vector<Conversation> read_corpus(const std::filesystem::path& path,
                                      CorpusFormat format,
                                      ReadStats* stats = nullptr);

std::size_t write_corpus(const std::vector<Conversation>& convs,
                         const std::filesystem::path& path);

}  // namespace coqforge

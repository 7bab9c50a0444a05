#include "coqforge/corpus_io.hpp"

#include <array>
#include <utility>

#include "coqforge/error.hpp"
#include "coqforge/utf8.hpp"

namespace coqforge {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<std::string_view, CorpusFormat>, 5> kFormats{{
    {"native", CorpusFormat::Native},
    {"meddialog_cn", CorpusFormat::MedDialogCn},
    {"imcs_v2", CorpusFormat::ImcsV2},
    {"chip_mdcfnpc", CorpusFormat::ChipMdcfnpc},
    {"meddg", CorpusFormat::MedDg},
}};

// Thrown by adapters for a record that cannot be converted; caught per record.
struct RecordError {
  std::string why;
};

std::optional<Speaker> map_speaker_label(std::string_view label) {
  static constexpr std::array<std::string_view, 6> patient{
      "patient", "Patient", "Patients", "patients", "患者", "病人"};
  static constexpr std::array<std::string_view, 4> doctor{"doctor", "Doctor", "Doctors",
                                                          "医生"};
  for (auto p : patient)
    if (label == p) return Speaker::Patient;
  for (auto d : doctor)
    if (label == d) return Speaker::Doctor;
  return std::nullopt;
}

std::string string_field(const json& obj, std::initializer_list<std::string_view> keys) {
  for (auto key : keys) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
  }
  return {};
}

const json* array_field(const json& obj, std::initializer_list<std::string_view> keys) {
  for (auto key : keys) {
    auto it = obj.find(key);
    if (it != obj.end() && it->is_array()) return &*it;
  }
  return nullptr;
}

struct RawRecord {
  std::string key;  // id hint: object key or positional index
  json value;
};

Utterance speaker_utterance(const json& turn, std::initializer_list<std::string_view> speaker_keys,
                            std::initializer_list<std::string_view> text_keys) {
  if (!turn.is_object()) throw RecordError{"turn is not an object"};
  const std::string label = string_field(turn, speaker_keys);
  auto speaker = map_speaker_label(label);
  if (!speaker) throw RecordError{"unknown speaker label '" + label + "'"};
  return {*speaker, string_field(turn, text_keys)};
}

// "病人：..." / "医生：..." lines as used by the MedDialog-CN release.
Utterance prefixed_utterance(const json& line) {
  if (!line.is_string()) throw RecordError{"dialogue line is not a string"};
  const auto text = line.get<std::string>();
  static constexpr std::array<std::pair<std::string_view, Speaker>, 6> prefixes{{
      {"病人：", Speaker::Patient},
      {"病人:", Speaker::Patient},
      {"患者：", Speaker::Patient},
      {"患者:", Speaker::Patient},
      {"医生：", Speaker::Doctor},
      {"医生:", Speaker::Doctor},
  }};
  for (const auto& [prefix, speaker] : prefixes) {
    if (std::string_view(text).starts_with(prefix))
      return {speaker, text.substr(prefix.size())};
  }
  throw RecordError{"dialogue line has no role prefix"};
}

Conversation adapt_meddialog(const RawRecord& rec) {
  Conversation conv;
  const json* lines = nullptr;
  if (rec.value.is_array()) {
    lines = &rec.value;
    conv.id = "meddialog-" + rec.key;
  } else if (rec.value.is_object()) {
    lines = array_field(rec.value, {"dialogue", "dialog", "utterances"});
    conv.id = string_field(rec.value, {"id", "dialogue_id"});
    if (conv.id.empty()) conv.id = "meddialog-" + rec.key;
    if (auto dept = string_field(rec.value, {"department", "doctor_faculty"}); !dept.empty())
      conv.meta["department"] = dept;
  }
  if (lines == nullptr) throw RecordError{"no dialogue array"};
  for (const auto& line : *lines) conv.utterances.push_back(prefixed_utterance(line));
  return conv;
}

Conversation adapt_imcs(const RawRecord& rec) {
  if (!rec.value.is_object()) throw RecordError{"record is not an object"};
  Conversation conv;
  conv.id = string_field(rec.value, {"example_id", "id"});
  if (conv.id.empty()) conv.id = rec.key;
  if (auto report = string_field(rec.value, {"self_report"}); !report.empty())
    conv.utterances.push_back({Speaker::Patient, report});
  const json* turns = array_field(rec.value, {"dialogue"});
  if (turns == nullptr) throw RecordError{"no dialogue array"};
  for (const auto& turn : *turns)
    conv.utterances.push_back(speaker_utterance(turn, {"speaker"}, {"sentence", "text"}));
  if (auto dx = string_field(rec.value, {"diagnosis"}); !dx.empty()) conv.meta["diagnosis"] = dx;
  return conv;
}

Conversation adapt_chip(const RawRecord& rec) {
  if (!rec.value.is_object()) throw RecordError{"record is not an object"};
  Conversation conv;
  conv.id = string_field(rec.value, {"dialog_id", "id"});
  if (conv.id.empty()) conv.id = "chip-" + rec.key;
  const json* turns = array_field(rec.value, {"dialog_info", "dialogue"});
  if (turns == nullptr) throw RecordError{"no dialog_info array"};
  for (const auto& turn : *turns)
    conv.utterances.push_back(speaker_utterance(turn, {"speaker"}, {"sentence", "text"}));
  return conv;
}

Conversation adapt_meddg(const RawRecord& rec) {
  Conversation conv;
  const json* turns = nullptr;
  if (rec.value.is_array()) {
    turns = &rec.value;
  } else if (rec.value.is_object()) {
    turns = array_field(rec.value, {"dialogue", "dialog"});
    conv.id = string_field(rec.value, {"id", "dialogue_id"});
  }
  if (turns == nullptr) throw RecordError{"no dialogue array"};
  if (conv.id.empty()) conv.id = "meddg-" + rec.key;
  for (const auto& turn : *turns)
    conv.utterances.push_back(speaker_utterance(turn, {"id", "speaker"}, {"Sentence", "sentence"}));
  return conv;
}

using Adapter = Conversation (*)(const RawRecord&);

Adapter adapter_for(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::MedDialogCn: return adapt_meddialog;
    case CorpusFormat::ImcsV2: return adapt_imcs;
    case CorpusFormat::ChipMdcfnpc: return adapt_chip;
    case CorpusFormat::MedDg: return adapt_meddg;
    case CorpusFormat::Native: break;
  }
  return nullptr;
}

std::optional<Conversation> finish_adapted(Conversation conv, std::string source) {
  conv.source = std::move(source);
  for (auto& u : conv.utterances) u.text = to_fullwidth_punctuation(normalize_text(u.text));
  return repair(std::move(conv));
}

class NativeReader final : public CorpusReader {
 public:
  explicit NativeReader(std::istream& in) : in_(in) {}
  NativeReader(std::unique_ptr<std::ifstream> owned)
      : owned_(std::move(owned)), in_(*owned_) {}

  std::optional<Conversation> next() override {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (utf8::is_blank(line)) continue;
      ++stats_.records;
      try {
        auto conv = conversation_from_json(json::parse(line));
        if (auto why = validation_error(conv)) {
          auto repaired = repair(std::move(conv));
          if (!repaired) {
            skip(line_no_, *why);
            continue;
          }
          conv = std::move(*repaired);
        }
        ++stats_.kept;
        return conv;
      } catch (const json::exception& e) {
        skip(line_no_, e.what());
      } catch (const ArgumentError& e) {
        skip(line_no_, e.what());
      }
    }
    return std::nullopt;
  }

 private:
  std::unique_ptr<std::ifstream> owned_;
  std::istream& in_;
  std::size_t line_no_ = 0;
};

// Benchmark files come either as one JSON document (array, or object keyed by
// record id) or as JSONL with one record per line.
class AdapterReader final : public CorpusReader {
 public:
  AdapterReader(const std::filesystem::path& path, CorpusFormat format)
      : in_(path, std::ios::binary), adapter_(adapter_for(format)),
        source_(to_string(format)) {
    if (!in_) throw IoError("cannot open " + path.string());
    detect_layout();
  }

  std::optional<Conversation> next() override {
    while (auto rec = next_raw()) {
      ++stats_.records;
      try {
        auto conv = finish_adapted(adapter_(*rec), source_);
        if (!conv) {
          skip(stats_.records, "not repairable into a valid conversation");
          continue;
        }
        ++stats_.kept;
        return conv;
      } catch (const RecordError& e) {
        skip(stats_.records, e.why);
      } catch (const json::exception& e) {
        skip(stats_.records, e.what());
      }
    }
    return std::nullopt;
  }

 private:
  void detect_layout() {
    std::string first;
    while (std::getline(in_, first)) {
      if (!utf8::is_blank(first)) break;
    }
    const std::string trimmed = utf8::trim(first);
    if (trimmed.empty()) return;  // empty file
    if (trimmed.front() == '{') {
      auto j = json::parse(trimmed, nullptr, false);
      if (!j.is_discarded()) {
        line_mode_ = true;
        pending_line_ = trimmed;
        return;
      }
    }
    // Whole-document mode: re-read everything.
    in_.clear();
    in_.seekg(0);
    json doc = json::parse(in_, nullptr, false);
    if (doc.is_discarded()) {
      ++stats_.records;
      skip(1, "file is neither a JSON document nor JSONL");
      return;
    }
    if (doc.is_array()) {
      for (std::size_t i = 0; i < doc.size(); ++i)
        records_.push_back({std::to_string(i), std::move(doc[i])});
    } else if (doc.is_object()) {
      for (auto& [key, value] : doc.items()) records_.push_back({key, std::move(value)});
    } else {
      ++stats_.records;
      skip(1, "top-level JSON value is neither an array nor an object");
    }
  }

  std::optional<RawRecord> next_raw() {
    if (!line_mode_) {
      if (cursor_ >= records_.size()) return std::nullopt;
      return std::move(records_[cursor_++]);
    }
    std::string line;
    while (true) {
      if (pending_line_) {
        line = std::move(*pending_line_);
        pending_line_.reset();
      } else if (!std::getline(in_, line)) {
        return std::nullopt;
      }
      ++line_index_;
      if (!utf8::is_blank(line)) break;
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      // Count as a record and let the adapter reject it.
      return RawRecord{std::to_string(line_index_ - 1), json()};
    }
    // {"<id>": {record}} lines, as produced by splitting a keyed document.
    if (j.is_object() && j.size() == 1 && j.begin().value().is_object()) {
      auto it = j.begin();
      return RawRecord{it.key(), std::move(it.value())};
    }
    return RawRecord{std::to_string(line_index_ - 1), std::move(j)};
  }

  std::ifstream in_;
  Adapter adapter_;
  std::string source_;
  bool line_mode_ = false;
  std::optional<std::string> pending_line_;
  std::size_t line_index_ = 0;
  std::vector<RawRecord> records_;
  std::size_t cursor_ = 0;
};

}  // namespace

std::string_view to_string(CorpusFormat format) {
  for (const auto& [name, f] : kFormats)
    if (f == format) return name;
  return "unknown";
}

std::vector<std::string_view> format_names() {
  std::vector<std::string_view> names;
  for (const auto& entry : kFormats) names.push_back(entry.first);
  return names;
}

CorpusFormat parse_format(std::string_view tag) {
  for (const auto& [name, f] : kFormats)
    if (name == tag) return f;
  std::string valid;
  for (const auto& entry : kFormats) {
    if (!valid.empty()) valid += ", ";
    valid += entry.first;
  }
  throw ConfigError("unknown corpus format '" + std::string(tag) + "' (valid: " + valid + ")");
}

void CorpusReader::skip(std::size_t record, std::string_view why) {
  ++stats_.skipped;
  if (stats_.diagnostics.size() < ReadStats::kMaxDiagnostics)
    stats_.diagnostics.push_back("record " + std::to_string(record) + ": " + std::string(why));
}

nlohmann::ordered_json to_json(const Conversation& conv) {
  nlohmann::ordered_json utterances = nlohmann::ordered_json::array();
  for (const auto& u : conv.utterances)
    utterances.push_back({{"speaker", to_string(u.speaker)}, {"text", u.text}});
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : conv.meta) meta[k] = v;
  return {{"id", conv.id}, {"utterances", std::move(utterances)}, {"source", conv.source},
          {"meta", std::move(meta)}};
}

std::string to_jsonl(const Conversation& conv) {
  return to_json(conv).dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

Conversation conversation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ArgumentError("record is not a JSON object");
  Conversation conv;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) throw ArgumentError("missing string field 'id'");
  conv.id = id->get<std::string>();
  auto utts = j.find("utterances");
  if (utts == j.end() || !utts->is_array()) throw ArgumentError("missing array 'utterances'");
  for (const auto& u : *utts) {
    if (!u.is_object()) throw ArgumentError("utterance is not an object");
    auto sp = u.find("speaker");
    auto tx = u.find("text");
    if (sp == u.end() || !sp->is_string() || tx == u.end() || !tx->is_string())
      throw ArgumentError("utterance needs string 'speaker' and 'text'");
    auto speaker = parse_speaker(sp->get<std::string>());
    if (!speaker) throw ArgumentError("unknown speaker '" + sp->get<std::string>() + "'");
    conv.utterances.push_back({*speaker, tx->get<std::string>()});
  }
  if (auto src = j.find("source"); src != j.end() && src->is_string())
    conv.source = src->get<std::string>();
  if (auto meta = j.find("meta"); meta != j.end() && meta->is_object()) {
    for (const auto& [k, v] : meta->items())
      if (v.is_string()) conv.meta[k] = v.get<std::string>();
  }
  return conv;
}

std::unique_ptr<CorpusReader> make_native_reader(std::istream& in) {
  return std::make_unique<NativeReader>(in);
}

std::unique_ptr<CorpusReader> open_corpus(const std::filesystem::path& path,
                                          CorpusFormat format) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw IoError("cannot read " + path.string() + ": not a regular file");
  if (format == CorpusFormat::Native) {
    auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*in) throw IoError("cannot open " + path.string());
    return std::make_unique<NativeReader>(std::move(in));
  }
  return std::make_unique<AdapterReader>(path, format);
}

CorpusWriter::CorpusWriter(const std::filesystem::path& path, bool append)
    : path_(path),
      out_(path, append ? std::ios::binary | std::ios::app : std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot create " + path.string());
}

void CorpusWriter::write(const Conversation& conv) {
  out_ << to_jsonl(conv) << '\n';
  if (!out_)
    throw IoError("write to " + path_.string() + " failed after " + std::to_string(count_) +
                  " conversations");
  ++count_;
}

void CorpusWriter::close() {
  out_.flush();
  if (!out_)
    throw IoError("flush of " + path_.string() + " failed after " + std::to_string(count_) +
                  " conversations");
  out_.close();
}

std::vector<Conversation> read_corpus(const std::filesystem::path& path, CorpusFormat format,
                                      ReadStats* stats) {
  auto reader = open_corpus(path, format);
  std::vector<Conversation> out;
  while (auto conv = reader->next()) out.push_back(std::move(*conv));
  if (stats != nullptr) *stats = reader->stats();
  return out;
}

std::size_t write_corpus(const std::vector<Conversation>& convs,
                         const std::filesystem::path& path) {
  CorpusWriter writer(path);
  for (const auto& conv : convs) writer.write(conv);
  writer.close();
  return writer.count();
}

}  // namespace coqforge

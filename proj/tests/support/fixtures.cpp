#include "fixtures.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string_view>

namespace coqforge::testing {
namespace {

constexpr std::array<std::string_view, 12> kComplaints = {
    "我咳嗽三天了，晚上更厉害", "孩子发烧两天了", "最近总是头疼", "喉咙疼，吞咽的时候更明显",
    "胃不舒服，吃完饭就胀", "皮肤起了红疹子，很痒", "腰疼了一个星期", "拉肚子一天了",
    "最近睡眠很差", "膝盖上楼的时候疼", "鼻塞流鼻涕", "早上起来眼睛肿"};

constexpr std::array<std::string_view, 15> kQuestions = {
    "咳嗽多久了？", "有没有发烧", "体温最高多少度？", "有痰吗", "痰是什么颜色的？",
    "以前有过类似情况吗？", "最近吃过什么药？", "晚上症状重吗", "有没有过敏史？",
    "是否伴有胸闷", "大便情况怎么样？", "睡眠好吗", "多大年纪了？", "哪里最不舒服",
    "做过血常规检查吗？"};

constexpr std::array<std::string_view, 12> kSuggestions = {
    "建议多喝温水，注意休息。", "可以先口服止咳糖浆，观察三天。", "注意保暖，避免受凉。",
    "建议到医院做个血常规检查。", "饮食清淡，少吃辛辣刺激的食物。", "如果持续高烧，请及时就医。",
    "按时服药，一周后复诊。", "保持室内空气流通。", "可以做雾化治疗缓解症状。",
    "暂时不需要使用抗生素。", "多吃蔬菜水果，保证睡眠。", "症状加重的话需要拍胸片。"};

constexpr std::array<std::string_view, 14> kReplies = {
    "有一点", "三十八度五", "黄色的痰", "没有", "吃过感冒药", "晚上比较严重", "没有过敏",
    "正常", "不太好", "四十二岁", "嗓子最疼", "还没做", "好的", "明白了"};

constexpr std::array<std::string_view, 4> kDepartments = {"呼吸内科", "儿科", "消化内科", "皮肤科"};

constexpr std::array<std::size_t, kDemoNoisyConversations> kNoisyIndices = {3,  8,  14, 19, 25,
                                                                             31, 36, 42, 47};

std::string pick(std::mt19937& rng, auto const& pool) {
  return std::string(pool[rng() % pool.size()]);
}

std::string demo_id(std::size_t i) {
  std::string digits = std::to_string(i + 1);
  return "demo-" + std::string(3 - digits.size(), '0') + digits;
}

// Strip-only noise: the rule removes it and leaves the utterance intact.
void inject_noise(Conversation& conv, std::size_t variant) {
  auto& first_patient = conv.utterances[0].text;
  auto& last_doctor = conv.utterances.back().text;
  switch (variant % kDemoNoisyConversations) {
    case 0: first_patient += "[图片]"; break;
    case 1: last_doctor += " http://www.haodf.com/wenda/123.htm"; break;
    case 2: first_patient += "【语音】"; break;
    case 3: last_doctor += " 温馨提示：本回复仅供参考。"; break;
    case 4: first_patient += " IMG_0231.jpg"; break;
    case 5: last_doctor += " www.example.cn"; break;
    case 6: first_patient += "（以下内容缺失）"; break;
    case 7: last_doctor += " 请对本次服务进行评价，谢谢。"; break;
    default: first_patient += " 上传了2张图片"; break;
  }
}

}  // namespace

std::vector<Conversation> demo_corpus() {
  std::mt19937 rng(462);
  constexpr std::size_t kTurns = kDemoDoctorTurns / kDemoConversations;

  // Question count per conversation, 1..kTurns-1, summing to kDemoQuestions.
  std::vector<std::size_t> questions(kDemoConversations);
  for (auto& q : questions) q = 2 + rng() % 6;
  std::size_t total = std::accumulate(questions.begin(), questions.end(), std::size_t{0});
  while (total != kDemoQuestions) {
    auto& q = questions[rng() % kDemoConversations];
    if (total > kDemoQuestions && q > 1) {
      --q;
      --total;
    } else if (total < kDemoQuestions && q < kTurns - 1) {
      ++q;
      ++total;
    }
  }

  std::vector<Conversation> corpus;
  corpus.reserve(kDemoConversations);
  std::size_t noisy = 0;
  for (std::size_t i = 0; i < kDemoConversations; ++i) {
    Conversation conv;
    conv.id = demo_id(i);
    conv.source = "demo";
    conv.meta["dept"] = std::string(kDepartments[i % kDepartments.size()]);
    for (std::size_t t = 0; t < kTurns; ++t) {
      conv.utterances.push_back({Speaker::Patient, t == 0 ? pick(rng, kComplaints) : pick(rng, kReplies)});
      conv.utterances.push_back(
          {Speaker::Doctor, t < questions[i] ? pick(rng, kQuestions) : pick(rng, kSuggestions)});
    }
    if (std::find(kNoisyIndices.begin(), kNoisyIndices.end(), i) != kNoisyIndices.end())
      inject_noise(conv, noisy++);
    corpus.push_back(std::move(conv));
  }
  return corpus;
}

const std::vector<NoiseExemplar>& noise_exemplars() {
  static const std::vector<NoiseExemplar> exemplars = {
      {NoiseCategory::MissingContent, "null", true},
      {NoiseCategory::MissingContent, "此消息已撤回", true},
      {NoiseCategory::MissingContent, "对方撤回了一条消息"},
      {NoiseCategory::MissingContent, "（以下内容缺失）"},
      {NoiseCategory::Image, "[图片]"},
      {NoiseCategory::Image, "【照片】"},
      {NoiseCategory::Image, "IMG_2023.jpg"},
      {NoiseCategory::Image, "<img src=\"a.png\">"},
      {NoiseCategory::Reward, "送了一面锦旗"},
      {NoiseCategory::Reward, "打赏了 5 元"},
      {NoiseCategory::Reward, "给您发了一个红包"},
      {NoiseCategory::Privacy, "13812345678"},
      {NoiseCategory::Privacy, "zhangsan@example.com"},
      {NoiseCategory::Privacy, "微信：zhang_san88"},
      {NoiseCategory::BrokenJson, "{\"text\": \"咳嗽"},
      {NoiseCategory::BrokenJson, "\\u54b3\\u55fd"},
      {NoiseCategory::Link, "http://www.haodf.com/doctor/1.htm"},
      {NoiseCategory::Link, "www.example.cn"},
      {NoiseCategory::Link, "<a href=\"x\">点这里</a>"},
      {NoiseCategory::SiteTip, "温馨提示：本回复仅供参考。"},
      {NoiseCategory::SiteTip, "好大夫在线提示：请勿轻信偏方。"},
      {NoiseCategory::VoiceRecording, "[语音]"},
      {NoiseCategory::VoiceRecording, "语音 15 秒"},
      {NoiseCategory::AutoReply, "【自动回复】医生正在手术中，稍后回复"},
      {NoiseCategory::AutoReply, "已收到您的问题"},
  };
  return exemplars;
}

std::vector<Conversation> noise_corpus() {
  std::vector<Conversation> corpus;
  const auto& exemplars = noise_exemplars();
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const auto& ex = exemplars[i];
    if (ex.whole_utterance_only) continue;
    Conversation conv;
    conv.id = "noise-" + std::to_string(i + 1);
    conv.source = "noise-fixture";
    conv.meta["category"] = std::string(to_string(ex.category));
    // Two exemplar placements: embedded in a patient turn and appended to a
    // doctor turn, so both speakers are exercised.
    conv.utterances = {
        {Speaker::Patient, "医生你好，我咳嗽好几天了" + ex.text},
        {Speaker::Doctor, std::string(kQuestions[i % kQuestions.size()])},
        {Speaker::Patient, std::string(kReplies[i % kReplies.size()])},
        {Speaker::Doctor, std::string(kSuggestions[i % kSuggestions.size()]) + " " + ex.text},
        {Speaker::Patient, "谢谢医生"},
        {Speaker::Doctor, "不客气，祝早日康复。"},
    };
    corpus.push_back(std::move(conv));
  }
  // Exemplars that are a whole utterance on their own.
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const auto& ex = exemplars[i];
    Conversation conv;
    conv.id = "noise-solo-" + std::to_string(i + 1);
    conv.source = "noise-fixture";
    conv.meta["category"] = std::string(to_string(ex.category));
    conv.utterances = {
        {Speaker::Patient, "孩子发烧两天了"},
        {Speaker::Doctor, "体温最高多少度？"},
        {Speaker::Patient, ex.text},
        {Speaker::Doctor, ex.text},
        {Speaker::Patient, "三十九度"},
        {Speaker::Doctor, "建议先物理降温，超过三十八度五可以吃退烧药。"},
    };
    corpus.push_back(std::move(conv));
  }
  return corpus;
}

std::filesystem::path data_dir() { return std::filesystem::path(COQFORGE_SOURCE_DIR) / "data"; }

Conversation random_conversation(std::mt19937_64& rng, std::size_t index,
                                 const FuzzOptions& options) {
  static constexpr std::array<std::string_view, 28> kPieces = {
      "咳", "嗽", "发", "烧", "头", "疼", "吗", "呢", "？", "，", "。", "：", "医生：", "病人：",
      "a", "Z", "0", "9", " ", "!", "\"", "\\", "{", "}", "𠀀", "\t", "ａ", "　"};
  auto text = [&](std::size_t max_len) {
    std::string s;
    const std::size_t len = 1 + rng() % max_len;
    for (std::size_t k = 0; k < len; ++k) s += kPieces[rng() % kPieces.size()];
    // Only spaces, tabs and U+3000 (bytes e3 80 80) would make it blank.
    if (s.find_first_not_of(" \t\xe3\x80") == std::string::npos) s = "嗯" + s;
    return s;
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Conversation conv;
  conv.id = "fuzz-" + std::to_string(index);
  conv.source = "fuzz";
  const std::size_t n = 2 + rng() % (options.max_utterances - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t max_len = options.max_text;
    if (options.long_text_probability > 0 && unit(rng) < options.long_text_probability)
      max_len = options.long_text_min + rng() % (options.long_text_max - options.long_text_min);
    conv.utterances.push_back({i % 2 == 0 ? Speaker::Patient : Speaker::Doctor, text(max_len)});
  }
  return conv;
}

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_length,
                                       std::size_t alphabet) {
  std::vector<std::string> out(rng() % (max_length + 1));
  for (auto& t : out) t = std::string(1, static_cast<char>('a' + rng() % alphabet));
  return out;
}

Conversation synthetic_conversation(std::size_t i) {
  // splitmix64 so every conversation is independent of the others.
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = mix(i);
  auto next = [&] { return h = mix(h); };

  Conversation conv;
  conv.id = "s" + std::to_string(i);
  conv.source = "synthetic";
  const std::size_t turns = 1 + next() % 5;
  for (std::size_t t = 0; t < turns; ++t) {
    conv.utterances.push_back(
        {Speaker::Patient, t == 0 ? std::string(kComplaints[next() % kComplaints.size()])
                                  : std::string(kReplies[next() % kReplies.size()])});
    conv.utterances.push_back({Speaker::Doctor, next() % 2 == 0
                                                    ? std::string(kQuestions[next() % kQuestions.size()])
                                                    : std::string(kSuggestions[next() % kSuggestions.size()])});
  }
  switch (i % 10) {
    case 3: conv.utterances.front().text += "[图片]"; break;
    case 6: conv.utterances.back().text += " http://www.haodf.com/x/" + std::to_string(i) + ".htm"; break;
    default: break;
  }
  if (i % 97 == 5) conv.utterances.back().text = "{\"text\": \"" + conv.utterances.back().text;
  return conv;
}

}  // namespace coqforge::testing

#pragma once

// Synthetic labeled debates for tests and demos. Check-worthy sentences carry
// numbers and words from a dedicated claim vocabulary; the rest is filler
// small talk with a little label noise.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "checkworthy/corpus.hpp"

namespace checkworthy::synthetic {

inline constexpr std::array<std::string_view, 20> kClaimWords = {
    "unemployment", "deficit",  "billion",       "percent", "tariffs", "wages",   "medicare",
    "inflation",    "exports",  "manufacturing", "pension", "budget",  "revenue", "debt",
    "spending",     "million",  "trillion",      "factories", "payroll", "mortgages",
};

inline constexpr std::array<std::string_view, 60> kFillerWords = {
    "thank",    "you",     "everyone", "tonight",  "really", "think",    "believe", "know",    "people",   "great",
    "wonderful", "folks",  "look",     "frankly",  "honest", "question", "answer",  "moderator", "talk",   "want",
    "country",  "future",  "family",   "friends",  "together", "maybe",  "right",   "wrong",   "time",     "again",
    "story",    "feel",    "hope",     "heart",    "strong", "leader",   "vision",  "listen",  "respect",  "proud",
    "nice",     "good",    "terrible", "beautiful", "amazing", "welcome", "ladies", "gentlemen", "audience", "stage",
    "evening",  "morning", "point",    "chance",    "sure",   "absolutely", "indeed", "happy",  "glad",     "agree",
};

inline constexpr std::array<std::string_view, 3> kSpeakers = {"MODERATOR", "CANDIDATE_A", "CANDIDATE_B"};

struct Options {
  int debates = 5;
  int sentences = 100;
  double positive_rate = 0.15;
  std::uint64_t seed = 7;
  std::string id_prefix = "debate";
};

inline std::vector<Debate> generate(const Options& opt) {
  std::mt19937_64 rng(opt.seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto number = [&] { return std::to_string(2 + pick(998)); };

  std::vector<Debate> out;
  for (int d = 0; d < opt.debates; ++d) {
    Debate debate;
    debate.debate_id = opt.id_prefix + "_" + std::to_string(d + 1);
    for (int s = 0; s < opt.sentences; ++s) {
      const bool positive = uniform() < opt.positive_rate;
      const std::size_t len = 6 + pick(8);
      std::vector<std::string> words;
      for (std::size_t i = 0; i < len; ++i) words.emplace_back(kFillerWords[pick(kFillerWords.size())]);
      auto insert = [&](std::string w) {
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(pick(words.size() + 1)), std::move(w));
      };
      if (positive) {
        const std::size_t claims = 2 + pick(2);
        for (std::size_t i = 0; i < claims; ++i) insert(std::string(kClaimWords[pick(kClaimWords.size())]));
        if (uniform() < 0.9) insert(number());
      } else {
        if (uniform() < 0.08) insert(number());
        if (uniform() < 0.05) insert(std::string(kClaimWords[pick(kClaimWords.size())]));
      }
      std::string text;
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) text += ' ';
        text += words[i];
      }
      text[0] = static_cast<char>(text[0] >= 'a' && text[0] <= 'z' ? text[0] - 32 : text[0]);
      text += '.';
      SentenceRecord rec;
      rec.debate_id = debate.debate_id;
      rec.line_number = s + 1;
      rec.speaker = std::string(kSpeakers[pick(kSpeakers.size())]);
      rec.text = std::move(text);
      rec.label = positive ? 1 : 0;
      debate.records.push_back(std::move(rec));
    }
    out.push_back(std::move(debate));
  }
  return out;
}

}  // namespace checkworthy::synthetic

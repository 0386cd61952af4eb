#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "depseq/ctc.hpp"
#include "depseq/strings.hpp"

namespace depseq {

// Word-level i.i.d. noisy-channel configuration. Per word: delete with
// p_del, substitute with p_sub, else keep; after every word position a
// new word is inserted with p_ins. char_corrupt is the probability that a
// substitution is a one-edit corruption instead of a random in-sentence
// word.
struct NoiseConfig {
  double p_sub = 0.0;
  double p_del = 0.0;
  double p_ins = 0.0;
  double char_corrupt = 0.5;
  std::uint64_t seed = 0;

  void check() const {
    auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_unit(p_sub) || !in_unit(p_del) || !in_unit(p_ins) || !in_unit(char_corrupt)) {
      throw std::invalid_argument("NoiseConfig: probabilities must lie in [0, 1]");
    }
    if (p_sub + p_del > 1.0) {
      throw std::invalid_argument("NoiseConfig: p_sub + p_del must not exceed 1");
    }
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"p_sub", p_sub},
                          {"p_del", p_del},
                          {"p_ins", p_ins},
                          {"char_corrupt", char_corrupt},
                          {"seed", seed}};
  }

  static NoiseConfig from_json(const nlohmann::json& j) {
    NoiseConfig cfg;
    cfg.p_sub = j.value("p_sub", 0.0);
    cfg.p_del = j.value("p_del", 0.0);
    cfg.p_ins = j.value("p_ins", 0.0);
    cfg.char_corrupt = j.value("char_corrupt", 0.5);
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.check();
    return cfg;
  }

  static NoiseConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open noise config: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

// splitmix64; used to derive independent per-sentence seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {

inline std::string one_edit(const std::string& word, std::mt19937_64& rng) {
  auto cps = utf8::decode(word);
  std::uniform_int_distribution<int> op_dist(0, 2);
  int op = op_dist(rng);
  if (op == 2 && cps.size() < 2) op = 0;  // deletion would leave an empty word
  std::uniform_int_distribution<char32_t> letter_dist('a', 'z');
  if (op == 0) {  // substitute one character
    std::uniform_int_distribution<std::size_t> pos_dist(0, cps.size() - 1);
    std::size_t pos = pos_dist(rng);
    char32_t letter = letter_dist(rng);
    if (letter == cps[pos]) letter = 'a' + (letter - 'a' + 1) % 26;
    cps[pos] = letter;
  } else if (op == 1) {  // insert one character
    std::uniform_int_distribution<std::size_t> pos_dist(0, cps.size());
    cps.insert(cps.begin() + static_cast<std::ptrdiff_t>(pos_dist(rng)), letter_dist(rng));
  } else {  // delete one character
    std::uniform_int_distribution<std::size_t> pos_dist(0, cps.size() - 1);
    cps.erase(cps.begin() + static_cast<std::ptrdiff_t>(pos_dist(rng)));
  }
  return utf8::encode(cps);
}

inline std::string substitute_word(const std::string& word,
                                   const std::vector<std::string>& vocab, double char_corrupt,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool use_char = unit(rng) < char_corrupt;
  std::size_t candidates = 0;
  for (const auto& v : vocab) {
    if (v != word) ++candidates;
  }
  if (use_char || candidates == 0) return one_edit(word, rng);
  std::uniform_int_distribution<std::size_t> pick(0, candidates - 1);
  std::size_t target = pick(rng);
  for (const auto& v : vocab) {
    if (v == word) continue;
    if (target-- == 0) return v;
  }
  return one_edit(word, rng);  // unreachable
}

}  // namespace detail

// Applies the noisy channel to one word list. Fully determined by the rng
// state; never emits empty words.
inline std::vector<std::string> corrupt(const std::vector<std::string>& words,
                                        const NoiseConfig& cfg, std::mt19937_64& rng) {
  cfg.check();
  const std::size_t n = words.size();
  std::vector<std::string> vocab;
  for (const auto& w : words) {
    bool seen = false;
    for (const auto& v : vocab) {
      if (v == w) {
        seen = true;
        break;
      }
    }
    if (!seen) vocab.push_back(w);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  enum class Fate { keep, substitute, drop };
  std::vector<Fate> fate(n, Fate::keep);
  for (std::size_t i = 0; i < n; ++i) {
    double u = unit(rng);
    fate[i] = u < cfg.p_del               ? Fate::drop
              : u < cfg.p_del + cfg.p_sub ? Fate::substitute
                                          : Fate::keep;
  }
  std::vector<char> ins_flag(n, 0);
  for (std::size_t i = 0; i < n; ++i) ins_flag[i] = unit(rng) < cfg.p_ins ? 1 : 0;

  // An insertion near a deletion merges with it into substitutions under
  // minimal-edit alignment (vocabulary copies can bridge a two-word gap),
  // which would skew measured rates away from the configuration. Relocate
  // such insertions to a gap clear of deletions; the insertion count per
  // sentence is preserved.
  auto gap_safe = [&](std::size_t g) {
    for (std::size_t k = g >= 2 ? g - 2 : 0; k <= std::min(n - 1, g + 2); ++k) {
      if (fate[k] == Fate::drop) return false;
    }
    return true;
  };
  std::vector<std::size_t> safe_gaps;
  for (std::size_t g = 0; g < n; ++g) {
    if (gap_safe(g)) safe_gaps.push_back(g);
  }
  std::vector<std::size_t> ins_count(n, 0);
  for (std::size_t g = 0; g < n; ++g) {
    if (!ins_flag[g]) continue;
    if (gap_safe(g) || safe_gaps.empty()) {
      ++ins_count[g];
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, safe_gaps.size() - 1);
      ++ins_count[safe_gaps[pick(rng)]];
    }
  }

  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (fate[i]) {
      case Fate::drop:
        break;
      case Fate::substitute:
        out.push_back(detail::substitute_word(words[i], vocab, cfg.char_corrupt, rng));
        break;
      case Fate::keep:
        out.push_back(words[i]);
        break;
    }
    for (std::size_t k = 0; k < ins_count[i]; ++k) {
      std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
      out.push_back(vocab[pick(rng)]);
    }
  }
  return out;
}

inline std::vector<std::string> corrupt(const std::vector<std::string>& words,
                                        const NoiseConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return corrupt(words, cfg, rng);
}

// Emission matrix whose greedy decode reproduces `seq` at noise_temp 0:
// every token gets one leading blank frame plus frames_per_token - 1
// peaked frames. noise_temp > 0 adds Gaussian noise to the logits before
// the softmax, so decoding errors grow with temperature.
inline EmissionMatrix synth_emissions(const std::vector<int>& seq, const SubwordVocab& vocab,
                                      std::size_t frames_per_token, double noise_temp,
                                      std::uint64_t seed = 0) {
  if (frames_per_token < 2) {
    throw std::invalid_argument("synth_emissions: frames_per_token must be >= 2");
  }
  if (noise_temp < 0) throw std::invalid_argument("synth_emissions: negative noise_temp");
  const std::size_t vsize = vocab.size();
  for (int id : seq) {
    if (id < 0 || static_cast<std::size_t>(id) >= vsize) {
      throw std::invalid_argument("synth_emissions: token id " + std::to_string(id) +
                                  " outside vocabulary");
    }
  }
  const int blank = vocab.blank_id();
  std::vector<int> targets;
  if (seq.empty()) {
    targets.assign(frames_per_token, blank);
  } else {
    targets.reserve(seq.size() * frames_per_token);
    for (int id : seq) {
      targets.push_back(blank);
      for (std::size_t k = 1; k < frames_per_token; ++k) targets.push_back(id);
    }
  }

  EmissionMatrix em(targets.size(), vsize);
  if (noise_temp == 0.0) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      em.at(t, static_cast<std::size_t>(targets[t])) = 1.0;
    }
    return em;
  }
  constexpr double kPeakLogit = 8.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_temp);
  std::vector<double> logits(vsize);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    double max_logit = -1e300;
    for (std::size_t v = 0; v < vsize; ++v) {
      logits[v] = (static_cast<int>(v) == targets[t] ? kPeakLogit : 0.0) + noise(rng);
      max_logit = std::max(max_logit, logits[v]);
    }
    double sum = 0.0;
    for (std::size_t v = 0; v < vsize; ++v) {
      logits[v] = std::exp(logits[v] - max_logit);
      sum += logits[v];
    }
    for (std::size_t v = 0; v < vsize; ++v) em.at(t, v) = logits[v] / sum;
  }
  return em;
}

}  // namespace depseq

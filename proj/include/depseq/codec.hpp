#pragma once

#include <cstdlib>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "depseq/strings.hpp"
#include "depseq/treebank.hpp"

namespace depseq {

// Bidirectional map between tag strings and the bracketed label symbols
// <POSj> / <RELj>, plus the bound for the <Lj>/<Rj> offset labels.
// Index assignment is positional: pos_tags[j] <-> <POSj>.
class LabelRegistry {
 public:
  LabelRegistry(std::vector<std::string> pos_tags, std::vector<std::string> rel_tags,
                int max_offset)
      : pos_tags_(std::move(pos_tags)), rel_tags_(std::move(rel_tags)), max_offset_(max_offset) {
    if (max_offset_ < 1) throw std::invalid_argument("LabelRegistry: max_offset must be >= 1");
    for (std::size_t j = 0; j < pos_tags_.size(); ++j) {
      if (!pos_index_.emplace(pos_tags_[j], static_cast<int>(j)).second) {
        throw std::invalid_argument("LabelRegistry: duplicate POS tag '" + pos_tags_[j] + "'");
      }
    }
    for (std::size_t j = 0; j < rel_tags_.size(); ++j) {
      if (!rel_index_.emplace(rel_tags_[j], static_cast<int>(j)).second) {
        throw std::invalid_argument("LabelRegistry: duplicate REL tag '" + rel_tags_[j] + "'");
      }
    }
  }

  const std::vector<std::string>& pos_tags() const { return pos_tags_; }
  const std::vector<std::string>& rel_tags() const { return rel_tags_; }
  int max_offset() const { return max_offset_; }

  std::optional<int> pos_index(const std::string& tag) const {
    auto it = pos_index_.find(tag);
    if (it == pos_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> rel_index(const std::string& tag) const {
    auto it = rel_index_.find(tag);
    if (it == rel_index_.end()) return std::nullopt;
    return it->second;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"pos", pos_tags_}, {"rel", rel_tags_}, {"max_offset", max_offset_}};
  }

  static LabelRegistry from_json(const nlohmann::json& j) {
    if (!j.contains("pos") || !j.contains("rel") || !j.contains("max_offset")) {
      throw std::runtime_error("registry JSON needs keys: pos, rel, max_offset");
    }
    return LabelRegistry(j.at("pos").get<std::vector<std::string>>(),
                         j.at("rel").get<std::vector<std::string>>(),
                         j.at("max_offset").get<int>());
  }

  static LabelRegistry load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open registry file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << to_json().dump(2) << "\n";
  }

 private:
  std::vector<std::string> pos_tags_;
  std::vector<std::string> rel_tags_;
  int max_offset_;
  std::unordered_map<std::string, int> pos_index_;
  std::unordered_map<std::string, int> rel_index_;
};

// Tags in order of first appearance; max_offset is the largest |head - i|
// observed (a root token at position i counts as offset i).
inline LabelRegistry build_registry(const Corpus& corpus) {
  if (corpus.trees.empty()) throw std::invalid_argument("build_registry: empty corpus");
  std::vector<std::string> pos_tags, rel_tags;
  std::unordered_map<std::string, int> pos_seen, rel_seen;
  int max_offset = 1;
  for (const DepTree& tree : corpus.trees) {
    for (std::size_t i = 1; i <= tree.size(); ++i) {
      const Token& tok = tree.at(i);
      if (pos_seen.emplace(tok.pos, 1).second) pos_tags.push_back(tok.pos);
      if (rel_seen.emplace(tok.rel, 1).second) rel_tags.push_back(tok.rel);
      max_offset = std::max(max_offset, std::abs(tok.head - static_cast<int>(i)));
    }
  }
  return LabelRegistry(std::move(pos_tags), std::move(rel_tags), max_offset);
}

// Flat encoding of a tree: per token `form<POSj><Lk|Rk><RELj>`, segments
// joined by a single space (the canonical word-boundary marker). A root
// token at position i points at the virtual ROOT with <Li>.
inline std::string encode(const DepTree& tree, const LabelRegistry& registry) {
  std::string out;
  const int n = static_cast<int>(tree.size());
  for (int i = 1; i <= n; ++i) {
    const Token& tok = tree.at(static_cast<std::size_t>(i));
    auto pj = registry.pos_index(tok.pos);
    if (!pj) throw std::runtime_error("encode: unregistered POS tag '" + tok.pos + "'");
    auto rj = registry.rel_index(tok.rel);
    if (!rj) throw std::runtime_error("encode: unregistered REL tag '" + tok.rel + "'");
    int delta = tok.head - i;
    if (delta == 0 || std::abs(delta) > registry.max_offset()) {
      throw std::runtime_error("encode: head offset " + std::to_string(delta) + " of token " +
                               std::to_string(i) + " ('" + tok.form + "') not representable " +
                               "(max_offset " + std::to_string(registry.max_offset()) + ")");
    }
    if (i > 1) out += ' ';
    out += tok.form;
    out += "<POS" + std::to_string(*pj) + ">";
    if (delta < 0) {
      out += "<L" + std::to_string(-delta) + ">";
    } else {
      out += "<R" + std::to_string(delta) + ">";
    }
    out += "<REL" + std::to_string(*rj) + ">";
  }
  return out;
}

// Per-token annotations recovered from a labeled sequence. head_offset is
// signed: negative = head to the left, positive = to the right; nullopt =
// no usable offset label was found.
struct DecodedAnnotation {
  std::string word;
  std::string pos;
  std::optional<int> head_offset;
  std::string rel;

  friend bool operator==(const DecodedAnnotation&, const DecodedAnnotation&) = default;
};

namespace detail {

enum class LabelKind { pos, offset, rel };

struct ParsedLabel {
  LabelKind kind;
  int value;           // tag index, or signed offset
};

// Classifies the text between one < > pair. Anything that is not a
// registered symbol yields nullopt.
inline std::optional<ParsedLabel> classify_label(std::string_view body,
                                                 const LabelRegistry& registry) {
  auto parse_index = [](std::string_view digits) -> std::optional<int> {
    if (digits.empty() || digits.size() > 9) return std::nullopt;
    int v = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
    }
    return v;
  };
  if (body.substr(0, 3) == "POS") {
    auto j = parse_index(body.substr(3));
    if (j && *j < static_cast<int>(registry.pos_tags().size())) {
      return ParsedLabel{LabelKind::pos, *j};
    }
    return std::nullopt;
  }
  if (body.substr(0, 3) == "REL") {
    auto j = parse_index(body.substr(3));
    if (j && *j < static_cast<int>(registry.rel_tags().size())) {
      return ParsedLabel{LabelKind::rel, *j};
    }
    return std::nullopt;
  }
  if (!body.empty() && (body[0] == 'L' || body[0] == 'R')) {
    auto j = parse_index(body.substr(1));
    if (j && *j >= 1 && *j <= registry.max_offset()) {
      return ParsedLabel{LabelKind::offset, body[0] == 'L' ? -*j : *j};
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Total decoder for arbitrary model output. Per space-separated segment:
// the word is the prefix before the leftmost '<'; the leftmost registered
// label of each category wins; unknown bracketed symbols and text after
// the word are skipped; missing categories fall back to pos=X,
// head_offset=None, rel=dep. Segments with an empty word are dropped.
inline std::vector<DecodedAnnotation> decode(std::string_view seq,
                                             const LabelRegistry& registry) {
  std::vector<DecodedAnnotation> out;
  for (const std::string& segment : split(seq, ' ')) {
    std::size_t lt = segment.find('<');
    std::string word = segment.substr(0, lt == std::string::npos ? segment.size() : lt);
    if (word.empty()) continue;

    DecodedAnnotation anno;
    anno.word = std::move(word);
    std::optional<int> pos_j, rel_j, offset;
    std::size_t i = lt;
    while (i != std::string::npos && i < segment.size()) {
      std::size_t gt = segment.find('>', i + 1);
      if (gt == std::string::npos) break;
      std::string_view body(segment.data() + i + 1, gt - i - 1);
      std::size_t inner = body.find('<');
      if (inner != std::string_view::npos) {
        i = i + 1 + inner;  // re-scan from the nested '<'
        continue;
      }
      if (auto label = detail::classify_label(body, registry)) {
        switch (label->kind) {
          case detail::LabelKind::pos:
            if (!pos_j) pos_j = label->value;
            break;
          case detail::LabelKind::offset:
            if (!offset) offset = label->value;
            break;
          case detail::LabelKind::rel:
            if (!rel_j) rel_j = label->value;
            break;
        }
      }
      i = segment.find('<', gt + 1);
    }
    anno.pos = pos_j ? registry.pos_tags()[static_cast<std::size_t>(*pos_j)] : "X";
    anno.rel = rel_j ? registry.rel_tags()[static_cast<std::size_t>(*rel_j)] : "dep";
    anno.head_offset = offset;
    out.push_back(std::move(anno));
  }
  return out;
}

}  // namespace depseq

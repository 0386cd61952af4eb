#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "depseq/codec.hpp"
#include "depseq/treebank.hpp"

namespace depseq {

// Token whose head may still be missing or structurally wrong.
struct ProvisionalToken {
  std::string form;
  std::string pos;
  std::optional<int> head;  // absolute index, 0 = virtual ROOT
  std::string rel;
};

// Turns signed offsets into absolute head indices. Anything that lands
// outside [0, n] or on the token itself stays unresolved.
inline std::vector<ProvisionalToken> resolve_heads(const std::vector<DecodedAnnotation>& annos) {
  if (annos.empty()) throw std::invalid_argument("resolve_heads: empty annotation list");
  const int n = static_cast<int>(annos.size());
  std::vector<ProvisionalToken> out;
  out.reserve(annos.size());
  for (int i = 1; i <= n; ++i) {
    const DecodedAnnotation& a = annos[static_cast<std::size_t>(i - 1)];
    ProvisionalToken tok;
    tok.form = a.word;
    tok.pos = a.pos;
    tok.rel = a.rel;
    if (a.head_offset) {
      int h = i + *a.head_offset;
      if (h >= 0 && h <= n && h != i) tok.head = h;
    }
    out.push_back(std::move(tok));
  }
  return out;
}

// Deterministic repair enforcing root uniqueness, head validity, and
// acyclicity. Steps, in order: pick the root candidate (leftmost head-0
// token with rel "root", else leftmost head-0 token, else token 1 forced
// to head 0 / rel "root"); attach unresolved heads to it; reattach every
// other head-0 token to it; break each head cycle by reattaching the
// cycle's smallest-index token. Valid input comes back unchanged.
inline DepTree repair(const std::vector<ProvisionalToken>& tokens,
                      std::string sentence_id = {}) {
  if (tokens.empty()) throw std::invalid_argument("repair: empty sentence");
  const int n = static_cast<int>(tokens.size());

  int root = 0;
  for (int i = 1; i <= n && root == 0; ++i) {
    const auto& t = tokens[static_cast<std::size_t>(i - 1)];
    if (t.head && *t.head == 0 && t.rel == "root") root = i;
  }
  for (int i = 1; i <= n && root == 0; ++i) {
    const auto& t = tokens[static_cast<std::size_t>(i - 1)];
    if (t.head && *t.head == 0) root = i;
  }
  bool forced = root == 0;
  if (forced) root = 1;

  DepTree tree;
  tree.sentence_id = std::move(sentence_id);
  tree.tokens.reserve(tokens.size());
  for (int i = 1; i <= n; ++i) {
    const auto& t = tokens[static_cast<std::size_t>(i - 1)];
    Token tok;
    tok.form = t.form;
    tok.pos = t.pos;
    tok.rel = t.rel;
    if (i == root) {
      tok.head = 0;
      if (forced) tok.rel = "root";
    } else if (!t.head || *t.head == 0) {
      tok.head = root;
    } else {
      tok.head = *t.head;
    }
    tree.tokens.push_back(std::move(tok));
  }

  // Cycle pass. Heads are in range by now, so chains either reach 0 or
  // loop; each loop loses its smallest member to the root candidate.
  std::vector<int> state(static_cast<std::size_t>(n) + 1, 0);  // 0 new, 1 on path, 2 done
  for (int start = 1; start <= n; ++start) {
    if (state[static_cast<std::size_t>(start)] != 0) continue;
    std::vector<int> path;
    int cur = start;
    while (cur != 0 && state[static_cast<std::size_t>(cur)] == 0) {
      state[static_cast<std::size_t>(cur)] = 1;
      path.push_back(cur);
      cur = tree.at(static_cast<std::size_t>(cur)).head;
    }
    if (cur != 0 && state[static_cast<std::size_t>(cur)] == 1) {
      int smallest = cur;
      for (std::size_t k = path.size(); path[k - 1] != cur; --k) {
        smallest = std::min(smallest, path[k - 1]);
      }
      tree.at(static_cast<std::size_t>(smallest)).head = root;
    }
    for (int i : path) state[static_cast<std::size_t>(i)] = 2;
  }
  return tree;
}

// decode -> resolve_heads -> repair. Lines that decode to zero usable
// segments yield a single placeholder token so the result is always a
// well-formed tree.
inline DepTree decode_to_tree(std::string_view seq, const LabelRegistry& registry,
                              std::string sentence_id = {}) {
  auto annos = decode(seq, registry);
  if (annos.empty()) {
    annos.push_back(DecodedAnnotation{"_", "X", std::nullopt, "dep"});
  }
  return repair(resolve_heads(annos), std::move(sentence_id));
}

}  // namespace depseq

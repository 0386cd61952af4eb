#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "depseq/recovery.hpp"
#include "depseq/treebank.hpp"

namespace depseq {

enum class EditKind { match, substitute, insert, erase };

// One step of a word-level edit script. Indices are 0-based positions in
// the gold / hypothesis word lists; match and substitute carry both.
struct EditOp {
  EditKind kind;
  std::optional<std::size_t> gold_index;
  std::optional<std::size_t> hyp_index;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

using AlignmentScript = std::vector<EditOp>;

// Minimal edit-distance script (match 0, substitute/insert/delete 1).
// Ties are resolved left to right preferring match > substitute > delete
// > insert, so the script is unique and deterministic.
inline AlignmentScript align_words(const std::vector<std::string>& gold,
                                   const std::vector<std::string>& hyp) {
  const std::size_t n = gold.size(), m = hyp.size();
  // cost[i][j] = minimal cost aligning gold[i..] with hyp[j..]
  std::vector<std::vector<std::size_t>> cost(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) cost[i][m] = n - i;
  for (std::size_t j = 0; j <= m; ++j) cost[n][j] = m - j;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      std::size_t diag = cost[i + 1][j + 1] + (gold[i] == hyp[j] ? 0 : 1);
      cost[i][j] = std::min({diag, cost[i + 1][j] + 1, cost[i][j + 1] + 1});
    }
  }
  AlignmentScript script;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && gold[i] == hyp[j] && cost[i + 1][j + 1] == cost[i][j]) {
      script.push_back({EditKind::match, i, j});
      ++i, ++j;
    } else if (i < n && j < m && gold[i] != hyp[j] && cost[i + 1][j + 1] + 1 == cost[i][j]) {
      script.push_back({EditKind::substitute, i, j});
      ++i, ++j;
    } else if (i < n && cost[i + 1][j] + 1 == cost[i][j]) {
      script.push_back({EditKind::erase, i, std::nullopt});
      ++i;
    } else {
      script.push_back({EditKind::insert, std::nullopt, j});
      ++j;
    }
  }
  return script;
}

inline std::size_t script_cost(const AlignmentScript& script) {
  std::size_t c = 0;
  for (const EditOp& op : script) {
    if (op.kind != EditKind::match) ++c;
  }
  return c;
}

// Rewrites a gold tree into an oracle tree over the hypothesis words.
// Substituted and inserted words poison the edges touching them with the
// `error` relation; deleted words drop out, surviving dependents climbing
// to the nearest surviving ancestor (also `error`). Inserted words attach
// to the previous hypothesis word (ROOT if first) with POS X. The result
// is run through repair(), so it always satisfies the tree constraints;
// an error-free alignment reproduces the gold tree exactly.
inline DepTree rewrite_oracle(const DepTree& gold, const AlignmentScript& script,
                              const std::vector<std::string>& hyp) {
  const std::size_t n = gold.size(), m = hyp.size();

  enum class GoldFate { matched, substituted, deleted };
  std::vector<GoldFate> fate(n + 1, GoldFate::deleted);
  std::vector<std::size_t> gold_to_hyp(n + 1, 0);          // 1-based hyp position, 0 = gone
  std::vector<std::optional<std::size_t>> hyp_origin(m);   // gold 1-based, nullopt = inserted
  std::size_t gold_seen = 0, hyp_seen = 0;
  for (const EditOp& op : script) {
    if (op.gold_index) {
      if (*op.gold_index != gold_seen++) {
        throw std::invalid_argument("rewrite_oracle: script gold indices not dense");
      }
    }
    if (op.hyp_index) {
      if (*op.hyp_index != hyp_seen++) {
        throw std::invalid_argument("rewrite_oracle: script hyp indices not dense");
      }
    }
    switch (op.kind) {
      case EditKind::match:
      case EditKind::substitute: {
        std::size_t g = *op.gold_index + 1, h = *op.hyp_index + 1;
        fate[g] = op.kind == EditKind::match ? GoldFate::matched : GoldFate::substituted;
        gold_to_hyp[g] = h;
        hyp_origin[h - 1] = g;
        break;
      }
      case EditKind::erase:
        fate[*op.gold_index + 1] = GoldFate::deleted;
        break;
      case EditKind::insert:
        break;
    }
  }
  if (gold_seen != n || hyp_seen != m) {
    throw std::invalid_argument("rewrite_oracle: script covers " + std::to_string(gold_seen) +
                                " gold / " + std::to_string(hyp_seen) + " hyp words, expected " +
                                std::to_string(n) + " / " + std::to_string(m));
  }

  std::vector<ProvisionalToken> oracle;
  oracle.reserve(m);
  for (std::size_t j = 1; j <= m; ++j) {
    ProvisionalToken tok;
    tok.form = hyp[j - 1];
    if (!hyp_origin[j - 1]) {
      tok.pos = "X";
      tok.rel = "error";
      tok.head = static_cast<int>(j - 1);  // previous hyp word, 0 = ROOT
    } else {
      std::size_t g = *hyp_origin[j - 1];
      const Token& src = gold.at(g);
      tok.pos = src.pos;
      bool crossed_deleted = false;
      std::size_t hg = static_cast<std::size_t>(src.head);
      while (hg != 0 && fate[hg] == GoldFate::deleted) {
        hg = static_cast<std::size_t>(gold.at(hg).head);
        crossed_deleted = true;
      }
      tok.head = hg == 0 ? 0 : static_cast<int>(gold_to_hyp[hg]);
      bool touches_error = fate[g] == GoldFate::substituted ||
                           (hg != 0 && fate[hg] == GoldFate::substituted) || crossed_deleted;
      tok.rel = touches_error ? "error" : src.rel;
    }
    oracle.push_back(std::move(tok));
  }

  if (oracle.empty()) {
    DepTree empty;
    empty.sentence_id = gold.sentence_id;
    empty.metadata = gold.metadata;
    return empty;
  }
  DepTree tree = repair(oracle, gold.sentence_id);
  tree.metadata = gold.metadata;
  return tree;
}

inline DepTree rewrite_oracle(const DepTree& gold, const std::vector<std::string>& hyp) {
  return rewrite_oracle(gold, align_words(gold.forms(), hyp), hyp);
}

}  // namespace depseq

#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "depseq/oracle.hpp"
#include "depseq/strings.hpp"
#include "depseq/treebank.hpp"

namespace depseq {

// Word-level edit distance over the reference length.
inline double wer(const std::vector<std::string>& gold, const std::vector<std::string>& hyp) {
  if (gold.empty()) throw std::invalid_argument("wer: empty gold word list");
  return static_cast<double>(edit_distance(gold, hyp)) / static_cast<double>(gold.size());
}

// Character-level edit distance over the reference length, computed on
// code points after collapsing whitespace runs to single spaces.
inline double cer(std::string_view gold, std::string_view hyp) {
  auto g = utf8::decode(collapse_whitespace(gold));
  auto h = utf8::decode(collapse_whitespace(hyp));
  if (g.empty()) throw std::invalid_argument("cer: empty gold string");
  return static_cast<double>(edit_distance(g, h)) / static_cast<double>(g.size());
}

// Token-level tallies; micro-averaging is plain summation of these.
struct ParseScore {
  std::size_t gold_tokens = 0;
  std::size_t pos_correct = 0;
  std::size_t head_correct = 0;
  std::size_t labeled_correct = 0;

  double pos_acc() const { return ratio(pos_correct); }
  double uas() const { return ratio(head_correct); }
  double las() const { return ratio(labeled_correct); }

  ParseScore& operator+=(const ParseScore& other) {
    gold_tokens += other.gold_tokens;
    pos_correct += other.pos_correct;
    head_correct += other.head_correct;
    labeled_correct += other.labeled_correct;
    return *this;
  }

 private:
  double ratio(std::size_t num) const {
    return gold_tokens == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(gold_tokens);
  }
};

namespace detail {

// Per-gold-token outcome of projecting a predicted tree (over hypothesis
// words) onto the gold tokenization. Gold tokens without an exact-match
// counterpart score wrong everywhere; predicted heads map through the
// alignment, and a head that is an inserted word (or otherwise unmappable)
// is wrong.
struct TokenJudgement {
  bool matched = false;
  bool pos_ok = false;
  bool head_ok = false;
  bool rel_ok = false;
};

inline std::vector<TokenJudgement> judge_tokens(const DepTree& gold, const DepTree& pred) {
  if (gold.tokens.empty()) throw std::invalid_argument("score_parse: empty gold tree");
  const std::size_t n = gold.size(), m = pred.size();
  AlignmentScript script = align_words(gold.forms(), pred.forms());

  std::vector<std::optional<std::size_t>> gold_of_pred(m);  // 1-based gold position
  std::vector<std::optional<std::size_t>> match_pred(n + 1);  // pred pos for exact matches
  for (const EditOp& op : script) {
    if (op.kind == EditKind::match) {
      match_pred[*op.gold_index + 1] = *op.hyp_index + 1;
      gold_of_pred[*op.hyp_index] = *op.gold_index + 1;
    } else if (op.kind == EditKind::substitute) {
      gold_of_pred[*op.hyp_index] = *op.gold_index + 1;
    }
  }

  std::vector<TokenJudgement> out(n + 1);
  for (std::size_t g = 1; g <= n; ++g) {
    TokenJudgement& judge = out[g];
    if (!match_pred[g]) continue;  // deleted or substituted: wrong on all counts
    judge.matched = true;
    std::size_t p = *match_pred[g];
    const Token& gt = gold.at(g);
    const Token& pt = pred.at(p);
    judge.pos_ok = pt.pos == gt.pos;
    std::optional<std::size_t> mapped_head;
    if (pt.head == 0) {
      mapped_head = 0;
    } else if (pt.head >= 1 && pt.head <= static_cast<int>(m)) {
      mapped_head = gold_of_pred[static_cast<std::size_t>(pt.head) - 1];
    }
    judge.head_ok = mapped_head && static_cast<int>(*mapped_head) == gt.head;
    judge.rel_ok = pt.rel == gt.rel && pt.rel != "error";
  }
  return out;
}

}  // namespace detail

// POS accuracy, UAS and LAS of a predicted tree against gold. The
// denominator is the gold token count; the `error` relation never counts
// as a correct label.
inline ParseScore score_parse(const DepTree& gold, const DepTree& pred) {
  auto judgements = detail::judge_tokens(gold, pred);
  ParseScore score;
  score.gold_tokens = gold.size();
  for (std::size_t g = 1; g <= gold.size(); ++g) {
    const auto& judge = judgements[g];
    score.pos_correct += judge.pos_ok ? 1 : 0;
    score.head_correct += judge.head_ok ? 1 : 0;
    score.labeled_correct += judge.head_ok && judge.rel_ok ? 1 : 0;
  }
  return score;
}

struct HeadBucketRow {
  std::string pos;
  int offset_bucket = 0;  // signed gold head offset, clamped to +-max_abs
  std::size_t count = 0;
  std::size_t correct = 0;

  double accuracy() const {
    return count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(count);
  }
};

namespace detail {

inline std::vector<std::pair<const DepTree*, const DepTree*>> pair_by_id(const Corpus& gold,
                                                                         const Corpus& pred) {
  std::map<std::string, const DepTree*> pred_by_id;
  for (const DepTree& t : pred.trees) pred_by_id[t.sentence_id] = &t;
  std::vector<std::string> missing;
  std::vector<std::pair<const DepTree*, const DepTree*>> pairs;
  std::set<std::string> gold_ids;
  for (const DepTree& g : gold.trees) {
    gold_ids.insert(g.sentence_id);
    auto it = pred_by_id.find(g.sentence_id);
    if (it == pred_by_id.end()) {
      missing.push_back(g.sentence_id);
    } else {
      pairs.emplace_back(&g, it->second);
    }
  }
  std::vector<std::string> extra;
  for (const auto& [id, tree] : pred_by_id) {
    if (!gold_ids.count(id)) extra.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "sentence id mismatch;";
    if (!missing.empty()) msg += " missing from pred: " + join(missing, ", ") + ";";
    if (!extra.empty()) msg += " not in gold: " + join(extra, ", ") + ";";
    throw std::runtime_error(msg);
  }
  return pairs;
}

}  // namespace detail

// Head-position analysis: for each gold token whose POS is in the filter
// (empty filter = all tags), bucket by the signed gold head offset
// (clamped to +-max_abs_offset) and count how often the head was
// predicted correctly. Rows come back sorted by (pos, bucket).
inline std::vector<HeadBucketRow> head_accuracy_by_pos(const Corpus& gold, const Corpus& pred,
                                                       const std::set<std::string>& pos_filter,
                                                       int max_abs_offset = 5) {
  if (max_abs_offset < 1) throw std::invalid_argument("max_abs_offset must be >= 1");
  std::map<std::pair<std::string, int>, std::pair<std::size_t, std::size_t>> acc;
  for (auto [gtree, ptree] : detail::pair_by_id(gold, pred)) {
    auto judgements = detail::judge_tokens(*gtree, *ptree);
    for (std::size_t i = 1; i <= gtree->size(); ++i) {
      const Token& tok = gtree->at(i);
      if (!pos_filter.empty() && !pos_filter.count(tok.pos)) continue;
      int offset = tok.head - static_cast<int>(i);
      int bucket = std::clamp(offset, -max_abs_offset, max_abs_offset);
      auto& cell = acc[{tok.pos, bucket}];
      cell.first += 1;
      cell.second += judgements[i].head_ok ? 1 : 0;
    }
  }
  std::vector<HeadBucketRow> rows;
  rows.reserve(acc.size());
  for (const auto& [key, cell] : acc) {
    rows.push_back({key.first, key.second, cell.first, cell.second});
  }
  return rows;
}

struct CorpusReport {
  std::size_t sentences = 0;
  std::size_t gold_words = 0;
  std::size_t word_edits = 0;
  std::size_t gold_chars = 0;
  std::size_t char_edits = 0;
  ParseScore parse;

  double wer() const {
    return gold_words == 0 ? 0.0
                           : static_cast<double>(word_edits) / static_cast<double>(gold_words);
  }
  double cer() const {
    return gold_chars == 0 ? 0.0
                           : static_cast<double>(char_edits) / static_cast<double>(gold_chars);
  }
};

// Micro-averaged corpus metrics. Sentences pair by id; hypothesis word
// lists default to the predicted trees' forms when no transcript map is
// given.
inline CorpusReport corpus_report(
    const Corpus& gold, const Corpus& pred,
    const std::map<std::string, std::vector<std::string>>* hyps = nullptr) {
  CorpusReport report;
  std::vector<std::string> missing_hyps;
  for (auto [gtree, ptree] : detail::pair_by_id(gold, pred)) {
    std::vector<std::string> gold_words = gtree->forms();
    std::vector<std::string> hyp_words;
    if (hyps != nullptr) {
      auto it = hyps->find(gtree->sentence_id);
      if (it == hyps->end()) {
        missing_hyps.push_back(gtree->sentence_id);
        continue;
      }
      hyp_words = it->second;
    } else {
      hyp_words = ptree->forms();
    }
    report.sentences += 1;
    report.gold_words += gold_words.size();
    report.word_edits += edit_distance(gold_words, hyp_words);
    auto gold_chars = utf8::decode(collapse_whitespace(join(gold_words, " ")));
    auto hyp_chars = utf8::decode(collapse_whitespace(join(hyp_words, " ")));
    report.gold_chars += gold_chars.size();
    report.char_edits += edit_distance(gold_chars, hyp_chars);
    report.parse += score_parse(*gtree, *ptree);
  }
  if (!missing_hyps.empty()) {
    throw std::runtime_error("no hypothesis transcript for: " + join(missing_hyps, ", "));
  }
  return report;
}

// Metric columns as percentages, tab-separated.
inline void write_report_tsv(const CorpusReport& report, std::ostream& out) {
  out << "WER\tCER\tPOS\tUAS\tLAS\n";
  out << std::fixed << std::setprecision(2);
  out << report.wer() * 100 << '\t' << report.cer() * 100 << '\t'
      << report.parse.pos_acc() * 100 << '\t' << report.parse.uas() * 100 << '\t'
      << report.parse.las() * 100 << "\n";
}

inline std::string format_report_table(const CorpusReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "  sentences: " << report.sentences << "   gold words: " << report.gold_words
      << "   gold tokens: " << report.parse.gold_tokens << "\n";
  out << "  " << std::setw(8) << "WER" << std::setw(8) << "CER" << std::setw(8) << "POS"
      << std::setw(8) << "UAS" << std::setw(8) << "LAS" << "\n";
  out << "  " << std::setw(8) << report.wer() * 100 << std::setw(8) << report.cer() * 100
      << std::setw(8) << report.parse.pos_acc() * 100 << std::setw(8)
      << report.parse.uas() * 100 << std::setw(8) << report.parse.las() * 100 << "\n";
  return out.str();
}

inline void write_analysis_csv(const std::vector<HeadBucketRow>& rows, std::ostream& out) {
  out << "pos,offset,count,accuracy\n";
  out << std::fixed << std::setprecision(6);
  for (const HeadBucketRow& row : rows) {
    out << row.pos << ',' << row.offset_bucket << ',' << row.count << ',' << row.accuracy()
        << "\n";
  }
}

}  // namespace depseq

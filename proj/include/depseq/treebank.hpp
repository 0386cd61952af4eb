#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "depseq/strings.hpp"

namespace depseq {

// One word of a sentence. head is 0 for the virtual ROOT, otherwise the
// 1-based position of the governing token.
struct Token {
  std::string form;
  std::string pos;
  int head = 0;
  std::string rel;

  friend bool operator==(const Token&, const Token&) = default;
};

struct DepTree {
  std::vector<Token> tokens;
  std::string sentence_id;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return tokens.size(); }
  // 1-based access, matching head indices.
  const Token& at(std::size_t pos) const { return tokens.at(pos - 1); }
  Token& at(std::size_t pos) { return tokens.at(pos - 1); }

  std::vector<std::string> forms() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.form);
    return out;
  }

  friend bool operator==(const DepTree&, const DepTree&) = default;
};

struct Corpus {
  std::vector<DepTree> trees;

  std::size_t size() const { return trees.size(); }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

enum class Constraint { root_uniqueness, head_validity, acyclicity };

inline const char* constraint_name(Constraint c) {
  switch (c) {
    case Constraint::root_uniqueness: return "root-uniqueness";
    case Constraint::head_validity: return "head-validity";
    case Constraint::acyclicity: return "acyclicity";
  }
  return "?";
}

struct Violation {
  Constraint constraint;
  std::size_t token = 0;  // 1-based; 0 when no single token is at fault
  std::string message;
};

// Checks the three structural constraints: exactly one root, every head
// inside [0, n] and distinct from its own position, and no cycles.
// Returns one descriptor per violation; empty means well-formed.
inline std::vector<Violation> validate_tree(const DepTree& tree) {
  if (tree.tokens.empty()) throw std::invalid_argument("validate_tree: empty sentence");
  const std::size_t n = tree.tokens.size();
  std::vector<Violation> out;

  std::size_t first_root = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const Token& tok = tree.at(i);
    if (tok.head == 0) {
      if (first_root == 0) {
        first_root = i;
      } else {
        out.push_back({Constraint::root_uniqueness, i,
                       "token " + std::to_string(i) + " is a second root (first at " +
                           std::to_string(first_root) + ")"});
      }
    }
    if (tok.head < 0 || tok.head > static_cast<int>(n)) {
      out.push_back({Constraint::head_validity, i,
                     "token " + std::to_string(i) + " has head " + std::to_string(tok.head) +
                         " outside [0, " + std::to_string(n) + "]"});
    } else if (tok.head == static_cast<int>(i)) {
      out.push_back({Constraint::head_validity, i,
                     "token " + std::to_string(i) + " is its own head"});
    }
  }
  if (first_root == 0) {
    out.push_back({Constraint::root_uniqueness, 0, "no token has head 0"});
  }

  // Cycle scan over tokens whose head link is usable. state: 0 unvisited,
  // 1 on current path, 2 done.
  std::vector<int> state(n + 1, 0);
  auto link_ok = [&](std::size_t i) {
    int h = tree.at(i).head;
    return h >= 0 && h <= static_cast<int>(n) && h != static_cast<int>(i);
  };
  for (std::size_t start = 1; start <= n; ++start) {
    if (state[start] != 0) continue;
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (true) {
      if (!link_ok(cur)) {
        state[cur] = 2;  // broken link already reported above
        break;
      }
      state[cur] = 1;
      path.push_back(cur);
      std::size_t next = static_cast<std::size_t>(tree.at(cur).head);
      if (next == 0 || state[next] == 2) break;
      if (state[next] == 1) {
        // Found a cycle: members are the path suffix starting at next.
        std::size_t smallest = next;
        for (std::size_t k = path.size(); k-- > 0;) {
          smallest = std::min(smallest, path[k]);
          if (path[k] == next) break;
        }
        out.push_back({Constraint::acyclicity, smallest,
                       "token " + std::to_string(smallest) + " lies on a head cycle"});
        break;
      }
      cur = next;
    }
    for (std::size_t i : path) state[i] = 2;
  }
  return out;
}

inline bool is_valid_tree(const DepTree& tree) { return validate_tree(tree).empty(); }

namespace detail {

inline void parse_comment(std::string_view line, DepTree& tree) {
  std::string body = trim(line.substr(1));
  std::size_t eq = body.find('=');
  if (eq == std::string::npos) return;  // free-form comment, dropped
  std::string key = trim(body.substr(0, eq));
  std::string value = trim(body.substr(eq + 1));
  if (key.empty()) return;
  if (key == "sent_id") {
    tree.sentence_id = value;
  } else {
    tree.metadata[key] = value;
  }
}

inline bool valid_form(std::string_view form) {
  if (form.empty()) return false;
  for (char c : form) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '>') return false;
  }
  return true;
}

inline int parse_head(const std::string& field, std::size_t lineno) {
  if (field.empty()) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": empty HEAD field");
  }
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(field, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": non-integer HEAD '" + field +
                             "'");
  }
  if (pos != field.size()) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": non-integer HEAD '" + field +
                             "'");
  }
  if (v < 0 || v > 1'000'000'000L) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": HEAD " + field +
                             " out of range");
  }
  return static_cast<int>(v);
}

}  // namespace detail

// Reads a 5-column (ID, FORM, POS, HEAD, REL) tab-separated corpus with
// blank lines between sentences and `# key = value` comments. Structural
// violations do not abort the read; they are appended to `warnings`.
inline Corpus read_corpus(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  Corpus corpus;
  std::set<std::string> seen_ids;
  DepTree current;
  std::size_t lineno = 0;
  std::size_t sentence_start = 0;

  auto flush = [&]() {
    if (current.tokens.empty()) {
      current = DepTree{};
      return;
    }
    if (current.sentence_id.empty()) {
      current.sentence_id = std::to_string(corpus.trees.size() + 1);
    }
    if (!seen_ids.insert(current.sentence_id).second) {
      throw std::runtime_error("line " + std::to_string(sentence_start) +
                               ": duplicate sentence_id '" + current.sentence_id + "'");
    }
    if (warnings != nullptr) {
      for (const Violation& v : validate_tree(current)) {
        warnings->push_back("sentence '" + current.sentence_id + "' (line " +
                            std::to_string(sentence_start) + "): " + v.message);
      }
    }
    corpus.trees.push_back(std::move(current));
    current = DepTree{};
  };

  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      if (current.tokens.empty() && current.sentence_id.empty() && current.metadata.empty()) {
        sentence_start = lineno;
      }
      detail::parse_comment(line, current);
      continue;
    }
    auto fields = split(line, '\t');
    if (fields.size() != 5) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": expected 5 tab-separated " +
                               "columns, got " + std::to_string(fields.size()));
    }
    if (current.tokens.empty() && current.sentence_id.empty() && current.metadata.empty()) {
      sentence_start = lineno;
    }
    std::size_t expected = current.tokens.size() + 1;
    std::size_t id_pos = 0;
    unsigned long id = 0;
    try {
      id = std::stoul(fields[0], &id_pos);
    } catch (const std::exception&) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": non-integer token ID '" +
                               fields[0] + "'");
    }
    if (id_pos != fields[0].size() || id != expected) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": token ID '" + fields[0] +
                               "' out of sequence (expected " + std::to_string(expected) + ")");
    }
    if (!detail::valid_form(fields[1])) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": invalid FORM '" + fields[1] +
                               "' (must be non-empty, no whitespace or angle brackets)");
    }
    if (fields[2].empty() || fields[4].empty()) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": empty POS or REL field");
    }
    Token tok;
    tok.form = fields[1];
    tok.pos = fields[2];
    tok.head = detail::parse_head(fields[3], lineno);
    tok.rel = fields[4];
    current.tokens.push_back(std::move(tok));
  }
  flush();
  return corpus;
}

inline Corpus read_corpus_file(const std::string& path,
                               std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return read_corpus(in, warnings);
}

// Canonical writer: sent_id comment, metadata comments in key order, one
// row per token, blank line after every sentence. read_corpus() of the
// output reproduces the corpus exactly. Forms carrying reserved characters
// are rejected rather than silently corrupting the file.
inline void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const DepTree& tree : corpus.trees) {
    if (!tree.sentence_id.empty()) {
      out << "# sent_id = " << tree.sentence_id << "\n";
    }
    for (const auto& [key, value] : tree.metadata) {
      out << "# " << key << " = " << value << "\n";
    }
    for (std::size_t i = 1; i <= tree.size(); ++i) {
      const Token& tok = tree.at(i);
      if (!detail::valid_form(tok.form)) {
        throw std::runtime_error("write_corpus: sentence '" + tree.sentence_id + "' token " +
                                 std::to_string(i) + " has invalid FORM '" + tok.form + "'");
      }
      out << i << '\t' << tok.form << '\t' << tok.pos << '\t' << tok.head << '\t' << tok.rel
          << "\n";
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_corpus: output stream failed");
}

inline void write_corpus_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_corpus(corpus, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace depseq

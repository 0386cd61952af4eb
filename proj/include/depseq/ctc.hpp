#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "depseq/strings.hpp"

namespace depseq {

inline constexpr const char* kDefaultBoundaryMarker = "\xE2\x96\x81";  // U+2581 ▁

// Per-frame probability distributions over a subword vocabulary, row-major.
class EmissionMatrix {
 public:
  EmissionMatrix() = default;
  EmissionMatrix(std::size_t frames, std::size_t vocab_size)
      : frames_(frames), vocab_size_(vocab_size), data_(frames * vocab_size, 0.0) {}

  std::size_t frames() const { return frames_; }
  std::size_t vocab_size() const { return vocab_size_; }

  double at(std::size_t t, std::size_t v) const { return data_[t * vocab_size_ + v]; }
  double& at(std::size_t t, std::size_t v) { return data_[t * vocab_size_ + v]; }

  // Throws unless every row is a probability distribution (sum 1 +- 1e-6,
  // no negative entries).
  void check() const {
    for (std::size_t t = 0; t < frames_; ++t) {
      double sum = 0.0;
      for (std::size_t v = 0; v < vocab_size_; ++v) {
        double p = at(t, v);
        if (p < 0.0) {
          throw std::runtime_error("emission row " + std::to_string(t) + " has negative entry");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw std::runtime_error("emission row " + std::to_string(t) + " sums to " +
                                 std::to_string(sum) + ", expected 1");
      }
    }
  }

  // Text format: optional '#' comment lines, then "frames vocab_size",
  // then one row per line (space or comma separated).
  static EmissionMatrix read(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    auto next_data_line = [&]() -> std::string {
      while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        return t;
      }
      throw std::runtime_error("emission file truncated at line " + std::to_string(lineno));
    };
    std::string header = next_data_line();
    std::istringstream hs(header);
    std::size_t frames = 0, vocab = 0;
    if (!(hs >> frames >> vocab)) {
      throw std::runtime_error("emission header must be 'frames vocab_size', got '" + header +
                               "'");
    }
    EmissionMatrix em(frames, vocab);
    for (std::size_t t = 0; t < frames; ++t) {
      std::string row = next_data_line();
      for (char& c : row) {
        if (c == ',') c = ' ';
      }
      std::istringstream rs(row);
      for (std::size_t v = 0; v < vocab; ++v) {
        if (!(rs >> em.at(t, v))) {
          throw std::runtime_error("emission row " + std::to_string(t) + " (line " +
                                   std::to_string(lineno) + "): expected " +
                                   std::to_string(vocab) + " values");
        }
      }
    }
    return em;
  }

  static EmissionMatrix read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open emission file: " + path);
    return read(in);
  }

  void write(std::ostream& out) const {
    out << frames_ << ' ' << vocab_size_ << "\n";
    out << std::setprecision(17);
    for (std::size_t t = 0; t < frames_; ++t) {
      for (std::size_t v = 0; v < vocab_size_; ++v) {
        if (v) out << ' ';
        out << at(t, v);
      }
      out << "\n";
    }
  }

  void write_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    write(out);
    if (!out) throw std::runtime_error("write failed: " + path);
  }

 private:
  std::size_t frames_ = 0;
  std::size_t vocab_size_ = 0;
  std::vector<double> data_;
};

// Greedy CTC decode: per-frame argmax (ties toward the smaller id),
// collapse consecutive repeats, drop blanks.
inline std::vector<int> greedy_ctc(const EmissionMatrix& em, int blank_id = 0) {
  std::vector<int> out;
  int prev = -1;
  for (std::size_t t = 0; t < em.frames(); ++t) {
    int arg = 0;
    double best = em.at(t, 0);
    for (std::size_t v = 1; v < em.vocab_size(); ++v) {
      if (em.at(t, v) > best) {
        best = em.at(t, v);
        arg = static_cast<int>(v);
      }
    }
    if (arg != prev && arg != blank_id) out.push_back(arg);
    prev = arg;
  }
  return out;
}

// Subword piece inventory. Pieces shaped like <...> are user-defined
// symbols: they tokenize atomically and detokenize without surrounding
// spaces, so label symbols survive the round trip intact.
class SubwordVocab {
 public:
  explicit SubwordVocab(std::vector<std::string> pieces, int blank_id = 0,
                        std::string boundary_marker = kDefaultBoundaryMarker)
      : pieces_(std::move(pieces)),
        blank_id_(blank_id),
        marker_(std::move(boundary_marker)),
        user_defined_(pieces_.size(), false) {
    if (marker_.empty()) throw std::invalid_argument("SubwordVocab: empty boundary marker");
    if (blank_id_ < 0 || static_cast<std::size_t>(blank_id_) >= pieces_.size()) {
      throw std::invalid_argument("SubwordVocab: blank_id " + std::to_string(blank_id_) +
                                  " out of range");
    }
    max_piece_len_ = 0;
    for (std::size_t id = 0; id < pieces_.size(); ++id) {
      const std::string& p = pieces_[id];
      if (p.empty()) throw std::invalid_argument("SubwordVocab: empty piece at id " +
                                                 std::to_string(id));
      if (!index_.emplace(p, static_cast<int>(id)).second) {
        throw std::invalid_argument("SubwordVocab: duplicate piece '" + p + "'");
      }
      user_defined_[id] = is_symbol_shaped(p);
      if (user_defined_[id] && p.find(marker_) != std::string::npos) {
        throw std::invalid_argument("SubwordVocab: user-defined piece '" + p +
                                    "' contains the boundary marker");
      }
      max_piece_len_ = std::max(max_piece_len_, p.size());
    }
  }

  std::size_t size() const { return pieces_.size(); }
  int blank_id() const { return blank_id_; }
  const std::string& marker() const { return marker_; }
  std::size_t max_piece_len() const { return max_piece_len_; }

  const std::string& piece(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
      throw std::runtime_error("unknown token id " + std::to_string(id));
    }
    return pieces_[static_cast<std::size_t>(id)];
  }

  std::optional<int> id_of(const std::string& piece) const {
    auto it = index_.find(piece);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool is_user_defined(int id) const {
    return id >= 0 && static_cast<std::size_t>(id) < pieces_.size() &&
           user_defined_[static_cast<std::size_t>(id)];
  }

  // One `id\tpiece` line per piece, ids dense from 0.
  static SubwordVocab load(std::istream& in, int blank_id = 0,
                           std::string marker = kDefaultBoundaryMarker) {
    std::vector<std::string> pieces;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto fields = split(line, '\t');
      if (fields.size() != 2) {
        throw std::runtime_error("vocab line " + std::to_string(lineno) +
                                 ": expected 'id<TAB>piece'");
      }
      if (fields[0] != std::to_string(pieces.size())) {
        throw std::runtime_error("vocab line " + std::to_string(lineno) + ": id '" + fields[0] +
                                 "' out of sequence (expected " + std::to_string(pieces.size()) +
                                 ")");
      }
      pieces.push_back(fields[1]);
    }
    return SubwordVocab(std::move(pieces), blank_id, std::move(marker));
  }

  static SubwordVocab load_file(const std::string& path, int blank_id = 0,
                                std::string marker = kDefaultBoundaryMarker) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocab file: " + path);
    return load(in, blank_id, std::move(marker));
  }

  void save(std::ostream& out) const {
    for (std::size_t id = 0; id < pieces_.size(); ++id) {
      out << id << '\t' << pieces_[id] << "\n";
    }
  }

  void save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    save(out);
    if (!out) throw std::runtime_error("write failed: " + path);
  }

  static bool is_symbol_shaped(std::string_view piece) {
    if (piece.size() < 3 || piece.front() != '<' || piece.back() != '>') return false;
    for (std::size_t i = 1; i + 1 < piece.size(); ++i) {
      if (piece[i] == '<' || piece[i] == '>' || piece[i] == ' ') return false;
    }
    return true;
  }

 private:
  std::vector<std::string> pieces_;
  int blank_id_;
  std::string marker_;
  std::vector<bool> user_defined_;
  std::unordered_map<std::string, int> index_;
  std::size_t max_piece_len_ = 0;
};

// Concatenates pieces back into text: a boundary marker starts a new word
// (no leading space), user-defined symbols glue to the current word.
inline std::string detokenize(const std::vector<int>& ids, const SubwordVocab& vocab) {
  std::string out;
  for (int id : ids) {
    const std::string& p = vocab.piece(id);
    if (vocab.is_user_defined(id)) {
      out += p;
    } else if (p.size() >= vocab.marker().size() &&
               p.compare(0, vocab.marker().size(), vocab.marker()) == 0) {
      if (!out.empty()) out += ' ';
      out.append(p, vocab.marker().size(), std::string::npos);
    } else {
      out += p;
    }
  }
  return out;
}

// Greedy longest-match segmentation over the piece inventory, after the
// SentencePiece-style space -> marker transform (the first word carries
// no marker). User-defined symbols win over longer ordinary pieces.
// detokenize(tokenize(x)) == x for text without leading/trailing/double
// spaces.
inline std::vector<int> tokenize(std::string_view text, const SubwordVocab& vocab) {
  std::string stream;
  stream.reserve(text.size() + 16);
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ') {
      pending_space = true;
      continue;
    }
    if (pending_space) {
      stream += vocab.marker();
      pending_space = false;
    }
    stream += c;
  }

  std::vector<int> ids;
  std::size_t pos = 0;
  std::string probe;
  while (pos < stream.size()) {
    std::size_t limit = std::min(vocab.max_piece_len(), stream.size() - pos);
    int best_user = -1, best_any = -1;
    std::size_t best_user_len = 0, best_any_len = 0;
    for (std::size_t len = limit; len >= 1; --len) {
      probe.assign(stream, pos, len);
      auto id = vocab.id_of(probe);
      if (!id) continue;
      if (best_any < 0) {
        best_any = *id;
        best_any_len = len;
      }
      if (vocab.is_user_defined(*id)) {
        best_user = *id;
        best_user_len = len;
        break;  // longest user-defined match found
      }
    }
    if (best_user >= 0) {
      ids.push_back(best_user);
      pos += best_user_len;
    } else if (best_any >= 0) {
      ids.push_back(best_any);
      pos += best_any_len;
    } else {
      throw std::runtime_error("tokenize: uncoverable character '" +
                               utf8::first_char(stream.substr(pos)) + "' at byte " +
                               std::to_string(pos));
    }
  }
  return ids;
}

}  // namespace depseq

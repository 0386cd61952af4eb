#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "depseq/ctc.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/references.hpp"

using namespace depseq;
using Catch::Matchers::ContainsSubstring;

namespace {

constexpr const char* kMarker = "\xE2\x96\x81";

EmissionMatrix matrix_from_argmax(const std::vector<int>& argmax, std::size_t vocab) {
  EmissionMatrix em(argmax.size(), vocab);
  for (std::size_t t = 0; t < argmax.size(); ++t) {
    double rest = 0.2 / static_cast<double>(vocab - 1);
    for (std::size_t v = 0; v < vocab; ++v) em.at(t, v) = rest;
    em.at(t, static_cast<std::size_t>(argmax[t])) = 0.8;
  }
  return em;
}

EmissionMatrix random_matrix(std::mt19937_64& rng, std::size_t frames, std::size_t vocab,
                             bool quantize) {
  EmissionMatrix em(frames, vocab);
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  for (std::size_t t = 0; t < frames; ++t) {
    double sum = 0.0;
    for (std::size_t v = 0; v < vocab; ++v) {
      double p = unit(rng);
      if (quantize) p = std::round(p * 8.0) / 8.0 + 0.01;  // frequent argmax ties
      em.at(t, v) = p;
      sum += p;
    }
    for (std::size_t v = 0; v < vocab; ++v) em.at(t, v) /= sum;
  }
  return em;
}

}  // namespace

TEST_CASE("greedy_ctc collapses repeats and removes blanks") {
  auto em = matrix_from_argmax({0, 5, 5, 0, 7}, 8);
  CHECK(greedy_ctc(em, 0) == std::vector<int>{5, 7});
}

TEST_CASE("greedy_ctc keeps repeats separated by blanks") {
  auto em = matrix_from_argmax({5, 0, 5}, 8);
  CHECK(greedy_ctc(em, 0) == std::vector<int>{5, 5});
}

TEST_CASE("greedy_ctc breaks argmax ties toward the smaller id") {
  EmissionMatrix em(1, 4);
  em.at(0, 1) = 0.4;
  em.at(0, 2) = 0.4;
  em.at(0, 0) = 0.1;
  em.at(0, 3) = 0.1;
  CHECK(greedy_ctc(em, 0) == std::vector<int>{1});
}

TEST_CASE("greedy_ctc of an empty matrix is empty") {
  CHECK(greedy_ctc(EmissionMatrix(0, 4), 0).empty());
}

TEST_CASE("greedy_ctc matches the reference decoder on random matrices") {
  std::mt19937_64 rng(67);
  std::uniform_int_distribution<std::size_t> frames(0, 20), vocab(2, 8);
  for (int trial = 0; trial < 300; ++trial) {
    auto em = random_matrix(rng, frames(rng), vocab(rng), trial % 2 == 0);
    auto got = greedy_ctc(em, 0);
    CAPTURE(trial, em.frames(), em.vocab_size());
    REQUIRE(got == testsupport::ref_ctc_decode(em, 0));
    CHECK(got.size() <= em.frames());
    for (int id : got) CHECK(id != 0);
  }
}

TEST_CASE("detokenize joins pieces with marker-driven spaces") {
  SubwordVocab vocab({"<blank>", "est", "<POS1>", "<L1>", "<REL0>", std::string(kMarker) + "un"});
  CHECK(detokenize({1, 2, 3, 4, 5}, vocab) == "est<POS1><L1><REL0> un");
}

TEST_CASE("detokenize merges word pieces") {
  SubwordVocab vocab({"<blank>", std::string(kMarker) + "prob", "lé", "me"});
  CHECK(detokenize({1, 2, 3}, vocab) == "probléme");
  CHECK(detokenize({}, vocab).empty());
}

TEST_CASE("detokenize rejects unknown ids") {
  SubwordVocab vocab({"<blank>", "a"});
  CHECK_THROWS_WITH(detokenize({7}, vocab), ContainsSubstring("7"));
}

TEST_CASE("tokenize covers single characters") {
  SubwordVocab vocab({"<blank>", "a"});
  CHECK(tokenize("a", vocab) == std::vector<int>{1});
}

TEST_CASE("tokenize prefers the longest match") {
  SubwordVocab vocab({"<blank>", "a", "ab", "abc", "c"});
  CHECK(tokenize("abc", vocab) == std::vector<int>{3});
  CHECK(tokenize("abab", vocab) == std::vector<int>{2, 2});
}

TEST_CASE("tokenize keeps label symbols atomic") {
  SubwordVocab vocab({"<blank>", "<POS1>", "<", ">", "P", "O", "S", "1", "a"});
  auto ids = tokenize("a<POS1>a", vocab);
  REQUIRE(ids == std::vector<int>{8, 1, 8});
  CHECK(vocab.is_user_defined(ids[1]));
}

TEST_CASE("user-defined symbols beat longer ordinary pieces") {
  SubwordVocab vocab({"<blank>", "<POS1>", "<POS1>x", "x"});
  CHECK(tokenize("<POS1>x", vocab) == std::vector<int>{1, 3});
}

TEST_CASE("tokenize reports uncoverable characters") {
  SubwordVocab vocab({"<blank>", "a"});
  CHECK_THROWS_WITH(tokenize("ab", vocab), ContainsSubstring("'b'"));
  CHECK_THROWS_WITH(tokenize("aé", vocab), ContainsSubstring("'é'"));
}

TEST_CASE("detokenize inverts tokenize on the reference sequence") {
  auto vocab = testsupport::vocab_for_seqs({testsupport::kExampleSequence});
  auto ids = tokenize(testsupport::kExampleSequence, vocab);
  CHECK(detokenize(ids, vocab) == testsupport::kExampleSequence);
}

TEST_CASE("detokenize inverts tokenize on random labeled sequences") {
  std::mt19937_64 rng(71);
  auto corpus = testsupport::random_corpus(rng, 200, 10);
  auto registry = build_registry(corpus);
  std::vector<std::string> seqs;
  for (const auto& tree : corpus.trees) seqs.push_back(encode(tree, registry));
  auto vocab = testsupport::vocab_for_seqs(seqs);
  for (const auto& seq : seqs) {
    CAPTURE(seq);
    REQUIRE(detokenize(tokenize(seq, vocab), vocab) == seq);
  }
}

TEST_CASE("tokenize never splits label symbols on random sequences") {
  std::mt19937_64 rng(73);
  auto corpus = testsupport::random_corpus(rng, 50, 8);
  auto registry = build_registry(corpus);
  std::vector<std::string> seqs;
  for (const auto& tree : corpus.trees) seqs.push_back(encode(tree, registry));
  auto vocab = testsupport::vocab_for_seqs(seqs);
  for (const auto& seq : seqs) {
    for (int id : tokenize(seq, vocab)) {
      const std::string& piece = vocab.piece(id);
      // a piece containing '<' must be exactly one whole label symbol
      if (piece.find('<') != std::string::npos) {
        CHECK(SubwordVocab::is_symbol_shaped(piece));
      }
    }
  }
}

TEST_CASE("vocab construction validates its invariants") {
  CHECK_THROWS_WITH(SubwordVocab({"a", "a"}), ContainsSubstring("duplicate"));
  CHECK_THROWS_WITH(SubwordVocab({"a", ""}), ContainsSubstring("empty piece"));
  CHECK_THROWS_AS(SubwordVocab({"a"}, 3), std::invalid_argument);
  CHECK_THROWS_WITH(SubwordVocab({std::string("<a") + kMarker + "b>"}),
                    ContainsSubstring("boundary marker"));
}

TEST_CASE("vocab file round trip") {
  SubwordVocab vocab({"<blank>", "a", "<POS1>", std::string(kMarker) + "un"});
  std::ostringstream out;
  vocab.save(out);
  std::istringstream in(out.str());
  auto loaded = SubwordVocab::load(in);
  REQUIRE(loaded.size() == vocab.size());
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    CHECK(loaded.piece(static_cast<int>(id)) == vocab.piece(static_cast<int>(id)));
  }
  CHECK(loaded.is_user_defined(2));
}

TEST_CASE("vocab load rejects out-of-sequence ids") {
  std::istringstream in("0\ta\n2\tb\n");
  CHECK_THROWS_WITH(SubwordVocab::load(in), ContainsSubstring("out of sequence"));
}

TEST_CASE("emission matrix text round trip") {
  std::mt19937_64 rng(79);
  auto em = random_matrix(rng, 7, 5, false);
  std::ostringstream out;
  em.write(out);
  std::istringstream in(out.str());
  auto back = EmissionMatrix::read(in);
  REQUIRE(back.frames() == em.frames());
  REQUIRE(back.vocab_size() == em.vocab_size());
  for (std::size_t t = 0; t < em.frames(); ++t) {
    for (std::size_t v = 0; v < em.vocab_size(); ++v) {
      CHECK(back.at(t, v) == em.at(t, v));
    }
  }
  CHECK_NOTHROW(back.check());
}

TEST_CASE("emission matrix read accepts comments and commas") {
  std::istringstream in("# a comment\n2 2\n1.0,0.0\n0.5 0.5\n");
  auto em = EmissionMatrix::read(in);
  CHECK(em.at(0, 0) == 1.0);
  CHECK(em.at(1, 1) == 0.5);
  CHECK_NOTHROW(em.check());
}

TEST_CASE("emission matrix check rejects bad rows") {
  EmissionMatrix em(1, 2);
  em.at(0, 0) = 0.7;
  em.at(0, 1) = 0.4;
  CHECK_THROWS_WITH(em.check(), ContainsSubstring("sums to"));
  em.at(0, 0) = -0.1;
  em.at(0, 1) = 1.1;
  CHECK_THROWS_WITH(em.check(), ContainsSubstring("negative"));
}

TEST_CASE("emission matrix read rejects truncated files") {
  std::istringstream in("2 2\n1.0 0.0\n");
  CHECK_THROWS_WITH(EmissionMatrix::read(in), ContainsSubstring("truncated"));
}

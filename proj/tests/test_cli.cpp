#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "depseq/depseq.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace depseq;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int status = -1;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  std::string cmd = std::string("\"") + DEPSEQ_CLI_PATH + "\" " + args + " 2>/dev/null";
  CmdResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  std::size_t n = 0;
  while ((n = fread(buffer, 1, sizeof buffer, pipe)) > 0) {
    result.out.append(buffer, n);
  }
  int rc = pclose(pipe);
  result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return result;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("depseq_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out);
  out << text;
}

}  // namespace

TEST_CASE("encode writes the golden line and decode restores the corpus") {
  TempDir dir;
  Corpus corpus;
  corpus.trees.push_back(testsupport::example_tree());
  write_corpus_file(corpus, dir.file("gold.conll"));
  testsupport::example_registry().save(dir.file("reg.json"));

  auto enc = run_cli("encode " + dir.file("gold.conll") + " -o " + dir.file("out.seq") +
                     " --registry " + dir.file("reg.json"));
  REQUIRE(enc.status == 0);
  CHECK(slurp(dir.file("out.seq")) == "ex1\t" + testsupport::kExampleSequence + "\n");

  auto dec = run_cli("decode " + dir.file("out.seq") + " --registry " + dir.file("reg.json") +
                     " -o " + dir.file("back.conll"));
  REQUIRE(dec.status == 0);
  CHECK(read_corpus_file(dir.file("back.conll")) == corpus);
}

TEST_CASE("encode builds a registry when none exists") {
  TempDir dir;
  std::mt19937_64 rng(11);
  auto corpus = testsupport::random_corpus(rng, 20, 8);
  write_corpus_file(corpus, dir.file("gold.conll"));

  auto enc = run_cli("encode " + dir.file("gold.conll") + " -o " + dir.file("out.seq"));
  REQUIRE(enc.status == 0);
  REQUIRE(fs::exists(dir.file("out.seq.registry.json")));

  auto dec = run_cli("decode " + dir.file("out.seq") + " --registry " +
                     dir.file("out.seq.registry.json") + " -o " + dir.file("back.conll"));
  REQUIRE(dec.status == 0);
  CHECK(read_corpus_file(dir.file("back.conll")) == corpus);
}

TEST_CASE("encode and decode pass an empty corpus through") {
  TempDir dir;
  write_text(dir.file("empty.conll"), "");
  auto enc = run_cli("encode " + dir.file("empty.conll") + " -o " + dir.file("empty.seq"));
  REQUIRE(enc.status == 0);
  CHECK(slurp(dir.file("empty.seq")).empty());

  auto dec = run_cli("decode " + dir.file("empty.seq") + " --registry " +
                     dir.file("empty.seq.registry.json") + " -o " + dir.file("empty.back"));
  REQUIRE(dec.status == 0);
  CHECK(read_corpus_file(dir.file("empty.back")).size() == 0);
}

TEST_CASE("decode turns garbage lines into valid trees") {
  TempDir dir;
  testsupport::example_registry().save(dir.file("reg.json"));
  write_text(dir.file("junk.seq"),
             "g1\t<POS0><L1>\n"
             "g2\tplain words only\n"
             "g3\t<<<>>> <L9>x<POS1 <REL0>tail\n");
  auto dec = run_cli("decode " + dir.file("junk.seq") + " --registry " + dir.file("reg.json") +
                     " -o " + dir.file("out.conll"));
  REQUIRE(dec.status == 0);
  Corpus corpus = read_corpus_file(dir.file("out.conll"));
  REQUIRE(corpus.size() == 3);
  for (const auto& tree : corpus.trees) CHECK(is_valid_tree(tree));
}

TEST_CASE("simulate with zero noise reproduces the transcripts and is seed-stable") {
  TempDir dir;
  std::mt19937_64 rng(13);
  auto corpus = testsupport::random_corpus(rng, 15, 8);
  write_corpus_file(corpus, dir.file("gold.conll"));

  auto zero = run_cli("simulate " + dir.file("gold.conll") + " -o " + dir.file("zero.hyp"));
  REQUIRE(zero.status == 0);
  std::string expected = "# seed = 0\n";  // the seed is echoed for reproducibility
  for (const auto& tree : corpus.trees) {
    expected += tree.sentence_id + "\t" + join(tree.forms(), " ") + "\n";
  }
  CHECK(slurp(dir.file("zero.hyp")) == expected);

  std::string noisy_args = "simulate " + dir.file("gold.conll") +
                           " --p-sub 0.2 --p-del 0.1 --p-ins 0.1 --seed 7 -o ";
  REQUIRE(run_cli(noisy_args + dir.file("a.hyp")).status == 0);
  REQUIRE(run_cli(noisy_args + dir.file("b.hyp")).status == 0);
  CHECK(slurp(dir.file("a.hyp")) == slurp(dir.file("b.hyp")));

  REQUIRE(run_cli("simulate " + dir.file("gold.conll") +
                  " --p-sub 0.2 --seed 8 -o " + dir.file("c.hyp")).status == 0);
  CHECK(slurp(dir.file("a.hyp")) != slurp(dir.file("c.hyp")));
}

TEST_CASE("oracle over a perfect hypothesis returns the gold corpus") {
  TempDir dir;
  std::mt19937_64 rng(17);
  auto corpus = testsupport::random_corpus(rng, 10, 6);
  write_corpus_file(corpus, dir.file("gold.conll"));
  std::string hyps;
  for (const auto& tree : corpus.trees) {
    hyps += tree.sentence_id + "\t" + join(tree.forms(), " ") + "\n";
  }
  write_text(dir.file("gold.hyp"), hyps);

  auto oracle = run_cli("oracle " + dir.file("gold.conll") + " " + dir.file("gold.hyp") +
                        " -o " + dir.file("oracle.conll"));
  REQUIRE(oracle.status == 0);
  CHECK(read_corpus_file(dir.file("oracle.conll")) == corpus);
}

TEST_CASE("oracle output on simulated hypotheses always validates") {
  TempDir dir;
  std::mt19937_64 rng(19);
  auto corpus = testsupport::random_corpus(rng, 30, 8);
  write_corpus_file(corpus, dir.file("gold.conll"));
  REQUIRE(run_cli("simulate " + dir.file("gold.conll") +
                  " --p-sub 0.3 --p-del 0.2 --p-ins 0.2 --seed 3 -o " + dir.file("sim.hyp"))
              .status == 0);
  REQUIRE(run_cli("oracle " + dir.file("gold.conll") + " " + dir.file("sim.hyp") + " -o " +
                  dir.file("oracle.conll"))
              .status == 0);
  for (const auto& tree : read_corpus_file(dir.file("oracle.conll")).trees) {
    CHECK(is_valid_tree(tree));
  }
}

TEST_CASE("oracle sanitizes hypothesis words the corpus format cannot carry") {
  TempDir dir;
  Corpus corpus;
  corpus.trees.push_back(testsupport::example_tree());
  write_corpus_file(corpus, dir.file("gold.conll"));
  write_text(dir.file("odd.hyp"), "ex1\test u<n probl>me\n");
  REQUIRE(run_cli("oracle " + dir.file("gold.conll") + " " + dir.file("odd.hyp") + " -o " +
                  dir.file("oracle.conll"))
              .status == 0);
  Corpus out = read_corpus_file(dir.file("oracle.conll"));
  REQUIRE(out.size() == 1);
  CHECK(is_valid_tree(out.trees[0]));
}

TEST_CASE("oracle fails when a transcript is missing") {
  TempDir dir;
  Corpus corpus;
  corpus.trees.push_back(testsupport::example_tree());
  write_corpus_file(corpus, dir.file("gold.conll"));
  write_text(dir.file("bad.hyp"), "other\tx y\n");
  CHECK(run_cli("oracle " + dir.file("gold.conll") + " " + dir.file("bad.hyp") + " -o " +
                dir.file("oracle.conll"))
            .status != 0);
}

TEST_CASE("eval reports perfect scores for identical corpora") {
  TempDir dir;
  std::mt19937_64 rng(23);
  auto corpus = testsupport::random_corpus(rng, 10, 8);
  write_corpus_file(corpus, dir.file("gold.conll"));

  auto ev = run_cli("eval " + dir.file("gold.conll") + " " + dir.file("gold.conll") + " -o " +
                    dir.file("report.tsv"));
  REQUIRE(ev.status == 0);
  CHECK_THAT(ev.out, ContainsSubstring("100.00"));
  CHECK(slurp(dir.file("report.tsv")) ==
        "WER\tCER\tPOS\tUAS\tLAS\n0.00\t0.00\t100.00\t100.00\t100.00\n");
}

TEST_CASE("analyze emits the head-position csv") {
  TempDir dir;
  std::mt19937_64 rng(29);
  auto corpus = testsupport::random_corpus(rng, 10, 8);
  write_corpus_file(corpus, dir.file("gold.conll"));
  auto an = run_cli("analyze " + dir.file("gold.conll") + " " + dir.file("gold.conll") +
                    " -o " + dir.file("analysis.csv") + " --pos NOUN,VERB --max-offset 4");
  REQUIRE(an.status == 0);
  std::string csv = slurp(dir.file("analysis.csv"));
  CHECK_THAT(csv, ContainsSubstring("pos,offset,count,accuracy"));
  CHECK_THAT(csv, ContainsSubstring("1.000000"));
  CHECK(csv.find("ADJ") == std::string::npos);
}

TEST_CASE("full ctc pipeline reproduces the gold corpus at zero temperature") {
  TempDir dir;
  std::mt19937_64 rng(31);
  auto corpus = testsupport::random_corpus(rng, 20, 10);
  write_corpus_file(corpus, dir.file("gold.conll"));

  REQUIRE(run_cli("encode " + dir.file("gold.conll") + " -o " + dir.file("gold.seq") +
                  " --registry " + dir.file("reg.json"))
              .status == 0);
  REQUIRE(run_cli("simulate " + dir.file("gold.seq") + " --emissions-dir " + dir.file("em") +
                  " --vocab-out " + dir.file("vocab.tsv") + " --frames-per-token 3")
              .status == 0);
  REQUIRE(run_cli("ctc " + dir.file("em") + " --vocab " + dir.file("vocab.tsv") +
                  " --registry " + dir.file("reg.json") + " -o " + dir.file("pred.conll"))
              .status == 0);
  // the ctc command orders utterances by filename, so compare by id
  Corpus pred = read_corpus_file(dir.file("pred.conll"));
  REQUIRE(pred.size() == corpus.size());
  std::map<std::string, DepTree> by_id;
  for (const auto& tree : pred.trees) by_id[tree.sentence_id] = tree;
  for (const auto& tree : corpus.trees) {
    CAPTURE(tree.sentence_id);
    CHECK(by_id.at(tree.sentence_id) == tree);
  }

  auto ev = run_cli("eval " + dir.file("gold.conll") + " " + dir.file("pred.conll") + " -o " +
                    dir.file("report.tsv"));
  REQUIRE(ev.status == 0);
  CHECK(slurp(dir.file("report.tsv")) ==
        "WER\tCER\tPOS\tUAS\tLAS\n0.00\t0.00\t100.00\t100.00\t100.00\n");
}

TEST_CASE("cli surfaces errors with a non-zero exit code") {
  TempDir dir;
  CHECK(run_cli("eval missing.conll also-missing.conll").status != 0);
  CHECK(run_cli("decode also-missing.seq --registry nope.json -o x").status != 0);
  Corpus corpus;
  corpus.trees.push_back(testsupport::example_tree());
  write_corpus_file(corpus, dir.file("gold.conll"));
  CHECK(run_cli("simulate " + dir.file("gold.conll")).status != 0);  // no -o
  CHECK(run_cli("nonsense").status != 0);
}

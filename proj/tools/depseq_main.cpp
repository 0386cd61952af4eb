// Command-line pipelines over the depseq library: encode/decode labeled
// sequences, simulate ASR noise, rewrite oracle trees, decode emission
// matrices, and score transcription/parsing quality.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "depseq/depseq.hpp"

namespace fs = std::filesystem;
using namespace depseq;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

// `id<TAB>text` per line; text may be empty.
std::map<std::string, std::vector<std::string>> read_hyps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transcript file: " + path);
  std::map<std::string, std::vector<std::string>> hyps;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": expected 'id<TAB>text'");
    }
    std::string id = line.substr(0, tab);
    if (!hyps.emplace(id, split_words(line.substr(tab + 1))).second) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) + ": duplicate id '" +
                               id + "'");
    }
  }
  return hyps;
}

std::vector<std::pair<std::string, std::string>> read_seqs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sequence file: " + path);
  std::vector<std::pair<std::string, std::string>> seqs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      seqs.emplace_back(std::to_string(lineno), line);
    } else {
      seqs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
  }
  return seqs;
}

// Decoded words may carry characters the corpus format reserves.
std::string sanitize_form(std::string form) {
  for (char& c : form) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '>') c = '_';
  }
  return form.empty() ? "_" : form;
}

DepTree sanitized(DepTree tree) {
  for (Token& tok : tree.tokens) tok.form = sanitize_form(std::move(tok.form));
  return tree;
}

struct EncodeOpts {
  std::string corpus_path, out_path, registry_path;
};

void run_encode(const EncodeOpts& opt) {
  Corpus corpus = read_corpus_file(opt.corpus_path);
  std::string registry_path =
      opt.registry_path.empty() ? opt.out_path + ".registry.json" : opt.registry_path;
  std::optional<LabelRegistry> registry;
  if (fs::exists(registry_path)) {
    registry = LabelRegistry::load(registry_path);
  } else {
    if (corpus.trees.empty()) {
      registry = LabelRegistry({"X"}, {"dep"}, 1);
    } else {
      registry = build_registry(corpus);
    }
    registry->save(registry_path);
    std::cerr << "wrote registry: " << registry_path << "\n";
  }
  auto out = open_out(opt.out_path);
  for (const DepTree& tree : corpus.trees) {
    out << tree.sentence_id << '\t' << encode(tree, *registry) << "\n";
  }
  std::cerr << "encoded " << corpus.size() << " sentences -> " << opt.out_path << "\n";
}

struct DecodeOpts {
  std::string seq_path, registry_path, out_path;
};

void run_decode(const DecodeOpts& opt) {
  LabelRegistry registry = LabelRegistry::load(opt.registry_path);
  Corpus corpus;
  for (const auto& [id, seq] : read_seqs(opt.seq_path)) {
    corpus.trees.push_back(sanitized(decode_to_tree(seq, registry, id)));
  }
  write_corpus_file(corpus, opt.out_path);
  std::cerr << "decoded " << corpus.size() << " sentences -> " << opt.out_path << "\n";
}

struct OracleOpts {
  std::string gold_path, hyp_path, out_path;
};

void run_oracle(const OracleOpts& opt) {
  Corpus gold = read_corpus_file(opt.gold_path);
  auto hyps = read_hyps(opt.hyp_path);
  Corpus oracle;
  std::vector<std::string> missing;
  std::size_t skipped = 0;
  for (const DepTree& tree : gold.trees) {
    auto it = hyps.find(tree.sentence_id);
    if (it == hyps.end()) {
      missing.push_back(tree.sentence_id);
      continue;
    }
    if (it->second.empty()) {
      std::cerr << "warning: empty hypothesis for '" << tree.sentence_id << "', skipped\n";
      ++skipped;
      continue;
    }
    oracle.trees.push_back(sanitized(rewrite_oracle(tree, it->second)));
  }
  if (!missing.empty()) {
    throw std::runtime_error("no hypothesis transcript for: " + join(missing, ", "));
  }
  write_corpus_file(oracle, opt.out_path);
  std::cerr << "rewrote " << oracle.size() << " oracle trees (" << skipped << " skipped) -> "
            << opt.out_path << "\n";
}

struct SimulateOpts {
  std::string input_path, out_path, noise_path;
  std::string emissions_dir, vocab_path, vocab_out;
  std::string marker = kDefaultBoundaryMarker;
  NoiseConfig cfg;
  bool seed_set = false;
  std::uint64_t seed = 0;
  std::size_t frames_per_token = 4;
  double temp = 0.0;
  int blank_id = 0;
};

NoiseConfig effective_config(const SimulateOpts& opt) {
  NoiseConfig cfg = opt.noise_path.empty() ? opt.cfg : NoiseConfig::load(opt.noise_path);
  if (opt.seed_set) cfg.seed = opt.seed;
  cfg.check();
  return cfg;
}

void run_simulate_transcripts(const SimulateOpts& opt) {
  NoiseConfig cfg = effective_config(opt);
  Corpus gold = read_corpus_file(opt.input_path);
  auto out = open_out(opt.out_path);
  out << "# seed = " << cfg.seed << "\n";
  for (std::size_t i = 0; i < gold.trees.size(); ++i) {
    NoiseConfig sentence_cfg = cfg;
    sentence_cfg.seed = mix_seed(cfg.seed, i);
    auto hyp = corrupt(gold.trees[i].forms(), sentence_cfg);
    out << gold.trees[i].sentence_id << '\t' << join(hyp, " ") << "\n";
  }
  std::cerr << "simulated " << gold.size() << " transcripts (seed " << cfg.seed << ") -> "
            << opt.out_path << "\n";
}

// Builds a piece inventory that covers the given labeled sequences:
// blank, every bracketed label symbol, marked and unmarked word pieces,
// and single-character fallbacks.
SubwordVocab build_vocab_for_seqs(const std::vector<std::pair<std::string, std::string>>& seqs,
                                  const std::string& marker) {
  std::vector<std::string> pieces{"<blank>"};
  std::set<std::string> seen{pieces.begin(), pieces.end()};
  auto add = [&](std::string piece) {
    if (!piece.empty() && seen.insert(piece).second) pieces.push_back(std::move(piece));
  };
  add(marker);
  for (const auto& [id, seq] : seqs) {
    for (const std::string& field : split(seq, ' ')) {
      std::size_t lt = field.find('<');
      std::string word = field.substr(0, lt == std::string::npos ? field.size() : lt);
      if (!word.empty()) {
        add(word);
        add(marker + word);
      }
      // bracketed symbols become user-defined pieces
      std::size_t i = lt;
      while (i != std::string::npos && i < field.size()) {
        std::size_t gt = field.find('>', i + 1);
        if (gt == std::string::npos) break;
        std::string body = field.substr(i, gt - i + 1);
        if (SubwordVocab::is_symbol_shaped(body)) add(body);
        i = field.find('<', gt + 1);
      }
    }
    for (char32_t cp : utf8::decode(seq)) {
      if (cp == ' ') continue;
      std::string single;
      utf8::append(single, cp);
      add(single);
    }
  }
  return SubwordVocab(std::move(pieces), 0, marker);
}

void run_simulate_emissions(const SimulateOpts& opt) {
  auto seqs = read_seqs(opt.input_path);
  fs::create_directories(opt.emissions_dir);
  std::optional<SubwordVocab> vocab;
  if (!opt.vocab_path.empty()) {
    vocab = SubwordVocab::load_file(opt.vocab_path, opt.blank_id, opt.marker);
  } else {
    vocab = build_vocab_for_seqs(seqs, opt.marker);
    std::string vocab_out = opt.vocab_out.empty()
                                ? (fs::path(opt.emissions_dir) / "vocab.tsv").string()
                                : opt.vocab_out;
    vocab->save_file(vocab_out);
    std::cerr << "wrote vocab (" << vocab->size() << " pieces): " << vocab_out << "\n";
  }
  std::uint64_t seed = opt.seed_set ? opt.seed : 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    auto ids = tokenize(seqs[i].second, *vocab);
    EmissionMatrix em =
        synth_emissions(ids, *vocab, opt.frames_per_token, opt.temp, mix_seed(seed, i));
    em.write_file((fs::path(opt.emissions_dir) / (seqs[i].first + ".em")).string());
  }
  std::cerr << "synthesized " << seqs.size() << " emission matrices -> " << opt.emissions_dir
            << "\n";
}

struct CtcOpts {
  std::string emissions_dir, vocab_path, registry_path, out_path;
  std::string marker = kDefaultBoundaryMarker;
  int blank_id = 0;
};

void run_ctc(const CtcOpts& opt) {
  SubwordVocab vocab = SubwordVocab::load_file(opt.vocab_path, opt.blank_id, opt.marker);
  LabelRegistry registry = LabelRegistry::load(opt.registry_path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(opt.emissions_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".em") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::runtime_error("no .em files in " + opt.emissions_dir);
  }
  Corpus corpus;
  for (const fs::path& file : files) {
    EmissionMatrix em = EmissionMatrix::read_file(file.string());
    em.check();
    std::string text = detokenize(greedy_ctc(em, vocab.blank_id()), vocab);
    corpus.trees.push_back(sanitized(decode_to_tree(text, registry, file.stem().string())));
  }
  write_corpus_file(corpus, opt.out_path);
  std::cerr << "decoded " << corpus.size() << " utterances -> " << opt.out_path << "\n";
}

struct EvalOpts {
  std::string gold_path, pred_path, hyp_path, report_path, analyze_path;
  std::vector<std::string> pos_filter;
  int max_offset = 5;
};

void run_eval(const EvalOpts& opt) {
  Corpus gold = read_corpus_file(opt.gold_path);
  Corpus pred = read_corpus_file(opt.pred_path);
  std::optional<std::map<std::string, std::vector<std::string>>> hyps;
  if (!opt.hyp_path.empty()) hyps = read_hyps(opt.hyp_path);
  CorpusReport report = corpus_report(gold, pred, hyps ? &*hyps : nullptr);
  std::cout << format_report_table(report);
  if (!opt.report_path.empty()) {
    auto out = open_out(opt.report_path);
    write_report_tsv(report, out);
    std::cerr << "wrote report: " << opt.report_path << "\n";
  }
  if (!opt.analyze_path.empty()) {
    std::set<std::string> filter(opt.pos_filter.begin(), opt.pos_filter.end());
    auto rows = head_accuracy_by_pos(gold, pred, filter, opt.max_offset);
    auto out = open_out(opt.analyze_path);
    write_analysis_csv(rows, out);
    std::cerr << "wrote analysis: " << opt.analyze_path << "\n";
  }
}

struct AnalyzeOpts {
  std::string gold_path, pred_path, out_path;
  std::vector<std::string> pos_filter;
  int max_offset = 5;
};

void run_analyze(const AnalyzeOpts& opt) {
  Corpus gold = read_corpus_file(opt.gold_path);
  Corpus pred = read_corpus_file(opt.pred_path);
  std::set<std::string> filter(opt.pos_filter.begin(), opt.pos_filter.end());
  auto rows = head_accuracy_by_pos(gold, pred, filter, opt.max_offset);
  auto out = open_out(opt.out_path);
  write_analysis_csv(rows, out);
  std::cerr << "wrote analysis (" << rows.size() << " rows): " << opt.out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dependency parsing over noisy transcriptions as labeled sequences"};
  app.require_subcommand(1);

  EncodeOpts enc;
  auto* cmd_encode = app.add_subcommand("encode", "encode a corpus into labeled sequences");
  cmd_encode->add_option("corpus", enc.corpus_path, "input corpus (CoNLL-like TSV)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_encode->add_option("-o,--output", enc.out_path, "output sequence file")->required();
  cmd_encode->add_option("--registry", enc.registry_path,
                         "label registry JSON (loaded if present, else built and written)");
  cmd_encode->callback([&]() { run_encode(enc); });

  DecodeOpts dec;
  auto* cmd_decode = app.add_subcommand("decode", "decode labeled sequences into a corpus");
  cmd_decode->add_option("seqs", dec.seq_path, "sequence file (id<TAB>sequence)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_decode->add_option("--registry", dec.registry_path, "label registry JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_decode->add_option("-o,--output", dec.out_path, "output corpus")->required();
  cmd_decode->callback([&]() { run_decode(dec); });

  OracleOpts orc;
  auto* cmd_oracle = app.add_subcommand("oracle", "rewrite gold trees over hypothesis words");
  cmd_oracle->add_option("gold", orc.gold_path, "gold corpus")->required()->check(
      CLI::ExistingFile);
  cmd_oracle->add_option("hyps", orc.hyp_path, "hypothesis transcripts (id<TAB>text)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_oracle->add_option("-o,--output", orc.out_path, "output oracle corpus")->required();
  cmd_oracle->callback([&]() { run_oracle(orc); });

  SimulateOpts sim;
  auto* cmd_simulate = app.add_subcommand(
      "simulate", "corrupt transcripts, or synthesize emission matrices from sequences");
  cmd_simulate->add_option("input", sim.input_path,
                           "gold corpus (transcript mode) or sequence file (--emissions-dir)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_simulate->add_option("-o,--output", sim.out_path, "output transcript file");
  cmd_simulate->add_option("--noise", sim.noise_path, "noise config JSON")
      ->check(CLI::ExistingFile);
  cmd_simulate->add_option("--p-sub", sim.cfg.p_sub, "substitution probability");
  cmd_simulate->add_option("--p-del", sim.cfg.p_del, "deletion probability");
  cmd_simulate->add_option("--p-ins", sim.cfg.p_ins, "insertion probability");
  cmd_simulate->add_option("--char-corrupt", sim.cfg.char_corrupt,
                           "probability a substitution is a one-edit corruption");
  auto* seed_opt = cmd_simulate->add_option("--seed", sim.seed, "random seed");
  cmd_simulate->add_option("--emissions-dir", sim.emissions_dir,
                           "write one .em matrix per input sequence into this directory");
  cmd_simulate->add_option("--vocab", sim.vocab_path, "existing subword vocab (emissions mode)")
      ->check(CLI::ExistingFile);
  cmd_simulate->add_option("--vocab-out", sim.vocab_out,
                           "where to write the generated vocab (emissions mode)");
  cmd_simulate->add_option("--frames-per-token", sim.frames_per_token,
                           "frames per token in synthesized matrices");
  cmd_simulate->add_option("--temp", sim.temp, "emission noise temperature");
  cmd_simulate->add_option("--marker", sim.marker, "word-boundary marker");
  cmd_simulate->add_option("--blank-id", sim.blank_id, "blank id of --vocab");
  cmd_simulate->callback([&]() {
    sim.seed_set = seed_opt->count() > 0;
    if (!sim.emissions_dir.empty()) {
      run_simulate_emissions(sim);
    } else {
      if (sim.out_path.empty()) {
        throw CLI::ValidationError("simulate", "transcript mode requires -o/--output");
      }
      run_simulate_transcripts(sim);
    }
  });

  CtcOpts ctc;
  auto* cmd_ctc = app.add_subcommand("ctc", "greedy-decode emission matrices into a corpus");
  cmd_ctc->add_option("emissions", ctc.emissions_dir, "directory of .em files")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd_ctc->add_option("--vocab", ctc.vocab_path, "subword vocab (id<TAB>piece)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_ctc->add_option("--registry", ctc.registry_path, "label registry JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_ctc->add_option("-o,--output", ctc.out_path, "output corpus")->required();
  cmd_ctc->add_option("--blank-id", ctc.blank_id, "CTC blank id");
  cmd_ctc->add_option("--marker", ctc.marker, "word-boundary marker");
  cmd_ctc->callback([&]() { run_ctc(ctc); });

  EvalOpts ev;
  auto* cmd_eval = app.add_subcommand("eval", "score a predicted corpus against gold");
  cmd_eval->add_option("gold", ev.gold_path, "gold corpus")->required()->check(
      CLI::ExistingFile);
  cmd_eval->add_option("pred", ev.pred_path, "predicted corpus")->required()->check(
      CLI::ExistingFile);
  cmd_eval->add_option("--hyp", ev.hyp_path, "hypothesis transcripts for WER/CER")
      ->check(CLI::ExistingFile);
  cmd_eval->add_option("-o,--report", ev.report_path, "write the metric row as TSV");
  cmd_eval->add_option("--analyze", ev.analyze_path, "also write head-position CSV here");
  cmd_eval->add_option("--pos", ev.pos_filter, "POS filter for --analyze")->delimiter(',');
  cmd_eval->add_option("--max-offset", ev.max_offset, "offset clamp for --analyze buckets");
  cmd_eval->callback([&]() { run_eval(ev); });

  AnalyzeOpts an;
  auto* cmd_analyze =
      app.add_subcommand("analyze", "head-position accuracy table (CSV: pos,offset,count,accuracy)");
  cmd_analyze->add_option("gold", an.gold_path, "gold corpus")->required()->check(
      CLI::ExistingFile);
  cmd_analyze->add_option("pred", an.pred_path, "predicted corpus")->required()->check(
      CLI::ExistingFile);
  cmd_analyze->add_option("-o,--output", an.out_path, "output CSV")->required();
  cmd_analyze->add_option("--pos", an.pos_filter, "POS filter (default: all tags)")
      ->delimiter(',');
  cmd_analyze->add_option("--max-offset", an.max_offset, "offset clamp for buckets");
  cmd_analyze->callback([&]() { run_analyze(an); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

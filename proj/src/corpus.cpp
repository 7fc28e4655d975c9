#include "comprl/corpus.hpp"

#include "comprl/rng.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace comprl {

void rebuild_vocab(Dataset& ds) {
  ds.source_vocab.clear();
  ds.target_vocab.clear();
  for (const Example& ex : ds.examples) {
    ds.source_vocab.insert(ex.source.begin(), ex.source.end());
    ds.target_vocab.insert(ex.target.begin(), ex.target.end());
  }
}

Dataset load_tsv(const std::filesystem::path& path, Formalism formalism) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path.string());
  Dataset ds;
  ds.formalism = formalism;
  ds.split_name = path.stem().string();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(path.string() + ":" + std::to_string(line_no) + ": line has no tab separator");
    if (line.find('\t', tab + 1) != std::string::npos)
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": line has more than one tab separator");
    Example ex;
    ex.formalism = formalism;
    ex.source = tokenize(line.substr(0, tab));
    ex.target = tokenize(line.substr(tab + 1));
    if (ex.source.empty())
      throw Error(path.string() + ":" + std::to_string(line_no) + ": empty source");
    if (ex.target.empty())
      throw Error(path.string() + ":" + std::to_string(line_no) + ": empty target");
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw Error(path.string() + ": no examples");
  rebuild_vocab(ds);
  return ds;
}

void save_tsv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset file: " + path.string());
  for (const Example& ex : ds.examples) {
    out << join_tokens(ex.source) << '\t' << join_tokens(ex.target) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

CoverageReport validate_split(const Dataset& train, const Dataset& test,
                              const FormalismDescriptor& descriptor) {
  if (train.formalism != test.formalism)
    throw Error(std::string("mismatched formalisms: train is ") + formalism_name(train.formalism) +
                ", test is " + formalism_name(test.formalism));
  PrimitiveSet train_prims;
  for (const Example& ex : train.examples) {
    PrimitiveSet p = extract_primitives(ex.target, descriptor);
    train_prims.insert(p.begin(), p.end());
  }
  CoverageReport report;
  for (const Example& ex : test.examples) {
    for (const Primitive& p : extract_primitives(ex.target, descriptor)) {
      if (!train_prims.contains(p)) report.test_primitives_missing_from_train.insert(p);
    }
  }
  for (const Token& t : test.target_vocab) {
    if (!train.target_vocab.contains(t)) report.target_vocab_oov.insert(t);
  }
  report.ok =
      report.test_primitives_missing_from_train.empty() && report.target_vocab_oov.empty();
  return report;
}

CoverageReport validate_split(const Dataset& train, const Dataset& test) {
  return validate_split(train, test, builtin_descriptor(train.formalism));
}

namespace {

struct Phrase {
  TokenSeq words;    // e.g. {"turn", "left", "twice"}
  TokenSeq actions;  // e.g. {"LTURN", "LTURN"}
  std::string tpl;   // e.g. "_ twice"
};

const std::vector<std::pair<TokenSeq, Token>>& primitives() {
  static const std::vector<std::pair<TokenSeq, Token>> prims = {
      {{"walk"}, "WALK"},          {{"run"}, "RUN"},
      {{"jump"}, "JUMP"},          {{"look"}, "LOOK"},
      {{"turn", "left"}, "LTURN"}, {{"turn", "right"}, "RTURN"},
  };
  return prims;
}

std::vector<Phrase> enumerate_phrases() {
  static const std::vector<std::pair<std::string, int>> modifiers = {
      {"", 1}, {"twice", 2}, {"thrice", 3}};
  std::vector<Phrase> out;
  for (const auto& [words, action] : primitives()) {
    for (const auto& [mod, reps] : modifiers) {
      Phrase p;
      p.words = words;
      p.tpl = "_";
      if (!mod.empty()) {
        p.words.push_back(mod);
        p.tpl += " " + mod;
      }
      p.actions.assign(static_cast<std::size_t>(reps), action);
      out.push_back(std::move(p));
    }
  }
  return out;
}

struct Command {
  TokenSeq source;
  TokenSeq target;
  std::string tpl;
};

// Connective chains are left-associative: "A after B" executes B first.
void extend(const Command& base, const Phrase& next, const std::string& conn, Command& out) {
  out.source = base.source;
  out.source.push_back(conn);
  out.source.insert(out.source.end(), next.words.begin(), next.words.end());
  if (conn == "and") {
    out.target = base.target;
    out.target.insert(out.target.end(), next.actions.begin(), next.actions.end());
  } else {  // after
    out.target = next.actions;
    out.target.insert(out.target.end(), base.target.begin(), base.target.end());
  }
  out.tpl = base.tpl + " " + conn + " " + next.tpl;
}

std::vector<Command> enumerate_commands(int max_depth) {
  if (max_depth < 1) throw Error("mini-SCAN max_depth must be >= 1");
  const std::vector<Phrase> phrases = enumerate_phrases();
  std::vector<Command> layer;
  for (const Phrase& p : phrases) layer.push_back({p.words, p.actions, p.tpl});
  std::vector<Command> all = layer;
  for (int depth = 2; depth <= max_depth; ++depth) {
    std::vector<Command> next_layer;
    next_layer.reserve(layer.size() * phrases.size() * 2);
    for (const Command& base : layer) {
      for (const std::string& conn : {std::string("and"), std::string("after")}) {
        for (const Phrase& p : phrases) {
          Command c;
          extend(base, p, conn, c);
          next_layer.push_back(std::move(c));
        }
      }
    }
    all.insert(all.end(), next_layer.begin(), next_layer.end());
    layer = std::move(next_layer);
  }
  return all;
}

Dataset make_split(std::vector<Command> commands, const std::string& name, std::uint64_t seed,
                   std::uint64_t stream) {
  Rng rng(derive_seed(seed, stream));
  rng.shuffle(commands);
  Dataset ds;
  ds.split_name = name;
  ds.formalism = Formalism::Scan;
  for (Command& c : commands) {
    Example ex;
    ex.formalism = Formalism::Scan;
    ex.source = std::move(c.source);
    ex.target = std::move(c.target);
    ds.examples.push_back(std::move(ex));
  }
  rebuild_vocab(ds);
  return ds;
}

}  // namespace

std::vector<std::string> mini_scan_templates(int max_depth) {
  std::vector<std::string> out;
  for (const Command& c : enumerate_commands(max_depth)) {
    if (std::find(out.begin(), out.end(), c.tpl) == out.end()) out.push_back(c.tpl);
  }
  return out;
}

std::pair<Dataset, Dataset> generate_mini_scan(const MiniScanConfig& config) {
  std::vector<Command> commands = enumerate_commands(config.max_depth);
  std::vector<Command> train_cmds, test_cmds;
  if (config.split_rule == MiniScanConfig::SplitRule::ByTargetLength) {
    if (config.length_threshold < 1) throw Error("length threshold must be >= 1");
    for (Command& c : commands) {
      auto& dst =
          c.target.size() <= static_cast<std::size_t>(config.length_threshold) ? train_cmds
                                                                               : test_cmds;
      dst.push_back(std::move(c));
    }
  } else {
    for (Command& c : commands) {
      auto& dst = c.tpl == config.held_out_template ? test_cmds : train_cmds;
      dst.push_back(std::move(c));
    }
  }
  if (train_cmds.empty()) throw Error("mini-SCAN split produced an empty train set");
  if (test_cmds.empty()) throw Error("mini-SCAN split produced an empty test set");
  Dataset train = make_split(std::move(train_cmds), "train", config.seed, 0);
  Dataset test = make_split(std::move(test_cmds), "test", config.seed, 1);
  return {std::move(train), std::move(test)};
}

}  // namespace comprl

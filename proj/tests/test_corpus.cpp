#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "comprl/corpus.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace comprl;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "comprl_corpus_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Oracle: an independent interpreter for mini-SCAN commands, written against
// the grammar directly rather than via the generator's enumeration.
TokenSeq interpret_command(const TokenSeq& words) {
  static const std::map<std::string, std::string> prims = {
      {"walk", "WALK"}, {"run", "RUN"}, {"jump", "JUMP"}, {"look", "LOOK"}};
  struct Piece {
    TokenSeq actions;
    std::string conn;  // connective before this piece; empty for the first
  };
  std::vector<Piece> pieces;
  std::size_t i = 0;
  std::string pending_conn;
  while (i < words.size()) {
    std::string action;
    if (words[i] == "turn") {
      REQUIRE(i + 1 < words.size());
      action = words[i + 1] == "left" ? "LTURN" : "RTURN";
      i += 2;
    } else {
      auto it = prims.find(words[i]);
      REQUIRE(it != prims.end());
      action = it->second;
      i += 1;
    }
    int reps = 1;
    if (i < words.size() && (words[i] == "twice" || words[i] == "thrice")) {
      reps = words[i] == "twice" ? 2 : 3;
      ++i;
    }
    Piece piece;
    piece.conn = pending_conn;
    piece.actions.assign(static_cast<std::size_t>(reps), action);
    pieces.push_back(std::move(piece));
    if (i < words.size()) {
      REQUIRE((words[i] == "and" || words[i] == "after"));
      pending_conn = words[i];
      ++i;
    }
  }
  TokenSeq result = pieces.front().actions;
  for (std::size_t p = 1; p < pieces.size(); ++p) {
    if (pieces[p].conn == "and") {
      result.insert(result.end(), pieces[p].actions.begin(), pieces[p].actions.end());
    } else {
      TokenSeq swapped = pieces[p].actions;
      swapped.insert(swapped.end(), result.begin(), result.end());
      result = std::move(swapped);
    }
  }
  return result;
}

}  // namespace

TEST_CASE("load_tsv parses one example per line") {
  auto path = temp_file("basic.tsv");
  write_file(path, "jump twice and turn left\tJUMP JUMP LTURN\n");
  Dataset ds = load_tsv(path, Formalism::Scan);
  REQUIRE(ds.size() == 1);
  CHECK(ds.examples[0].source.size() == 5);
  CHECK(ds.examples[0].target.size() == 3);
  CHECK(ds.examples[0].source == TokenSeq{"jump", "twice", "and", "turn", "left"});
  CHECK(ds.examples[0].target == TokenSeq{"JUMP", "JUMP", "LTURN"});
  CHECK(ds.source_vocab == std::set<Token>{"and", "jump", "left", "turn", "twice"});
  CHECK(ds.target_vocab == std::set<Token>{"JUMP", "LTURN"});
}

TEST_CASE("load_tsv normalizes whitespace runs") {
  auto path = temp_file("spaces.tsv");
  write_file(path, "run  and   jump\tRUN  JUMP\n");
  Dataset ds = load_tsv(path, Formalism::Scan);
  CHECK(ds.examples[0].source == TokenSeq{"run", "and", "jump"});
  CHECK(ds.examples[0].target == TokenSeq{"RUN", "JUMP"});
}

TEST_CASE("load_tsv error cases") {
  auto empty = temp_file("empty.tsv");
  write_file(empty, "");
  CHECK_THROWS_WITH_AS(load_tsv(empty, Formalism::Scan), doctest::Contains("no examples"), Error);

  auto no_tab = temp_file("no_tab.tsv");
  write_file(no_tab, "no tab here\n");
  CHECK_THROWS_WITH_AS(load_tsv(no_tab, Formalism::Scan), doctest::Contains(":1:"), Error);

  auto empty_target = temp_file("empty_target.tsv");
  write_file(empty_target, "jump\tJUMP\nrun\t\n");
  CHECK_THROWS_WITH_AS(load_tsv(empty_target, Formalism::Scan),
                       doctest::Contains("empty target"), Error);

  auto two_tabs = temp_file("two_tabs.tsv");
  write_file(two_tabs, "jump\tJUMP\tExtra\n");
  CHECK_THROWS_AS(load_tsv(two_tabs, Formalism::Scan), Error);

  CHECK_THROWS_AS(load_tsv(temp_file("missing.tsv"), Formalism::Scan), Error);
}

TEST_CASE("load then save is the identity on well-formed files") {
  auto path = temp_file("roundtrip.tsv");
  write_file(path, "jump\tJUMP\nrun twice\tRUN RUN\nturn left after walk\tWALK LTURN\n");
  Dataset ds = load_tsv(path, Formalism::Scan);
  auto out = temp_file("roundtrip_out.tsv");
  save_tsv(ds, out);
  CHECK(read_file(out) == read_file(path));
}

TEST_CASE("validate_split reports missing primitives and OOV tokens") {
  auto mk = [](std::vector<std::pair<std::string, std::string>> rows, const char* name) {
    Dataset ds;
    ds.split_name = name;
    ds.formalism = Formalism::Scan;
    for (auto& [src, tgt] : rows) {
      Example ex;
      ex.formalism = Formalism::Scan;
      ex.source = tokenize(src);
      ex.target = tokenize(tgt);
      ds.examples.push_back(ex);
    }
    rebuild_vocab(ds);
    return ds;
  };

  Dataset train = mk({{"jump", "JUMP"}, {"turn left", "LTURN"}, {"run", "RUN"}}, "train");
  Dataset test_ok = mk({{"jump and turn left", "JUMP LTURN"}}, "test");
  CoverageReport ok = validate_split(train, test_ok);
  CHECK(ok.ok);
  CHECK(ok.test_primitives_missing_from_train.empty());
  CHECK(ok.target_vocab_oov.empty());

  Dataset test_bad = mk({{"walk", "WALK"}}, "test");
  CoverageReport bad = validate_split(train, test_bad);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.test_primitives_missing_from_train.size() == 1);
  CHECK(bad.test_primitives_missing_from_train.begin()->name == "WALK");
  CHECK(bad.target_vocab_oov == std::set<Token>{"WALK"});

  CHECK(validate_split(train, train).ok);

  Dataset test_cogs = test_ok;
  test_cogs.formalism = Formalism::Cogs;
  CHECK_THROWS_WITH_AS(validate_split(train, test_cogs), doctest::Contains("mismatched"), Error);
}

TEST_CASE("generate_mini_scan reproduces the grammar on known commands") {
  MiniScanConfig cfg;
  cfg.max_depth = 2;
  cfg.length_threshold = 5;
  cfg.seed = 7;
  auto [train, test] = generate_mini_scan(cfg);
  CHECK(train.size() + test.size() == 666);  // 18 phrases + 18*18*2 pairs

  std::map<std::string, std::string> by_source;
  for (const Dataset* ds : {&train, &test}) {
    for (const Example& ex : ds->examples) {
      by_source[join_tokens(ex.source)] = join_tokens(ex.target);
    }
  }
  CHECK(by_source.at("jump twice after run") == "RUN JUMP JUMP");
  CHECK(by_source.at("run and turn left") == "RUN LTURN");
  CHECK(by_source.at("jump twice and turn left") == "JUMP JUMP LTURN");
  CHECK(by_source.at("look thrice") == "LOOK LOOK LOOK");
}

TEST_CASE("mini-SCAN targets match the independent interpreter") {
  MiniScanConfig cfg;
  cfg.max_depth = 2;
  cfg.length_threshold = 4;
  auto [train, test] = generate_mini_scan(cfg);
  for (const Dataset* ds : {&train, &test}) {
    for (const Example& ex : ds->examples) {
      CHECK(interpret_command(ex.source) == ex.target);
    }
  }
}

TEST_CASE("mini-SCAN split semantics and coverage") {
  MiniScanConfig cfg;
  cfg.max_depth = 2;
  cfg.length_threshold = 5;
  auto [train, test] = generate_mini_scan(cfg);
  for (const Example& ex : train.examples) CHECK(ex.target.size() <= 5);
  for (const Example& ex : test.examples) CHECK(ex.target.size() > 5);
  CHECK(validate_split(train, test).ok);
  CHECK(validate_split(train, train).ok);
}

TEST_CASE("mini-SCAN generation is deterministic") {
  MiniScanConfig cfg;
  cfg.max_depth = 2;
  cfg.length_threshold = 5;
  cfg.seed = 42;
  auto [train_a, test_a] = generate_mini_scan(cfg);
  auto [train_b, test_b] = generate_mini_scan(cfg);
  auto pa = temp_file("det_a.tsv"), pb = temp_file("det_b.tsv");
  save_tsv(train_a, pa);
  save_tsv(train_b, pb);
  CHECK(read_file(pa) == read_file(pb));
  save_tsv(test_a, pa);
  save_tsv(test_b, pb);
  CHECK(read_file(pa) == read_file(pb));

  cfg.seed = 43;  // different seed shuffles order but keeps the same set
  auto [train_c, test_c] = generate_mini_scan(cfg);
  CHECK(train_c.size() == train_a.size());
  save_tsv(train_c, pb);
  CHECK(read_file(pa) != read_file(pb));
}

TEST_CASE("mini-SCAN empty-split errors") {
  MiniScanConfig cfg;
  cfg.max_depth = 2;
  cfg.length_threshold = 100;  // nothing is longer: empty test
  CHECK_THROWS_WITH_AS(generate_mini_scan(cfg), doctest::Contains("empty test"), Error);
}

TEST_CASE("mini-SCAN held-out template split") {
  MiniScanConfig cfg;
  cfg.max_depth = 2;
  cfg.split_rule = MiniScanConfig::SplitRule::ByHeldOutTemplate;
  cfg.held_out_template = "_ twice and _";
  auto [train, test] = generate_mini_scan(cfg);
  CHECK(test.size() == 36);  // 6 primitives x 6 primitives
  for (const Example& ex : test.examples) {
    auto words = ex.source;
    bool has_twice_and = false;
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
      if (words[i] == "twice" && words[i + 1] == "and") has_twice_and = true;
    }
    CHECK(has_twice_and);
  }
  CHECK(validate_split(train, test).ok);

  auto templates = mini_scan_templates(2);
  CHECK(templates.size() == 21);  // 3 + 3*3*2
  cfg.held_out_template = "_ nowhere _";
  CHECK_THROWS_AS(generate_mini_scan(cfg), Error);
}

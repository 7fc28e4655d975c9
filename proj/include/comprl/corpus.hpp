#pragma once

#include "comprl/abstraction.hpp"
#include "comprl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace comprl {

struct Example {
  TokenSeq source;
  TokenSeq target;
  Formalism formalism = Formalism::Scan;
};

struct Dataset {
  std::vector<Example> examples;
  std::set<Token> source_vocab;
  std::set<Token> target_vocab;
  std::string split_name;
  Formalism formalism = Formalism::Scan;

  std::size_t size() const { return examples.size(); }
};

// Recomputes the vocabularies from the examples.
void rebuild_vocab(Dataset& ds);

struct CoverageReport {
  PrimitiveSet test_primitives_missing_from_train;
  std::set<Token> target_vocab_oov;
  bool ok = false;
};

// UTF-8 TSV, one "source<TAB>target" per line, tokens space-separated.
// Runs of whitespace on either side collapse to single tokens.
Dataset load_tsv(const std::filesystem::path& path, Formalism formalism);
void save_tsv(const Dataset& ds, const std::filesystem::path& path);

// Checks the coverage guarantees a compositional split must satisfy: every
// test primitive and every test target-vocabulary token must occur in
// training.
CoverageReport validate_split(const Dataset& train, const Dataset& test,
                              const FormalismDescriptor& descriptor);
CoverageReport validate_split(const Dataset& train, const Dataset& test);

struct MiniScanConfig {
  enum class SplitRule { ByTargetLength, ByHeldOutTemplate };

  int max_depth = 2;  // maximum number of primitive phrases joined by connectives
  SplitRule split_rule = SplitRule::ByTargetLength;
  int length_threshold = 5;        // target length <= threshold goes to train
  std::string held_out_template;   // e.g. "_ twice and _"
  std::uint64_t seed = 0;
};

// Exhaustively enumerates the mini-SCAN command space up to max_depth,
// interprets every command, and splits per the configured rule. The seed
// only shuffles example order; the enumerated set is a pure function of
// max_depth.
std::pair<Dataset, Dataset> generate_mini_scan(const MiniScanConfig& config);

// All template ids valid for by_held_out_template at the given depth,
// e.g. "_", "_ twice", "_ twice and _ thrice".
std::vector<std::string> mini_scan_templates(int max_depth);

}  // namespace comprl

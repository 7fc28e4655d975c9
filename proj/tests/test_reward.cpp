#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "comprl/reward.hpp"
#include "comprl/rng.hpp"

#include <set>

using namespace comprl;

namespace {

// Oracle for the primitive reward: explicit set intersection over classified
// tokens, independent of the production code path.
double prim_oracle(const TokenSeq& pred, const TokenSeq& gold, const FormalismDescriptor& d) {
  auto prims = [&](const TokenSeq& seq) {
    std::set<std::pair<int, Token>> out;
    for (const Token& t : seq) {
      TokenClass c = classify_token(t, d);
      if (c != TokenClass::Structural) out.emplace(static_cast<int>(c), t);
    }
    return out;
  };
  auto g = prims(gold);
  if (g.empty()) return 1.0;
  auto p = prims(pred);
  int both = 0;
  for (const auto& x : g)
    if (p.contains(x)) ++both;
  return static_cast<double>(both) / static_cast<double>(g.size());
}

const FormalismDescriptor& scan_fd() { return builtin_descriptor(Formalism::Scan); }

TokenSeq random_scan_seq(Rng& rng, std::size_t max_len) {
  static const std::vector<Token> actions = {"WALK", "RUN", "JUMP", "LOOK", "LTURN", "RTURN"};
  TokenSeq out;
  std::size_t len = 1 + rng.next_index(max_len);
  for (std::size_t i = 0; i < len; ++i) out.push_back(actions[rng.next_index(actions.size())]);
  return out;
}

}  // namespace

TEST_CASE("binary reward is exact token equality") {
  CHECK(binary_reward({"JUMP", "JUMP", "LTURN"}, {"JUMP", "JUMP", "LTURN"}) == 1.0);
  CHECK(binary_reward({"JUMP", "LTURN", "LTURN"}, {"JUMP", "JUMP", "LTURN"}) == 0.0);
  CHECK(binary_reward({"JUMP", "JUMP", "LTURN", "WALK"}, {"JUMP", "JUMP", "LTURN"}) == 0.0);
  CHECK(binary_reward({}, {}) == 1.0);
}

TEST_CASE("primitive reward matches the set-intersection oracle on worked cases") {
  TokenSeq gold = {"JUMP", "JUMP", "LTURN"};
  CHECK(primitive_reward({"JUMP", "LTURN"}, gold, scan_fd()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(primitive_reward({"JUMP", "JUMP"}, gold, scan_fd()) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(primitive_reward({}, {"JUMP"}, scan_fd()) == 0.0);
  CHECK(primitive_reward({"JUMP", "LTURN"}, gold, scan_fd()) ==
        prim_oracle({"JUMP", "LTURN"}, gold, scan_fd()));
  CHECK(primitive_reward({"JUMP", "JUMP"}, gold, scan_fd()) ==
        prim_oracle({"JUMP", "JUMP"}, gold, scan_fd()));
}

TEST_CASE("primitive reward equals oracle on random pairs") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    TokenSeq pred = random_scan_seq(rng, 8);
    TokenSeq gold = random_scan_seq(rng, 8);
    CHECK(primitive_reward(pred, gold, scan_fd()) ==
          doctest::Approx(prim_oracle(pred, gold, scan_fd())).epsilon(1e-12));
  }
}

TEST_CASE("primitive reward ignores permutation and duplication of the prediction") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    TokenSeq pred = random_scan_seq(rng, 6);
    TokenSeq gold = random_scan_seq(rng, 6);
    double base = primitive_reward(pred, gold, scan_fd());
    TokenSeq mutated = pred;
    mutated.push_back(pred[rng.next_index(pred.size())]);
    rng.shuffle(mutated);
    CHECK(primitive_reward(mutated, gold, scan_fd()) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("composition reward on worked cases") {
  // both skeletons V(x1) V(x1) V(x2)
  CHECK(composition_reward({"JUMP", "JUMP", "LTURN"}, {"RUN", "RUN", "LOOK"}, scan_fd()) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // V(x1) V(x2) vs V(x1) V(x1) V(x2): only position 1 matches
  CHECK(composition_reward({"JUMP", "LTURN"}, {"JUMP", "JUMP", "LTURN"}, scan_fd()) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  TokenSeq same = {"JUMP", "LTURN", "JUMP"};
  CHECK(composition_reward(same, same, scan_fd()) == doctest::Approx(1.0).epsilon(1e-12));
  // extra prediction positions beyond the gold length are ignored
  CHECK(composition_reward({"JUMP", "JUMP", "LTURN", "WALK"}, {"RUN", "RUN", "LOOK"},
                           scan_fd()) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("composition reward is invariant under consistent renaming") {
  CHECK(composition_reward({"WALK", "WALK", "RTURN"}, {"JUMP", "JUMP", "LTURN"}, scan_fd()) ==
        doctest::Approx(1.0).epsilon(1e-12));
  Rng rng(23);
  std::vector<Token> actions = {"WALK", "RUN", "JUMP", "LOOK", "LTURN", "RTURN"};
  for (int trial = 0; trial < 100; ++trial) {
    TokenSeq pred = random_scan_seq(rng, 8);
    TokenSeq gold = random_scan_seq(rng, 8);
    double base = composition_reward(pred, gold, scan_fd());
    std::vector<Token> renamed_pool = actions;
    rng.shuffle(renamed_pool);
    TokenSeq renamed;
    for (const Token& t : pred) {
      std::size_t at = 0;
      while (actions[at] != t) ++at;
      renamed.push_back(renamed_pool[at]);
    }
    CHECK(composition_reward(renamed, gold, scan_fd()) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("composite reward combines components per mode") {
  TokenSeq gold = {"JUMP", "JUMP", "LTURN"};
  RewardWeights w;
  w.lambda1 = 0.1;
  w.lambda2 = 0.2;

  w.include_binary_term = false;
  RewardBreakdown exact = composite_reward(gold, gold, scan_fd(), w, RewardMode::Composite);
  CHECK(exact.total == doctest::Approx(0.3).epsilon(1e-12));

  w.include_binary_term = true;
  exact = composite_reward(gold, gold, scan_fd(), w, RewardMode::Composite);
  CHECK(exact.total == doctest::Approx(1.3).epsilon(1e-12));

  RewardBreakdown binary = composite_reward({"RUN"}, gold, scan_fd(), w, RewardMode::Binary);
  CHECK(binary.total == binary_reward({"RUN"}, gold));
  RewardBreakdown prim = composite_reward({"JUMP"}, gold, scan_fd(), w, RewardMode::PrimOnly);
  CHECK(prim.total == doctest::Approx(0.5).epsilon(1e-12));
  RewardBreakdown comp = composite_reward({"JUMP", "LTURN"}, gold, scan_fd(), w,
                                          RewardMode::CompOnly);
  CHECK(comp.total == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("composite reward validates weights") {
  RewardWeights w;
  w.lambda1 = 0;
  w.lambda2 = 0;
  CHECK_THROWS_AS(composite_reward({"A"}, {"A"}, scan_fd(), w, RewardMode::Composite), Error);
  w.lambda1 = -0.1;
  CHECK_THROWS_AS(composite_reward({"A"}, {"A"}, scan_fd(), w, RewardMode::Binary), Error);
}

TEST_CASE("exact match dominates component rewards") {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    TokenSeq pred = random_scan_seq(rng, 8);
    TokenSeq gold = rng.next_double() < 0.3 ? pred : random_scan_seq(rng, 8);
    double b = binary_reward(pred, gold);
    double p = primitive_reward(pred, gold, scan_fd());
    double c = composition_reward(pred, gold, scan_fd());
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    if (b == 1.0) {
      CHECK(p == 1.0);
      CHECK(c == 1.0);
    }
  }
}

TEST_CASE("empty gold conventions avoid division by zero") {
  CHECK(primitive_reward({"JUMP"}, {}, scan_fd()) == 1.0);
  CHECK(composition_reward({"JUMP"}, {}, scan_fd()) == 1.0);
}

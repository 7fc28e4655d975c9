#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "comprl/eval.hpp"
#include "comprl/rng.hpp"

using namespace comprl;

namespace {

const FormalismDescriptor& scan_fd() { return builtin_descriptor(Formalism::Scan); }

Dataset tiny_dataset() {
  Dataset ds;
  ds.formalism = Formalism::Scan;
  for (auto [src, tgt] : std::vector<std::pair<std::string, std::string>>{
           {"jump", "JUMP"},
           {"run twice", "RUN RUN"},
       }) {
    Example ex;
    ex.formalism = Formalism::Scan;
    ex.source = tokenize(src);
    ex.target = tokenize(tgt);
    ds.examples.push_back(ex);
  }
  rebuild_vocab(ds);
  return ds;
}

}  // namespace

TEST_CASE("evaluate on worked cases") {
  std::vector<TokenSeq> golds = {{"JUMP", "JUMP", "LTURN"}};
  EvalReport perfect = evaluate(golds, golds, scan_fd());
  CHECK(perfect.exact_match == 1.0);
  CHECK(perfect.prim_accuracy == 1.0);
  CHECK(perfect.comp_accuracy == 1.0);

  std::vector<TokenSeq> preds = {{"JUMP", "LTURN"}};
  EvalReport r = evaluate(preds, golds, scan_fd());
  CHECK(r.exact_match == 0.0);
  CHECK(r.prim_accuracy == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.comp_accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.n_examples == 1);

  CHECK_THROWS_AS(evaluate({}, {}, scan_fd()), Error);
  CHECK_THROWS_AS(evaluate(preds, {}, scan_fd()), Error);
}

TEST_CASE("exact match never exceeds component accuracies") {
  Rng rng(8);
  std::vector<Token> actions = {"WALK", "RUN", "JUMP", "LOOK"};
  std::vector<TokenSeq> preds, golds;
  for (int i = 0; i < 200; ++i) {
    TokenSeq gold, pred;
    std::size_t len = 1 + rng.next_index(6);
    for (std::size_t j = 0; j < len; ++j) gold.push_back(actions[rng.next_index(4)]);
    pred = rng.next_double() < 0.4 ? gold : [&] {
      TokenSeq p;
      std::size_t plen = 1 + rng.next_index(6);
      for (std::size_t j = 0; j < plen; ++j) p.push_back(actions[rng.next_index(4)]);
      return p;
    }();
    preds.push_back(pred);
    golds.push_back(gold);
  }
  EvalReport r = evaluate(preds, golds, scan_fd());
  CHECK(r.exact_match <= r.prim_accuracy + 1e-12);
  CHECK(r.exact_match <= r.comp_accuracy + 1e-12);
}

TEST_CASE("pass@k from explicit sample lists") {
  std::vector<TokenSeq> golds = {{"A"}, {"B"}};
  std::vector<std::vector<TokenSeq>> samples = {
      {{"A"}, {"C"}},
      {{"C"}, {"C"}},
  };
  auto rows = pass_at_k_from_samples(samples, golds, {1, 2});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::pair<int, Scalar>{1, 0.5});
  CHECK(rows[1] == std::pair<int, Scalar>{2, 0.5});

  // the gold appearing later flips only the larger k
  samples[1] = {{"C"}, {"B"}};
  rows = pass_at_k_from_samples(samples, golds, {1, 2});
  CHECK(rows[0].second == 0.5);
  CHECK(rows[1].second == 1.0);
}

TEST_CASE("pass@k is monotone and deterministic on a real policy") {
  Dataset ds = tiny_dataset();
  ArchConfig arch;
  arch.embedding_dim = 8;
  arch.hidden_dim = 12;
  arch.source_window = 3;
  arch.context_window = 3;
  arch.max_output_len = 5;
  PolicyParams p = init_policy(Vocab::build(ds), arch, 21);
  auto rows = pass_at_k(p, ds, {1, 3, 10}, 0.6, 7);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].second <= rows[1].second);
  CHECK(rows[1].second <= rows[2].second);
  auto rows2 = pass_at_k(p, ds, {1, 3, 10}, 0.6, 7);
  CHECK(rows == rows2);
  // shared samples: pass@1 is identical whether or not larger k is requested
  CHECK(pass_at_k(p, ds, 1, 0.6, 7) == rows[0].second);

  // a deterministic policy: pass@1 == pass@10
  p.values[p.layout.b2 + p.vocab.eos()] = 60.0;
  auto det = pass_at_k(p, ds, {1, 10}, 0.6, 3);
  CHECK(det[0].second == det[1].second);
}

TEST_CASE("trigram table on worked cases") {
  TrigramTable t = build_trigram_table({{"A", "B", "C", "D"}});
  CHECK(t.total == 2);
  CHECK(t.lookup({"A", "B", "C"}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.lookup({"B", "C", "D"}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.lookup({"X", "Y", "Z"}) == 0.0);

  // short targets contribute nothing
  TrigramTable empty = build_trigram_table({{"A", "B"}, {"C"}});
  CHECK(empty.total == 0);
  CHECK(empty.freq.empty());

  TrigramTable big = build_trigram_table({{"A", "B", "C", "D"}, {"A", "B", "C"}});
  double sum = 0;
  for (const auto& [tri, f] : big.freq) sum += f;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(big.lookup({"A", "B", "C"}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("copying score on worked cases") {
  TrigramTable table = build_trigram_table({{"A", "B", "C", "D"}});
  // pred trigrams {ABC, BCE}; gold "A B X" has no trigram overlap
  CopyingScore s = copying_score({{"A", "B", "C", "E"}}, {{"A", "B", "X"}}, table);
  CHECK(s.n_scored == 1);
  CHECK(s.n_skipped == 0);
  CHECK(s.mean_freq == doctest::Approx(0.25).epsilon(1e-12));

  // every prediction trigram appears in the gold: skipped
  CopyingScore skipped = copying_score({{"A", "B", "C"}}, {{"A", "B", "C", "Z"}}, table);
  CHECK(skipped.n_scored == 0);
  CHECK(skipped.n_skipped == 1);
  CHECK(skipped.mean_freq == 0.0);

  // unseen trigrams score zero
  CopyingScore zero = copying_score({{"X", "Y", "Z"}}, {{"Q"}}, table);
  CHECK(zero.mean_freq == 0.0);
  CHECK(zero.n_scored == 1);

  CHECK_THROWS_WITH_AS(copying_score({{"A"}}, {{"A"}}, table), doctest::Contains("equals"),
                       Error);
}

TEST_CASE("copying score is order invariant") {
  TrigramTable table = build_trigram_table({{"A", "B", "C", "D", "E"}, {"B", "C", "D"}});
  std::vector<TokenSeq> preds = {{"A", "B", "C", "E"}, {"B", "C", "D", "A"}, {"X", "Y", "Z"}};
  std::vector<TokenSeq> golds = {{"A", "B"}, {"C", "D"}, {"E", "F"}};
  CopyingScore fwd = copying_score(preds, golds, table);
  std::vector<TokenSeq> rpreds(preds.rbegin(), preds.rend());
  std::vector<TokenSeq> rgolds(golds.rbegin(), golds.rend());
  CopyingScore rev = copying_score(rpreds, rgolds, table);
  CHECK(fwd.mean_freq == doctest::Approx(rev.mean_freq).epsilon(1e-12));
  CHECK(fwd.n_scored == rev.n_scored);
  CHECK(fwd.n_skipped == rev.n_skipped);
}

TEST_CASE("length buckets partition gold lengths") {
  auto gold_of_len = [](int n) {
    TokenSeq t;
    for (int i = 0; i < n; ++i) t.push_back("A");
    return t;
  };
  std::vector<TokenSeq> golds = {gold_of_len(5),  gold_of_len(24), gold_of_len(25),
                                 gold_of_len(26), gold_of_len(27), gold_of_len(30),
                                 gold_of_len(31), gold_of_len(35), gold_of_len(36),
                                 gold_of_len(40)};
  std::vector<TokenSeq> preds = golds;
  preds[2] = gold_of_len(2);  // one miss in 24-26
  LengthBuckets lb = length_bucket_report(preds, golds);
  REQUIRE(lb.buckets.size() == 5);
  CHECK(lb.buckets[0].label == "<24");
  CHECK(lb.buckets[0].count == 1);
  CHECK(lb.buckets[1].count == 3);  // 24, 25, 26
  CHECK(lb.buckets[1].correct == 2);
  CHECK(lb.buckets[1].accuracy() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(lb.buckets[2].count == 2);  // 27, 30
  CHECK(lb.buckets[3].count == 2);  // 31, 35
  CHECK(lb.buckets[4].count == 2);  // 36, 40
  int total = 0;
  for (const LengthBucket& b : lb.buckets) {
    total += b.count;
    if (&b != &lb.buckets[1]) CHECK(b.accuracy() == 1.0);
  }
  CHECK(total == 10);
}

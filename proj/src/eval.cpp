#include "comprl/eval.hpp"

#include "comprl/reward.hpp"

#include <algorithm>
#include <set>

namespace comprl {

EvalReport evaluate(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& golds,
                    const FormalismDescriptor& descriptor) {
  if (preds.size() != golds.size()) throw Error("evaluate: misaligned prediction/gold lists");
  if (preds.empty()) throw Error("evaluate: empty prediction list");
  EvalReport report;
  report.n_examples = static_cast<int>(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    report.exact_match += binary_reward(preds[i], golds[i]);
    report.prim_accuracy += primitive_reward(preds[i], golds[i], descriptor);
    report.comp_accuracy += composition_reward(preds[i], golds[i], descriptor);
  }
  report.exact_match /= report.n_examples;
  report.prim_accuracy /= report.n_examples;
  report.comp_accuracy /= report.n_examples;
  return report;
}

std::vector<std::pair<int, Scalar>> pass_at_k_from_samples(
    const std::vector<std::vector<TokenSeq>>& samples, const std::vector<TokenSeq>& golds,
    const std::vector<int>& ks) {
  if (samples.size() != golds.size()) throw Error("pass@k: misaligned sample/gold lists");
  if (samples.empty()) throw Error("pass@k: empty sample list");
  if (ks.empty()) throw Error("pass@k: no k values requested");
  for (int k : ks)
    if (k < 1) throw Error("pass@k: k must be >= 1");

  // first_hit[i]: 1-based index of the earliest exact match, or 0 for none
  std::vector<std::size_t> first_hit(samples.size(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < samples[i].size(); ++j) {
      if (samples[i][j] == golds[i]) {
        first_hit[i] = j + 1;
        break;
      }
    }
  }
  std::vector<std::pair<int, Scalar>> out;
  std::vector<int> sorted_ks = ks;
  std::sort(sorted_ks.begin(), sorted_ks.end());
  sorted_ks.erase(std::unique(sorted_ks.begin(), sorted_ks.end()), sorted_ks.end());
  for (int k : sorted_ks) {
    std::size_t hits = 0;
    for (std::size_t h : first_hit) {
      if (h >= 1 && h <= static_cast<std::size_t>(k)) ++hits;
    }
    out.emplace_back(k, static_cast<Scalar>(hits) / static_cast<Scalar>(samples.size()));
  }
  return out;
}

std::vector<std::pair<int, Scalar>> pass_at_k(const PolicyParams& params, const Dataset& ds,
                                              const std::vector<int>& ks, Scalar temperature,
                                              std::uint64_t seed) {
  if (ds.examples.empty()) throw Error("pass@k: empty dataset");
  int k_max = 0;
  for (int k : ks) k_max = std::max(k_max, k);
  if (k_max < 1) throw Error("pass@k: k must be >= 1");
  const std::uint64_t base = mix64(seed ^ 0x7061737340ULL);
  std::vector<std::vector<TokenSeq>> samples(ds.size());
  std::vector<TokenSeq> golds;
  golds.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Example& ex = ds.examples[i];
    golds.push_back(ex.target);
    samples[i].reserve(static_cast<std::size_t>(k_max));
    for (int j = 0; j < k_max; ++j) {
      SampleResult s = sample(params, ex.source, temperature,
                              derive_seed(base, i, static_cast<std::uint64_t>(j)),
                              params.arch.max_output_len);
      samples[i].push_back(sample_body(s));
    }
  }
  return pass_at_k_from_samples(samples, golds, ks);
}

Scalar pass_at_k(const PolicyParams& params, const Dataset& ds, int k, Scalar temperature,
                 std::uint64_t seed) {
  return pass_at_k(params, ds, std::vector<int>{k}, temperature, seed).front().second;
}

Scalar TrigramTable::lookup(const Trigram& t) const {
  auto it = freq.find(t);
  return it == freq.end() ? 0.0 : it->second;
}

namespace {

std::vector<Trigram> trigrams_of(const TokenSeq& seq) {
  std::vector<Trigram> out;
  if (seq.size() < 3) return out;
  out.reserve(seq.size() - 2);
  for (std::size_t i = 0; i + 2 < seq.size(); ++i) {
    out.push_back({seq[i], seq[i + 1], seq[i + 2]});
  }
  return out;
}

}  // namespace

TrigramTable build_trigram_table(const std::vector<TokenSeq>& train_targets) {
  std::map<Trigram, std::size_t> counts;
  std::size_t total = 0;
  for (const TokenSeq& target : train_targets) {
    for (const Trigram& t : trigrams_of(target)) {
      ++counts[t];
      ++total;
    }
  }
  TrigramTable table;
  table.total = total;
  for (const auto& [t, c] : counts) {
    table.freq[t] = static_cast<Scalar>(c) / static_cast<Scalar>(total);
  }
  return table;
}

CopyingScore copying_score(const std::vector<TokenSeq>& incorrect_preds,
                           const std::vector<TokenSeq>& matching_golds,
                           const TrigramTable& table) {
  if (incorrect_preds.size() != matching_golds.size())
    throw Error("copying_score: misaligned prediction/gold lists");
  CopyingScore score;
  Scalar sum = 0;
  for (std::size_t i = 0; i < incorrect_preds.size(); ++i) {
    if (incorrect_preds[i] == matching_golds[i])
      throw Error("copying_score: prediction " + std::to_string(i + 1) + " equals its gold");
    std::vector<Trigram> gold_tris = trigrams_of(matching_golds[i]);
    std::set<Trigram> gold_set(gold_tris.begin(), gold_tris.end());
    Scalar pred_sum = 0;
    int kept = 0;
    for (const Trigram& t : trigrams_of(incorrect_preds[i])) {
      if (gold_set.contains(t)) continue;  // valid pattern, not copying evidence
      pred_sum += table.lookup(t);
      ++kept;
    }
    if (kept == 0) {
      ++score.n_skipped;
      continue;
    }
    sum += pred_sum / static_cast<Scalar>(kept);
    ++score.n_scored;
  }
  score.mean_freq = score.n_scored > 0 ? sum / static_cast<Scalar>(score.n_scored) : 0.0;
  return score;
}

LengthBuckets length_bucket_report(const std::vector<TokenSeq>& preds,
                                   const std::vector<TokenSeq>& golds) {
  if (preds.size() != golds.size())
    throw Error("length buckets: misaligned prediction/gold lists");
  LengthBuckets out;
  out.buckets = {
      {"<24", 0, 23, 0, 0},   {"24-26", 24, 26, 0, 0}, {"27-30", 27, 30, 0, 0},
      {"31-35", 31, 35, 0, 0}, {"36+", 36, -1, 0, 0},
  };
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const int len = static_cast<int>(golds[i].size());
    for (LengthBucket& b : out.buckets) {
      if (len >= b.lo && (b.hi < 0 || len <= b.hi)) {
        ++b.count;
        if (preds[i] == golds[i]) ++b.correct;
        break;
      }
    }
  }
  return out;
}

}  // namespace comprl

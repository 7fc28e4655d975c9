#pragma once

#include "comprl/abstraction.hpp"
#include "comprl/corpus.hpp"
#include "comprl/policy.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace comprl {

struct EvalReport {
  Scalar exact_match = 0;
  Scalar prim_accuracy = 0;
  Scalar comp_accuracy = 0;
  int n_examples = 0;
};

// Mean binary / primitive / composition reward over aligned predictions.
EvalReport evaluate(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& golds,
                    const FormalismDescriptor& descriptor);

// Fraction of examples whose first j <= k samples contain an exact match.
// All requested k values share one sample set of max(k) per example, so the
// curve is monotone by construction.
std::vector<std::pair<int, Scalar>> pass_at_k_from_samples(
    const std::vector<std::vector<TokenSeq>>& samples, const std::vector<TokenSeq>& golds,
    const std::vector<int>& ks);

std::vector<std::pair<int, Scalar>> pass_at_k(const PolicyParams& params, const Dataset& ds,
                                              const std::vector<int>& ks, Scalar temperature,
                                              std::uint64_t seed);
Scalar pass_at_k(const PolicyParams& params, const Dataset& ds, int k, Scalar temperature,
                 std::uint64_t seed);

using Trigram = std::array<Token, 3>;

struct TrigramTable {
  std::map<Trigram, Scalar> freq;  // normalized; sums to 1 over the table
  std::size_t total = 0;           // raw trigram count

  Scalar lookup(const Trigram& t) const;  // 0 for unseen trigrams
};

TrigramTable build_trigram_table(const std::vector<TokenSeq>& train_targets);

struct CopyingScore {
  Scalar mean_freq = 0;
  int n_scored = 0;
  int n_skipped = 0;  // predictions whose trigrams all appear in their gold
};

// Mean training-trigram frequency of incorrect predictions, excluding
// trigrams that occur anywhere in the paired gold output. Every listed
// prediction must differ from its gold.
CopyingScore copying_score(const std::vector<TokenSeq>& incorrect_preds,
                           const std::vector<TokenSeq>& matching_golds,
                           const TrigramTable& table);

struct LengthBucket {
  std::string label;
  int lo = 0;
  int hi = 0;  // inclusive; hi < 0 is open-ended
  int count = 0;
  int correct = 0;

  Scalar accuracy() const { return count > 0 ? static_cast<Scalar>(correct) / count : 0.0; }
};

struct LengthBuckets {
  std::vector<LengthBucket> buckets;  // <24 (underflow), 24-26, 27-30, 31-35, 36+
};

// Exact-match accuracy bucketed by gold target length.
LengthBuckets length_bucket_report(const std::vector<TokenSeq>& preds,
                                   const std::vector<TokenSeq>& golds);

}  // namespace comprl

#pragma once

#include "comprl/abstraction.hpp"
#include "comprl/types.hpp"

namespace comprl {

enum class RewardMode { Binary, Composite, PrimOnly, CompOnly };

const char* reward_mode_name(RewardMode m);
RewardMode reward_mode_from_name(const std::string& name);

struct RewardWeights {
  Scalar lambda1 = 0.1;  // primitive weight
  Scalar lambda2 = 0.2;  // composition weight
  // Adds the exact-match term on top of the weighted sum so a permuted but
  // wrong output can never tie an exactly correct one. The literal weighted
  // sum stays available by turning this off.
  bool include_binary_term = true;
};

struct RewardBreakdown {
  Scalar binary = 0;  // 0 or 1
  Scalar prim = 0;    // in [0, 1]
  Scalar comp = 0;    // in [0, 1]
  Scalar total = 0;
};

// 1 iff the sequences are identical token for token.
Scalar binary_reward(const TokenSeq& pred, const TokenSeq& gold);

// |P_pred ∩ P_gold| / |P_gold|; 1 when the gold primitive set is empty.
Scalar primitive_reward(const TokenSeq& pred, const TokenSeq& gold,
                        const FormalismDescriptor& descriptor);

// Position-wise skeleton agreement over the gold skeleton length; 1 when the
// gold skeleton is empty. Prediction positions beyond the gold length are
// ignored; missing positions count as mismatches.
Scalar composition_reward(const TokenSeq& pred, const TokenSeq& gold,
                          const FormalismDescriptor& descriptor);

RewardBreakdown composite_reward(const TokenSeq& pred, const TokenSeq& gold,
                                 const FormalismDescriptor& descriptor,
                                 const RewardWeights& weights, RewardMode mode);

}  // namespace comprl

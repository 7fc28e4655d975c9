#include "comprl/reward.hpp"

#include <algorithm>

namespace comprl {

const char* reward_mode_name(RewardMode m) {
  switch (m) {
    case RewardMode::Binary:
      return "binary";
    case RewardMode::Composite:
      return "composite";
    case RewardMode::PrimOnly:
      return "prim-only";
    case RewardMode::CompOnly:
      return "comp-only";
  }
  return "binary";
}

RewardMode reward_mode_from_name(const std::string& name) {
  if (name == "binary") return RewardMode::Binary;
  if (name == "composite") return RewardMode::Composite;
  if (name == "prim-only") return RewardMode::PrimOnly;
  if (name == "comp-only") return RewardMode::CompOnly;
  throw Error("unknown reward mode '" + name + "' (expected binary|composite|prim-only|comp-only)");
}

Scalar binary_reward(const TokenSeq& pred, const TokenSeq& gold) {
  return pred == gold ? 1.0 : 0.0;
}

Scalar primitive_reward(const TokenSeq& pred, const TokenSeq& gold,
                        const FormalismDescriptor& descriptor) {
  PrimitiveSet gold_prims = extract_primitives(gold, descriptor);
  if (gold_prims.empty()) return 1.0;
  PrimitiveSet pred_prims = extract_primitives(pred, descriptor);
  std::size_t covered = 0;
  for (const Primitive& p : gold_prims) {
    if (pred_prims.contains(p)) ++covered;
  }
  return static_cast<Scalar>(covered) / static_cast<Scalar>(gold_prims.size());
}

Scalar composition_reward(const TokenSeq& pred, const TokenSeq& gold,
                          const FormalismDescriptor& descriptor) {
  Skeleton gold_sk = extract_skeleton(gold, descriptor);
  if (gold_sk.tokens.empty()) return 1.0;
  Skeleton pred_sk = extract_skeleton(pred, descriptor);
  std::size_t matches = 0;
  std::size_t upto = std::min(gold_sk.tokens.size(), pred_sk.tokens.size());
  for (std::size_t i = 0; i < upto; ++i) {
    if (pred_sk.tokens[i] == gold_sk.tokens[i]) ++matches;
  }
  return static_cast<Scalar>(matches) / static_cast<Scalar>(gold_sk.tokens.size());
}

RewardBreakdown composite_reward(const TokenSeq& pred, const TokenSeq& gold,
                                 const FormalismDescriptor& descriptor,
                                 const RewardWeights& weights, RewardMode mode) {
  if (mode == RewardMode::Composite && weights.lambda1 == 0 && weights.lambda2 == 0)
    throw Error("composite reward needs a nonzero lambda1 or lambda2");
  if (weights.lambda1 < 0 || weights.lambda2 < 0)
    throw Error("reward weights must be non-negative");
  RewardBreakdown r;
  r.binary = binary_reward(pred, gold);
  r.prim = primitive_reward(pred, gold, descriptor);
  r.comp = composition_reward(pred, gold, descriptor);
  switch (mode) {
    case RewardMode::Binary:
      r.total = r.binary;
      break;
    case RewardMode::PrimOnly:
      r.total = r.prim;
      break;
    case RewardMode::CompOnly:
      r.total = r.comp;
      break;
    case RewardMode::Composite:
      r.total = weights.lambda1 * r.prim + weights.lambda2 * r.comp;
      if (weights.include_binary_term) r.total += r.binary;
      break;
  }
  return r;
}

}  // namespace comprl

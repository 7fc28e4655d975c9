#pragma once

#include "comprl/corpus.hpp"
#include "comprl/policy.hpp"
#include "comprl/reward.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace comprl {

struct GrpoConfig {
  int group_size = 8;
  Scalar temperature = 0.6;
  int batch_inputs = 8;
  Scalar learning_rate = 1e-2;  // the 7B-scale 1e-6 remains selectable
  Scalar clip_epsilon = 0.2;
  Scalar kl_beta = 0.01;
  int inner_epochs = 1;
  Scalar std_floor = 1e-8;
  RewardMode reward_mode = RewardMode::Binary;
  RewardWeights weights;
  std::uint64_t seed = 0;
  int steps = 200;
  int checkpoint_interval = 0;  // 0: no intermediate checkpoints
  int max_output_len = 0;       // 0: use the architecture default
};

void validate_config(const GrpoConfig& config);

// The K candidates sampled for one input, scored against its gold target.
struct RolloutGroup {
  TokenSeq input;
  TokenSeq gold;
  std::vector<SampleResult> samples;
  std::vector<RewardBreakdown> rewards;
  VecX advantages;
  bool degenerate = false;
};

struct StepStats {
  Scalar mean_reward = 0;
  Scalar fraction_exact_match = 0;
  Scalar mean_kl = 0;
  Scalar mean_clip_fraction = 0;
  Scalar grad_norm = 0;
};

struct AdvantageResult {
  VecX advantages;
  bool degenerate = false;
};

// (r_i - mean) / population std; all zero (degenerate) when the std falls
// below std_floor. Requires K >= 2.
AdvantageResult compute_advantages(const VecX& rewards, Scalar std_floor);

// min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv)
Scalar clipped_surrogate(Scalar ratio, Scalar advantage, Scalar epsilon);

// Per-token estimator exp(ref - cur) - (ref - cur) - 1 averaged over tokens;
// non-negative, zero iff the log-probs agree.
Scalar kl_term(const VecX& current_logprobs, const VecX& reference_logprobs);

RolloutGroup make_rollout_group(const PolicyParams& params, const Example& example,
                                const FormalismDescriptor& descriptor, const GrpoConfig& config,
                                std::uint64_t group_seed);

// The full surrogate-plus-KL objective over a fixed batch of rollout groups.
// A function of the current parameters only; behavior log-probs, advantages,
// and reference log-probs are frozen at construction.
class GrpoObjective final : public ScalarObjective {
 public:
  GrpoObjective(const std::vector<RolloutGroup>& groups, const PolicyParams& ref,
                const GrpoConfig& config);
  Scalar value(const PolicyParams& params) const override;
  void add_gradient(const PolicyParams& params, VecX& grad) const override;
  // One pass computing the objective, optionally its gradient and the
  // per-batch telemetry at the given parameters.
  Scalar evaluate(const PolicyParams& params, VecX* grad, StepStats* stats) const;

 private:
  const std::vector<RolloutGroup>& groups_;
  std::vector<std::vector<VecX>> ref_logprobs_;
  Scalar clip_epsilon_;
  Scalar kl_beta_;
};

// One gradient-ascent update on the objective; stats are measured at the
// pre-update parameters.
std::pair<PolicyParams, StepStats> grpo_step(const PolicyParams& params, const PolicyParams& ref,
                                             const std::vector<RolloutGroup>& groups,
                                             const GrpoConfig& config);

struct GrpoResult {
  PolicyParams params;
  std::vector<StepStats> trace;  // one entry per outer step
};

using CheckpointSink = std::function<void(int step, const PolicyParams& params)>;
using RolloutSink = std::function<void(int step, const RolloutGroup& group)>;

GrpoResult train_grpo(const Dataset& ds, const PolicyParams& init, const PolicyParams& ref,
                      const FormalismDescriptor& descriptor, const GrpoConfig& config,
                      const CheckpointSink& checkpoint_sink = {},
                      const RolloutSink& rollout_sink = {});

}  // namespace comprl

#include "comprl/grpo.hpp"

#include "comprl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace comprl {

void validate_config(const GrpoConfig& config) {
  if (config.group_size < 2) throw Error("group size K must be >= 2");
  if (config.temperature <= 0) throw Error("rollout temperature must be positive");
  if (config.batch_inputs < 1) throw Error("batch_inputs must be >= 1");
  if (config.learning_rate <= 0) throw Error("learning rate must be positive");
  if (config.clip_epsilon <= 0) throw Error("clip epsilon must be positive");
  if (config.kl_beta < 0) throw Error("kl beta must be non-negative");
  if (config.inner_epochs < 1) throw Error("inner_epochs must be >= 1");
  if (config.std_floor <= 0) throw Error("std_floor must be positive");
  if (config.steps < 1) throw Error("steps must be >= 1");
  if (config.reward_mode == RewardMode::Composite && config.weights.lambda1 == 0 &&
      config.weights.lambda2 == 0)
    throw Error("composite reward needs a nonzero lambda1 or lambda2");
}

AdvantageResult compute_advantages(const VecX& rewards, Scalar std_floor) {
  const Eigen::Index k = rewards.size();
  if (k < 2) throw Error("advantage normalization needs a group of K >= 2 rewards");
  if (std_floor <= 0) throw Error("std_floor must be positive");
  const Scalar mean = rewards.mean();
  const Scalar var = (rewards.array() - mean).square().mean();  // population convention
  const Scalar std = std::sqrt(var);
  AdvantageResult out;
  if (std < std_floor) {
    out.advantages = VecX::Zero(k);
    out.degenerate = true;
    return out;
  }
  out.advantages = (rewards.array() - mean) / std;
  out.degenerate = false;
  return out;
}

Scalar clipped_surrogate(Scalar ratio, Scalar advantage, Scalar epsilon) {
  const Scalar clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

Scalar kl_term(const VecX& current_logprobs, const VecX& reference_logprobs) {
  if (current_logprobs.size() != reference_logprobs.size())
    throw Error("kl_term: misaligned log-prob sequences");
  if (current_logprobs.size() == 0) return 0;
  const auto rho = (reference_logprobs - current_logprobs).array();
  return (rho.exp() - rho - 1.0).mean();
}

RolloutGroup make_rollout_group(const PolicyParams& params, const Example& example,
                                const FormalismDescriptor& descriptor, const GrpoConfig& config,
                                std::uint64_t group_seed) {
  validate_config(config);
  const int max_len = config.max_output_len > 0 ? config.max_output_len
                                                : params.arch.max_output_len;
  RolloutGroup group;
  group.input = example.source;
  group.gold = example.target;
  VecX rewards(config.group_size);
  for (int i = 0; i < config.group_size; ++i) {
    SampleResult s = sample(params, example.source, config.temperature,
                            derive_seed(group_seed, static_cast<std::uint64_t>(i)), max_len);
    RewardBreakdown r = composite_reward(sample_body(s), example.target, descriptor,
                                         config.weights, config.reward_mode);
    rewards[i] = r.total;
    group.samples.push_back(std::move(s));
    group.rewards.push_back(r);
  }
  AdvantageResult adv = compute_advantages(rewards, config.std_floor);
  group.advantages = std::move(adv.advantages);
  group.degenerate = adv.degenerate;
  return group;
}

GrpoObjective::GrpoObjective(const std::vector<RolloutGroup>& groups, const PolicyParams& ref,
                             const GrpoConfig& config)
    : groups_(groups), clip_epsilon_(config.clip_epsilon), kl_beta_(config.kl_beta) {
  if (groups_.empty()) throw Error("GRPO objective over an empty batch");
  ref_logprobs_.reserve(groups_.size());
  for (const RolloutGroup& g : groups_) {
    std::vector<VecX> per_sample;
    per_sample.reserve(g.samples.size());
    for (const SampleResult& s : g.samples) {
      per_sample.push_back(log_probs(ref, g.input, s.tokens));
    }
    ref_logprobs_.push_back(std::move(per_sample));
  }
}

Scalar GrpoObjective::value(const PolicyParams& params) const {
  return evaluate(params, nullptr, nullptr);
}

void GrpoObjective::add_gradient(const PolicyParams& params, VecX& grad) const {
  evaluate(params, &grad, nullptr);
}

Scalar GrpoObjective::evaluate(const PolicyParams& params, VecX* grad, StepStats* stats) const {
  const Scalar inv_groups = 1.0 / static_cast<Scalar>(groups_.size());
  Scalar objective = 0;
  Scalar reward_sum = 0, exact_sum = 0, kl_sum = 0;
  long samples_total = 0, tokens_total = 0, clipped_total = 0;

  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const RolloutGroup& g = groups_[gi];
    const Scalar inv_k = 1.0 / static_cast<Scalar>(g.samples.size());
    for (std::size_t i = 0; i < g.samples.size(); ++i) {
      const SampleResult& s = g.samples[i];
      const Scalar adv = g.advantages[static_cast<Eigen::Index>(i)];
      const VecX current = log_probs(params, g.input, s.tokens);
      const VecX& behavior = s.logprobs;
      const VecX& reference = ref_logprobs_[gi][i];
      const Eigen::Index len = current.size();
      const Scalar coef = inv_groups * inv_k / static_cast<Scalar>(len);

      VecX weights = grad ? VecX(len) : VecX();
      Scalar kl_seq = 0;
      for (Eigen::Index t = 0; t < len; ++t) {
        const Scalar ratio = std::exp(current[t] - behavior[t]);
        const Scalar surrogate = clipped_surrogate(ratio, adv, clip_epsilon_);
        const bool unclipped_active =
            adv >= 0 ? ratio <= 1.0 + clip_epsilon_ : ratio >= 1.0 - clip_epsilon_;
        const bool clipped = (adv > 0 && ratio > 1.0 + clip_epsilon_) ||
                             (adv < 0 && ratio < 1.0 - clip_epsilon_);
        const Scalar rho = reference[t] - current[t];
        const Scalar kl_tok = std::exp(rho) - rho - 1.0;
        objective += coef * (surrogate - kl_beta_ * kl_tok);
        kl_seq += kl_tok;
        if (clipped) ++clipped_total;
        if (grad) {
          const Scalar d_surr = unclipped_active ? ratio * adv : 0.0;
          weights[t] = coef * (d_surr + kl_beta_ * (std::exp(rho) - 1.0));
        }
      }
      if (grad) accumulate_log_prob_grad(params, g.input, s.tokens, weights, *grad);

      kl_sum += inv_groups * inv_k * kl_seq / static_cast<Scalar>(len);
      reward_sum += g.rewards[i].total;
      exact_sum += g.rewards[i].binary;
      ++samples_total;
      tokens_total += len;
    }
  }
  if (stats) {
    stats->mean_reward = reward_sum / static_cast<Scalar>(samples_total);
    stats->fraction_exact_match = exact_sum / static_cast<Scalar>(samples_total);
    stats->mean_kl = kl_sum;
    stats->mean_clip_fraction =
        tokens_total > 0 ? static_cast<Scalar>(clipped_total) / static_cast<Scalar>(tokens_total)
                         : 0.0;
  }
  return objective;
}

std::pair<PolicyParams, StepStats> grpo_step(const PolicyParams& params, const PolicyParams& ref,
                                             const std::vector<RolloutGroup>& groups,
                                             const GrpoConfig& config) {
  validate_config(config);
  GrpoObjective objective(groups, ref, config);
  VecX grad = VecX::Zero(params.layout.total);
  StepStats stats;
  objective.evaluate(params, &grad, &stats);
  if (!grad.allFinite()) throw Error("non-finite GRPO gradient");
  stats.grad_norm = grad.norm();
  PolicyParams next = params;
  next.values += config.learning_rate * grad;  // ascent on the surrogate
  return {std::move(next), stats};
}

GrpoResult train_grpo(const Dataset& ds, const PolicyParams& init, const PolicyParams& ref,
                      const FormalismDescriptor& descriptor, const GrpoConfig& config,
                      const CheckpointSink& checkpoint_sink, const RolloutSink& rollout_sink) {
  validate_config(config);
  if (ds.examples.empty()) throw Error("GRPO over an empty dataset");
  for (const Token& t : ds.source_vocab) (void)init.vocab.id(t);
  for (const Token& t : ds.target_vocab) (void)init.vocab.id(t);

  GrpoResult result{init, {}};
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng order_rng(derive_seed(config.seed, 0x6f726472));
  std::size_t cursor = order.size();  // forces an initial shuffle

  const std::uint64_t rollout_base = mix64(config.seed ^ 0x726f6c6cULL);
  for (int step = 0; step < config.steps; ++step) {
    std::vector<RolloutGroup> groups;
    groups.reserve(static_cast<std::size_t>(config.batch_inputs));
    for (int slot = 0; slot < config.batch_inputs; ++slot) {
      if (cursor == order.size()) {
        order_rng.shuffle(order);
        cursor = 0;
      }
      const Example& ex = ds.examples[order[cursor++]];
      std::uint64_t group_seed = derive_seed(rollout_base, static_cast<std::uint64_t>(step),
                                             static_cast<std::uint64_t>(slot));
      groups.push_back(make_rollout_group(result.params, ex, descriptor, config, group_seed));
      if (rollout_sink) rollout_sink(step, groups.back());
    }
    StepStats first_stats;
    for (int inner = 0; inner < config.inner_epochs; ++inner) {
      auto [next, stats] = grpo_step(result.params, ref, groups, config);
      result.params = std::move(next);
      if (inner == 0) first_stats = stats;
    }
    result.trace.push_back(first_stats);
    if (checkpoint_sink && config.checkpoint_interval > 0 &&
        (step + 1) % config.checkpoint_interval == 0) {
      checkpoint_sink(step + 1, result.params);
    }
  }
  return result;
}

}  // namespace comprl

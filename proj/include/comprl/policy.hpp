#pragma once

#include "comprl/corpus.hpp"
#include "comprl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <unordered_map>
#include <vector>

namespace comprl {

inline const Token kBosToken = "<bos>";
inline const Token kEosToken = "<eos>";
inline const Token kPadToken = "<pad>";

// Dense token index space with the reserved tokens at fixed slots 0..2.
struct Vocab {
  std::vector<Token> tokens;
  std::unordered_map<Token, int> index;

  static Vocab from_tokens(const std::vector<Token>& data_tokens);
  // Union of a dataset's source and target vocabularies, sorted.
  static Vocab build(const Dataset& ds);

  int id(const Token& t) const;  // Error on out-of-vocabulary token
  const Token& token(int id) const { return tokens.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens.size()); }
  int bos() const { return 0; }
  int eos() const { return 1; }
  int pad() const { return 2; }
};

struct ArchConfig {
  int embedding_dim = 32;
  int hidden_dim = 64;
  int source_window = 8;  // ordered source-prefix embeddings; the mean alone is order-blind
  int context_window = 8;
  int max_output_len = 16;
};

// Offsets into the flat parameter vector. Column-major blocks:
//   embeddings  d x V     one column per token
//   w1, b1      H x (1+S+W)d, H
//   w2, b2      V x H, V
struct ParamLayout {
  int vocab_size = 0;
  int embedding_dim = 0;
  int hidden_dim = 0;
  int source_window = 0;
  int context_window = 0;
  int embeddings = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0;
  int total = 0;
  int input_dim() const { return (1 + source_window + context_window) * embedding_dim; }

  static ParamLayout make(int vocab_size, const ArchConfig& arch);
};

constexpr long kMaxParamCount = 1'000'000;

// The policy: source mean-of-embeddings and a fixed window of source-prefix
// embeddings, concatenated with a fixed window of recent output embeddings,
// one tanh hidden layer, softmax output.
struct PolicyParams {
  VecX values;
  ArchConfig arch;
  Vocab vocab;
  ParamLayout layout;
};

// Deterministic seeded init; the output layer starts at zero so the initial
// next-token distribution is uniform.
PolicyParams init_policy(const Vocab& vocab, const ArchConfig& arch, std::uint64_t seed);

// Teacher-forced per-token log-probabilities of exactly the given target
// tokens (append <eos> yourself where the objective requires it). The sum is
// log pi(target | source).
VecX log_probs(const PolicyParams& params, const TokenSeq& source, const TokenSeq& target);

// Accumulates d(sum_t weights[t] * logprob[t]) / d(params) into grad.
void accumulate_log_prob_grad(const PolicyParams& params, const TokenSeq& source,
                              const TokenSeq& target, const VecX& weights, VecX& grad);

struct SampleResult {
  TokenSeq tokens;  // ends with <eos> unless truncated at max_len
  VecX logprobs;    // unscaled policy log-probs, one per token
  bool truncated = false;
};

// Ancestral sampling from the temperature-scaled softmax; temperature 0 is
// greedy argmax. Recorded log-probs are those of the unscaled distribution.
SampleResult sample(const PolicyParams& params, const TokenSeq& source, Scalar temperature,
                    std::uint64_t seed, int max_len);

// Sampled tokens with the terminal <eos> removed; what rewards score.
TokenSeq sample_body(const SampleResult& result);

TokenSeq greedy_decode(const PolicyParams& params, const TokenSeq& source, int max_len);

// A differentiable scalar function of the parameters, assembled from the
// log-prob and KL building blocks of this module. Gradients are exact
// reverse-mode, layer by layer.
class ScalarObjective {
 public:
  virtual ~ScalarObjective() = default;
  virtual Scalar value(const PolicyParams& params) const = 0;
  virtual void add_gradient(const PolicyParams& params, VecX& grad) const = 0;
};

// Gradient of the objective at params; Error on non-finite values.
VecX objective_gradient(const PolicyParams& params, const ScalarObjective& objective);

class ConstantObjective final : public ScalarObjective {
 public:
  explicit ConstantObjective(Scalar c) : c_(c) {}
  Scalar value(const PolicyParams&) const override { return c_; }
  void add_gradient(const PolicyParams&, VecX&) const override {}

 private:
  Scalar c_;
};

class ScaledObjective final : public ScalarObjective {
 public:
  ScaledObjective(Scalar scale, const ScalarObjective& inner) : scale_(scale), inner_(inner) {}
  Scalar value(const PolicyParams& p) const override { return scale_ * inner_.value(p); }
  void add_gradient(const PolicyParams& p, VecX& grad) const override;

 private:
  Scalar scale_;
  const ScalarObjective& inner_;
};

class SumObjective final : public ScalarObjective {
 public:
  explicit SumObjective(std::vector<const ScalarObjective*> terms) : terms_(std::move(terms)) {}
  Scalar value(const PolicyParams& p) const override;
  void add_gradient(const PolicyParams& p, VecX& grad) const override;

 private:
  std::vector<const ScalarObjective*> terms_;
};

// sum_t weights[t] * log pi(target[t] | source, prefix)
class SequenceLogProbObjective final : public ScalarObjective {
 public:
  SequenceLogProbObjective(TokenSeq source, TokenSeq target, VecX weights);
  SequenceLogProbObjective(TokenSeq source, TokenSeq target);  // unit weights
  Scalar value(const PolicyParams& p) const override;
  void add_gradient(const PolicyParams& p, VecX& grad) const override;

 private:
  TokenSeq source_, target_;
  VecX weights_;
};

// Versioned text container: arch, vocab, and the flat parameter vector as
// hex floats. Byte-stable for a fixed platform and seed.
void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace comprl

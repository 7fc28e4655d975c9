#pragma once

#include "comprl/corpus.hpp"
#include "comprl/policy.hpp"

#include <cstdint>
#include <vector>

namespace comprl {

struct SftConfig {
  int epochs = 40;
  int batch_size = 16;
  Scalar learning_rate = 0.5;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

// Mean over sequences of per-token negative log-likelihood, each sequence
// scored on target + <eos>.
class SftLoss final : public ScalarObjective {
 public:
  SftLoss(const Dataset& ds, std::vector<std::size_t> indices);
  explicit SftLoss(const Dataset& ds);  // whole dataset
  Scalar value(const PolicyParams& params) const override;
  void add_gradient(const PolicyParams& params, VecX& grad) const override;

 private:
  std::vector<std::pair<TokenSeq, TokenSeq>> pairs_;  // (source, target + eos)
};

struct SftResult {
  PolicyParams params;
  std::vector<Scalar> epoch_loss;  // mean per-token NLL per epoch
};

// Plain mini-batch gradient descent with a constant learning rate.
SftResult train_sft(const Dataset& ds, const PolicyParams& init, const SftConfig& config);

}  // namespace comprl

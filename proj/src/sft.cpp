#include "comprl/sft.hpp"

#include "comprl/rng.hpp"

#include <cmath>
#include <numeric>

namespace comprl {

namespace {

std::vector<std::pair<TokenSeq, TokenSeq>> make_pairs(const Dataset& ds,
                                                      const std::vector<std::size_t>& indices) {
  std::vector<std::pair<TokenSeq, TokenSeq>> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const Example& ex = ds.examples.at(i);
    TokenSeq target = ex.target;
    target.push_back(kEosToken);
    out.emplace_back(ex.source, std::move(target));
  }
  return out;
}

std::vector<std::size_t> all_indices(const Dataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

SftLoss::SftLoss(const Dataset& ds, std::vector<std::size_t> indices)
    : pairs_(make_pairs(ds, indices)) {
  if (pairs_.empty()) throw Error("SFT loss over an empty batch");
}

SftLoss::SftLoss(const Dataset& ds) : SftLoss(ds, all_indices(ds)) {}

Scalar SftLoss::value(const PolicyParams& params) const {
  Scalar total = 0;
  for (const auto& [src, tgt] : pairs_) {
    total -= log_probs(params, src, tgt).mean();
  }
  return total / static_cast<Scalar>(pairs_.size());
}

void SftLoss::add_gradient(const PolicyParams& params, VecX& grad) const {
  const Scalar inv_b = 1.0 / static_cast<Scalar>(pairs_.size());
  for (const auto& [src, tgt] : pairs_) {
    const Scalar w = -inv_b / static_cast<Scalar>(tgt.size());
    VecX weights = VecX::Constant(static_cast<Eigen::Index>(tgt.size()), w);
    accumulate_log_prob_grad(params, src, tgt, weights, grad);
  }
}

SftResult train_sft(const Dataset& ds, const PolicyParams& init, const SftConfig& config) {
  if (config.epochs < 1 || config.batch_size < 1) throw Error("SFT epochs and batch size must be positive");
  if (config.learning_rate <= 0) throw Error("SFT learning rate must be positive");
  if (ds.examples.empty()) throw Error("SFT over an empty dataset");
  for (const Token& t : ds.source_vocab)
    (void)init.vocab.id(t);
  for (const Token& t : ds.target_vocab)
    (void)init.vocab.id(t);

  SftResult result{init, {}};
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, 0x736674));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) rng.shuffle(order);
    Scalar epoch_nll = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      std::size_t end = std::min(order.size(), begin + config.batch_size);
      SftLoss loss(ds, {order.begin() + static_cast<std::ptrdiff_t>(begin),
                        order.begin() + static_cast<std::ptrdiff_t>(end)});
      Scalar batch_loss = loss.value(result.params);
      if (!std::isfinite(batch_loss)) throw Error("non-finite SFT loss");
      epoch_nll += batch_loss * static_cast<Scalar>(end - begin);
      VecX grad = objective_gradient(result.params, loss);
      result.params.values -= config.learning_rate * grad;
    }
    result.epoch_loss.push_back(epoch_nll / static_cast<Scalar>(order.size()));
  }
  return result;
}

}  // namespace comprl

#include "comprl/policy.hpp"

#include "comprl/rng.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

namespace comprl {

Vocab Vocab::from_tokens(const std::vector<Token>& data_tokens) {
  Vocab v;
  v.tokens = {kBosToken, kEosToken, kPadToken};
  for (const Token& t : data_tokens) {
    if (t == kBosToken || t == kEosToken || t == kPadToken)
      throw Error("reserved token '" + t + "' appears in data vocabulary");
    v.tokens.push_back(t);
  }
  for (std::size_t i = 0; i < v.tokens.size(); ++i) {
    auto [it, inserted] = v.index.emplace(v.tokens[i], static_cast<int>(i));
    if (!inserted) throw Error("duplicate token '" + v.tokens[i] + "' in vocabulary");
  }
  return v;
}

Vocab Vocab::build(const Dataset& ds) {
  std::set<Token> merged = ds.source_vocab;
  merged.insert(ds.target_vocab.begin(), ds.target_vocab.end());
  return from_tokens({merged.begin(), merged.end()});
}

int Vocab::id(const Token& t) const {
  auto it = index.find(t);
  if (it == index.end()) throw Error("out-of-vocabulary token '" + t + "'");
  return it->second;
}

ParamLayout ParamLayout::make(int vocab_size, const ArchConfig& arch) {
  if (arch.embedding_dim < 1 || arch.hidden_dim < 1 || arch.source_window < 1 ||
      arch.context_window < 1 || arch.max_output_len < 1)
    throw Error("architecture dimensions must be positive");
  if (vocab_size < 4) throw Error("vocabulary must contain at least one data token");
  ParamLayout L;
  L.vocab_size = vocab_size;
  L.embedding_dim = arch.embedding_dim;
  L.hidden_dim = arch.hidden_dim;
  L.source_window = arch.source_window;
  L.context_window = arch.context_window;
  const long V = vocab_size, d = arch.embedding_dim, H = arch.hidden_dim;
  const long in = (1 + arch.source_window + arch.context_window) * d;
  long total = V * d + H * in + H + V * H + V;
  if (total > kMaxParamCount)
    throw Error("parameter budget exceeded: " + std::to_string(total) + " > " +
                std::to_string(kMaxParamCount));
  L.embeddings = 0;
  L.w1 = static_cast<int>(V * d);
  L.b1 = L.w1 + static_cast<int>(H * in);
  L.w2 = L.b1 + static_cast<int>(H);
  L.b2 = L.w2 + static_cast<int>(V * H);
  L.total = static_cast<int>(total);
  return L;
}

namespace {

struct Views {
  Eigen::Map<const MatX> E;   // d x V
  Eigen::Map<const MatX> W1;  // H x (1+W)d
  Eigen::Map<const VecX> b1;  // H
  Eigen::Map<const MatX> W2;  // V x H
  Eigen::Map<const VecX> b2;  // V
};

Views views(const VecX& v, const ParamLayout& L) {
  return Views{
      {v.data() + L.embeddings, L.embedding_dim, L.vocab_size},
      {v.data() + L.w1, L.hidden_dim, L.input_dim()},
      {v.data() + L.b1, L.hidden_dim},
      {v.data() + L.w2, L.vocab_size, L.hidden_dim},
      {v.data() + L.b2, L.vocab_size},
  };
}

struct MutViews {
  Eigen::Map<MatX> E;
  Eigen::Map<MatX> W1;
  Eigen::Map<VecX> b1;
  Eigen::Map<MatX> W2;
  Eigen::Map<VecX> b2;
};

MutViews mut_views(VecX& v, const ParamLayout& L) {
  return MutViews{
      {v.data() + L.embeddings, L.embedding_dim, L.vocab_size},
      {v.data() + L.w1, L.hidden_dim, L.input_dim()},
      {v.data() + L.b1, L.hidden_dim},
      {v.data() + L.w2, L.vocab_size, L.hidden_dim},
      {v.data() + L.b2, L.vocab_size},
  };
}

std::vector<int> to_ids(const Vocab& vocab, const TokenSeq& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const Token& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

VecX source_mean(const Views& v, const std::vector<int>& src_ids) {
  VecX mean = VecX::Zero(v.E.rows());
  for (int id : src_ids) mean += v.E.col(id);
  mean /= static_cast<Scalar>(src_ids.size());
  return mean;
}

// Window of the last W history tokens before step t; history is <bos>
// followed by the emitted tokens, left-padded with <pad>.
int context_id(const std::vector<int>& emitted, int t, int j, int window, int bos, int pad) {
  int pos = t + 1 - window + j;  // index into [bos, emitted...]
  if (pos < 0) return pad;
  if (pos == 0) return bos;
  return emitted[static_cast<std::size_t>(pos - 1)];
}

// First source_window source tokens, padded with <pad> past the end.
std::vector<int> source_window_ids(const std::vector<int>& src_ids, int window, int pad) {
  std::vector<int> out(static_cast<std::size_t>(window), pad);
  for (int j = 0; j < window && j < static_cast<int>(src_ids.size()); ++j) {
    out[static_cast<std::size_t>(j)] = src_ids[static_cast<std::size_t>(j)];
  }
  return out;
}

struct StepForward {
  VecX x;       // input column
  VecX h;       // hidden activations
  VecX logits;  // unnormalized scores
  Scalar log_z = 0;
};

void step_forward(const Views& v, const ParamLayout& L, const VecX& src_mean,
                  const std::vector<int>& src_window, const std::vector<int>& emitted, int t,
                  StepForward& out) {
  const int d = L.embedding_dim;
  const int S = L.source_window;
  const int W = L.context_window;
  out.x.resize(L.input_dim());
  out.x.head(d) = src_mean;
  for (int j = 0; j < S; ++j) {
    out.x.segment(d + j * d, d) = v.E.col(src_window[static_cast<std::size_t>(j)]);
  }
  for (int j = 0; j < W; ++j) {
    int id = context_id(emitted, t, j, W, 0, 2);
    out.x.segment((1 + S + j) * d, d) = v.E.col(id);
  }
  out.h = (v.W1 * out.x + v.b1).array().tanh();
  out.logits = v.W2 * out.h + v.b2;
  Scalar m = out.logits.maxCoeff();
  out.log_z = m + std::log((out.logits.array() - m).exp().sum());
}

}  // namespace

PolicyParams init_policy(const Vocab& vocab, const ArchConfig& arch, std::uint64_t seed) {
  PolicyParams p;
  p.arch = arch;
  p.vocab = vocab;
  p.layout = ParamLayout::make(vocab.size(), arch);
  p.values = VecX::Zero(p.layout.total);
  Rng rng(derive_seed(seed, 0x706f6c69));
  auto v = mut_views(p.values, p.layout);
  const Scalar e_bound = std::sqrt(3.0 / arch.embedding_dim);
  for (Eigen::Index i = 0; i < v.E.size(); ++i)
    v.E.data()[i] = rng.next_uniform(-e_bound, e_bound);
  const Scalar w1_bound = std::sqrt(6.0 / (p.layout.input_dim() + arch.hidden_dim));
  for (Eigen::Index i = 0; i < v.W1.size(); ++i)
    v.W1.data()[i] = rng.next_uniform(-w1_bound, w1_bound);
  // b1, W2, b2 stay zero: softmax of zero logits is uniform.
  return p;
}

VecX log_probs(const PolicyParams& params, const TokenSeq& source, const TokenSeq& target) {
  if (source.empty()) throw Error("log_probs: empty source");
  const ParamLayout& L = params.layout;
  Views v = views(params.values, L);
  std::vector<int> src = to_ids(params.vocab, source);
  std::vector<int> tgt = to_ids(params.vocab, target);
  VecX mean = source_mean(v, src);
  std::vector<int> window = source_window_ids(src, L.source_window, params.vocab.pad());
  VecX out(static_cast<Eigen::Index>(tgt.size()));
  StepForward step;
  for (std::size_t t = 0; t < tgt.size(); ++t) {
    step_forward(v, L, mean, window, tgt, static_cast<int>(t), step);
    out[static_cast<Eigen::Index>(t)] = step.logits[tgt[t]] - step.log_z;
  }
  return out;
}

void accumulate_log_prob_grad(const PolicyParams& params, const TokenSeq& source,
                              const TokenSeq& target, const VecX& weights, VecX& grad) {
  if (source.empty()) throw Error("log_prob_grad: empty source");
  if (static_cast<std::size_t>(weights.size()) != target.size())
    throw Error("log_prob_grad: weights/target length mismatch");
  if (grad.size() != params.layout.total) throw Error("log_prob_grad: bad gradient size");
  const ParamLayout& L = params.layout;
  Views v = views(params.values, L);
  auto g = mut_views(grad, L);
  std::vector<int> src = to_ids(params.vocab, source);
  std::vector<int> tgt = to_ids(params.vocab, target);
  VecX mean = source_mean(v, src);
  std::vector<int> window = source_window_ids(src, L.source_window, params.vocab.pad());
  const int d = L.embedding_dim;
  const int S = L.source_window;
  const int W = L.context_window;
  const Scalar inv_src = 1.0 / static_cast<Scalar>(src.size());

  StepForward step;
  VecX dlogits(L.vocab_size), dh(L.hidden_dim), da(L.hidden_dim), dx(L.input_dim());
  for (std::size_t t = 0; t < tgt.size(); ++t) {
    const Scalar w = weights[static_cast<Eigen::Index>(t)];
    if (w == 0.0) continue;
    step_forward(v, L, mean, window, tgt, static_cast<int>(t), step);
    // d logprob[y] / d logits = onehot(y) - softmax(logits)
    dlogits = (step.logits.array() - step.log_z).exp().matrix() * (-w);
    dlogits[tgt[t]] += w;
    g.b2 += dlogits;
    g.W2.noalias() += dlogits * step.h.transpose();
    dh.noalias() = v.W2.transpose() * dlogits;
    da = dh.array() * (1.0 - step.h.array().square());
    g.b1 += da;
    g.W1.noalias() += da * step.x.transpose();
    dx.noalias() = v.W1.transpose() * da;
    for (int id : src) g.E.col(id) += dx.head(d) * inv_src;
    for (int j = 0; j < S; ++j) {
      g.E.col(window[static_cast<std::size_t>(j)]) += dx.segment(d + j * d, d);
    }
    for (int j = 0; j < W; ++j) {
      int id = context_id(tgt, static_cast<int>(t), j, W, 0, 2);
      g.E.col(id) += dx.segment((1 + S + j) * d, d);
    }
  }
}

SampleResult sample(const PolicyParams& params, const TokenSeq& source, Scalar temperature,
                    std::uint64_t seed, int max_len) {
  if (source.empty()) throw Error("sample: empty source");
  if (temperature < 0) throw Error("sample: temperature must be >= 0");
  if (max_len < 1) throw Error("sample: max_len must be >= 1");
  const ParamLayout& L = params.layout;
  Views v = views(params.values, L);
  std::vector<int> src = to_ids(params.vocab, source);
  VecX mean = source_mean(v, src);
  std::vector<int> window = source_window_ids(src, L.source_window, params.vocab.pad());
  Rng rng(derive_seed(seed, 0x73616d70));

  SampleResult result;
  std::vector<int> emitted;
  std::vector<Scalar> logprobs;
  StepForward step;
  const int eos = params.vocab.eos();
  for (int t = 0; t < max_len; ++t) {
    step_forward(v, L, mean, window, emitted, t, step);
    int choice;
    if (temperature == 0.0) {
      Eigen::Index argmax;
      step.logits.maxCoeff(&argmax);
      choice = static_cast<int>(argmax);
    } else {
      VecX scaled = step.logits / temperature;
      Scalar m = scaled.maxCoeff();
      VecX probs = (scaled.array() - m).exp();
      probs /= probs.sum();
      Scalar u = rng.next_double();
      Scalar acc = 0;
      choice = L.vocab_size - 1;
      for (int i = 0; i < L.vocab_size; ++i) {
        acc += probs[i];
        if (u < acc) {
          choice = i;
          break;
        }
      }
    }
    emitted.push_back(choice);
    logprobs.push_back(step.logits[choice] - step.log_z);
    if (choice == eos) break;
  }
  result.truncated = emitted.empty() || emitted.back() != eos;
  result.tokens.reserve(emitted.size());
  for (int id : emitted) result.tokens.push_back(params.vocab.token(id));
  result.logprobs = Eigen::Map<const VecX>(logprobs.data(), static_cast<Eigen::Index>(logprobs.size()));
  return result;
}

TokenSeq sample_body(const SampleResult& result) {
  TokenSeq body = result.tokens;
  if (!body.empty() && body.back() == kEosToken) body.pop_back();
  return body;
}

TokenSeq greedy_decode(const PolicyParams& params, const TokenSeq& source, int max_len) {
  return sample_body(sample(params, source, 0.0, 0, max_len));
}

VecX objective_gradient(const PolicyParams& params, const ScalarObjective& objective) {
  VecX grad = VecX::Zero(params.layout.total);
  objective.add_gradient(params, grad);
  if (!grad.allFinite()) throw Error("non-finite gradient");
  return grad;
}

void ScaledObjective::add_gradient(const PolicyParams& p, VecX& grad) const {
  VecX inner = VecX::Zero(grad.size());
  inner_.add_gradient(p, inner);
  grad += scale_ * inner;
}

Scalar SumObjective::value(const PolicyParams& p) const {
  Scalar s = 0;
  for (const ScalarObjective* t : terms_) s += t->value(p);
  return s;
}

void SumObjective::add_gradient(const PolicyParams& p, VecX& grad) const {
  for (const ScalarObjective* t : terms_) t->add_gradient(p, grad);
}

SequenceLogProbObjective::SequenceLogProbObjective(TokenSeq source, TokenSeq target, VecX weights)
    : source_(std::move(source)), target_(std::move(target)), weights_(std::move(weights)) {
  if (static_cast<std::size_t>(weights_.size()) != target_.size())
    throw Error("objective weights/target length mismatch");
}

SequenceLogProbObjective::SequenceLogProbObjective(TokenSeq source, TokenSeq target)
    : SequenceLogProbObjective(std::move(source), TokenSeq(target),
                               VecX::Ones(static_cast<Eigen::Index>(target.size()))) {}

Scalar SequenceLogProbObjective::value(const PolicyParams& p) const {
  return weights_.dot(log_probs(p, source_, target_));
}

void SequenceLogProbObjective::add_gradient(const PolicyParams& p, VecX& grad) const {
  accumulate_log_prob_grad(p, source_, target_, weights_, grad);
}

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path.string());
  out << "comprl-checkpoint v1\n";
  out << "arch " << params.arch.embedding_dim << ' ' << params.arch.hidden_dim << ' '
      << params.arch.source_window << ' ' << params.arch.context_window << ' '
      << params.arch.max_output_len << '\n';
  out << "vocab " << params.vocab.size() << '\n';
  for (const Token& t : params.vocab.tokens) out << t << '\n';
  out << "params " << params.values.size() << '\n';
  char buf[48];
  for (Eigen::Index i = 0; i < params.values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a", params.values[i]);
    out << buf << '\n';
  }
  out << "end\n";
  if (!out) throw Error("write failed: " + path.string());
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  auto fail = [&](const std::string& what) -> Error {
    return Error("bad checkpoint " + path.string() + ": " + what);
  };
  std::string line;
  if (!std::getline(in, line) || line != "comprl-checkpoint v1") throw fail("unknown header");
  ArchConfig arch;
  std::string word;
  in >> word;
  if (word != "arch") throw fail("missing arch");
  in >> arch.embedding_dim >> arch.hidden_dim >> arch.source_window >> arch.context_window >>
      arch.max_output_len;
  in >> word;
  if (word != "vocab") throw fail("missing vocab");
  int n = 0;
  in >> n;
  if (n < 4) throw fail("vocab too small");
  std::vector<Token> tokens;
  tokens.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    in >> word;
    tokens.push_back(word);
  }
  if (tokens.size() < 3 || tokens[0] != kBosToken || tokens[1] != kEosToken ||
      tokens[2] != kPadToken)
    throw fail("reserved tokens out of place");
  Vocab vocab = Vocab::from_tokens({tokens.begin() + 3, tokens.end()});
  in >> word;
  if (word != "params") throw fail("missing params");
  Eigen::Index m = 0;
  in >> m;
  PolicyParams p;
  p.arch = arch;
  p.vocab = std::move(vocab);
  p.layout = ParamLayout::make(p.vocab.size(), arch);
  if (m != p.layout.total) throw fail("parameter count does not match layout");
  p.values.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(in >> word)) throw fail("truncated parameter block");
    char* end = nullptr;
    p.values[i] = std::strtod(word.c_str(), &end);
    if (end == word.c_str()) throw fail("unparsable parameter value '" + word + "'");
  }
  in >> word;
  if (word != "end") throw fail("missing end marker");
  if (!p.values.allFinite()) throw fail("non-finite parameter values");
  return p;
}

}  // namespace comprl

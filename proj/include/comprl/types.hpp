#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace comprl {

using Scalar = double;
using VecX = Eigen::VectorX<Scalar>;
using MatX = Eigen::MatrixX<Scalar>;

// Tokens are plain strings compared by exact equality. Sequences are
// whitespace-free tokens in order.
using Token = std::string;
using TokenSeq = std::vector<Token>;

enum class Formalism { Scan, Cogs, FunQL, Sparql };

const char* formalism_name(Formalism f);
Formalism formalism_from_name(const std::string& name);

// Error raised on contract violations and malformed inputs.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64; used to derive independent RNG streams from one base seed.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

std::string join_tokens(const TokenSeq& tokens);
// Splits on runs of whitespace; never produces empty tokens.
TokenSeq tokenize(const std::string& text);

}  // namespace comprl

#include "comprl/types.hpp"

#include <cctype>
#include <sstream>

namespace comprl {

const char* formalism_name(Formalism f) {
  switch (f) {
    case Formalism::Scan:
      return "scan";
    case Formalism::Cogs:
      return "cogs";
    case Formalism::FunQL:
      return "funql";
    case Formalism::Sparql:
      return "sparql";
  }
  return "scan";
}

Formalism formalism_from_name(const std::string& name) {
  if (name == "scan") return Formalism::Scan;
  if (name == "cogs") return Formalism::Cogs;
  if (name == "funql") return Formalism::FunQL;
  if (name == "sparql") return Formalism::Sparql;
  throw Error("unknown formalism '" + name + "' (expected scan|cogs|funql|sparql)");
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(mix64(base) ^ a) ^ b);
}

std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

TokenSeq tokenize(const std::string& text) {
  TokenSeq out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace comprl

#pragma once

#include "comprl/types.hpp"

#include <compare>
#include <filesystem>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace comprl {

enum class TokenClass { Action, Entity, Relation, Structural };

const char* token_class_name(TokenClass c);

// An atomic primitive of a target sequence: an action, entity, or relation
// token. Equality is (category, name) equality.
struct Primitive {
  TokenClass category = TokenClass::Action;
  Token name;
  auto operator<=>(const Primitive&) const = default;
};

using PrimitiveSet = std::set<Primitive>;

// One position of a compositional skeleton: an abstract head (V, N, R, a
// role-preserving label like V.agent, or the separator "&") over placeholder
// variable indices. Heads never carry concrete primitive names.
struct SkeletonToken {
  std::string head;
  std::vector<int> args;  // 1-based placeholder indices
  bool operator==(const SkeletonToken&) const = default;
};

struct Skeleton {
  std::vector<SkeletonToken> tokens;
  bool operator==(const Skeleton&) const = default;
};

inline const std::string kSkeletonSeparator = "&";

SkeletonToken skeleton_atom(std::string head, std::vector<int> args);
SkeletonToken skeleton_separator();
// Renders "V(x1) V(x1) V(x2)" or "N(x1) & R(x2, x1)" for dumps and tests.
std::string skeleton_to_string(const Skeleton& skeleton);

enum class MatchKind { Exact, Prefix, Pattern };

struct TokenRule {
  MatchKind kind = MatchKind::Exact;
  std::string text;
  std::regex compiled;  // only for Pattern

  bool matches(const Token& token) const;
};

// How skeletons are recovered from a token stream.
//   ScanActions    every action token is one atom over its own primitive
//   PredicateArgs  PRED ( arg , arg ) groups, COGS-style
//   FunctionChain  linearized functional forms read inside-out, FunQL-style
//   SparqlTriples  subject/predicate/object triples inside the WHERE block
enum class SkeletonMode { ScanActions, PredicateArgs, FunctionChain, SparqlTriples };

// Data-driven token classification and skeleton rules for one formalism.
// Loaded from .fd files; builtins are compiled in for the four shipped
// formalisms.
struct FormalismDescriptor {
  Formalism formalism = Formalism::Scan;
  SkeletonMode mode = SkeletonMode::ScanActions;
  bool relation_role_suffix = false;  // eat.agent -> head V.agent
  std::string head_action = "V";
  std::string head_entity = "N";
  std::string head_relation = "R";
  std::vector<TokenRule> actions;
  std::vector<TokenRule> entities;
  std::vector<TokenRule> relations;
  std::vector<TokenRule> structural;
};

// Total under a validated descriptor: unmatched tokens are Structural.
// Exact rules outrank prefix rules, which outrank pattern rules; a token
// matching two classes at the same rank is a descriptor error.
TokenClass classify_token(const Token& token, const FormalismDescriptor& descriptor);

PrimitiveSet extract_primitives(const TokenSeq& target, const FormalismDescriptor& descriptor);

// Lenient by default: spans whose argument structure cannot be recovered
// contribute nothing, so arbitrary sampled text is always scorable. Strict
// mode reports the offending token position instead.
Skeleton extract_skeleton(const TokenSeq& target, const FormalismDescriptor& descriptor,
                          bool strict = false);

FormalismDescriptor parse_descriptor(const std::string& text,
                                     const std::string& origin = "<string>");
FormalismDescriptor load_descriptor(const std::filesystem::path& path);
const FormalismDescriptor& builtin_descriptor(Formalism f);
// Source text of the builtin descriptor; identical to the shipped
// data/descriptors/*.fd file.
std::string builtin_descriptor_text(Formalism f);

}  // namespace comprl

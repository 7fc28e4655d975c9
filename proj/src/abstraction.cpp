#include "comprl/abstraction.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace comprl {

const char* token_class_name(TokenClass c) {
  switch (c) {
    case TokenClass::Action:
      return "action";
    case TokenClass::Entity:
      return "entity";
    case TokenClass::Relation:
      return "relation";
    case TokenClass::Structural:
      return "structural";
  }
  return "structural";
}

bool TokenRule::matches(const Token& token) const {
  switch (kind) {
    case MatchKind::Exact:
      return token == text;
    case MatchKind::Prefix:
      return token.size() >= text.size() && token.compare(0, text.size(), text) == 0;
    case MatchKind::Pattern:
      return std::regex_match(token, compiled);
  }
  return false;
}

SkeletonToken skeleton_atom(std::string head, std::vector<int> args) {
  return SkeletonToken{std::move(head), std::move(args)};
}

SkeletonToken skeleton_separator() { return SkeletonToken{kSkeletonSeparator, {}}; }

std::string skeleton_to_string(const Skeleton& skeleton) {
  std::string out;
  for (std::size_t i = 0; i < skeleton.tokens.size(); ++i) {
    const SkeletonToken& t = skeleton.tokens[i];
    if (i > 0) out += ' ';
    if (t.head == kSkeletonSeparator && t.args.empty()) {
      out += kSkeletonSeparator;
      continue;
    }
    out += t.head;
    out += '(';
    for (std::size_t j = 0; j < t.args.size(); ++j) {
      if (j > 0) out += ", ";
      out += 'x' + std::to_string(t.args[j]);
    }
    out += ')';
  }
  return out;
}

namespace {

struct ClassMatch {
  TokenClass cls;
  MatchKind kind;
};

void collect_matches(const std::vector<TokenRule>& rules, TokenClass cls, const Token& token,
                     MatchKind kind, std::vector<ClassMatch>& out) {
  for (const TokenRule& r : rules) {
    if (r.kind == kind && r.matches(token)) {
      out.push_back({cls, kind});
      return;  // one hit per class and rank is enough
    }
  }
}

std::optional<TokenClass> classify_at_rank(const Token& token, const FormalismDescriptor& d,
                                           MatchKind kind) {
  std::vector<ClassMatch> hits;
  collect_matches(d.structural, TokenClass::Structural, token, kind, hits);
  collect_matches(d.actions, TokenClass::Action, token, kind, hits);
  collect_matches(d.entities, TokenClass::Entity, token, kind, hits);
  collect_matches(d.relations, TokenClass::Relation, token, kind, hits);
  if (hits.empty()) return std::nullopt;
  if (hits.size() > 1) {
    std::string classes;
    for (const ClassMatch& h : hits) {
      if (!classes.empty()) classes += ", ";
      classes += token_class_name(h.cls);
    }
    throw Error("descriptor for " + std::string(formalism_name(d.formalism)) +
                ": token '" + token + "' matches multiple classes (" + classes + ")");
  }
  return hits.front().cls;
}

}  // namespace

TokenClass classify_token(const Token& token, const FormalismDescriptor& d) {
  for (MatchKind kind : {MatchKind::Exact, MatchKind::Prefix, MatchKind::Pattern}) {
    if (auto cls = classify_at_rank(token, d, kind)) return *cls;
  }
  return TokenClass::Structural;
}

PrimitiveSet extract_primitives(const TokenSeq& target, const FormalismDescriptor& d) {
  PrimitiveSet out;
  for (const Token& t : target) {
    TokenClass cls = classify_token(t, d);
    if (cls != TokenClass::Structural) out.insert(Primitive{cls, t});
  }
  return out;
}

namespace {

// Assigns placeholder indices by first occurrence of concrete identifiers;
// anonymous (output) variables consume the next index without a key.
class VarMap {
 public:
  int var_of(const Token& identifier) {
    auto it = map_.find(identifier);
    if (it != map_.end()) return it->second;
    int v = ++next_;
    map_.emplace(identifier, v);
    return v;
  }
  int fresh() { return ++next_; }

 private:
  std::map<Token, int> map_;
  int next_ = 0;
};

std::string relation_head(const Token& token, const FormalismDescriptor& d) {
  if (!d.relation_role_suffix) return d.head_relation;
  auto dot = token.find('.');
  if (dot == std::string::npos || dot + 1 >= token.size()) return d.head_relation;
  return d.head_relation + token.substr(dot);  // eat.agent -> V.agent
}

Skeleton scan_skeleton(const TokenSeq& target, const FormalismDescriptor& d) {
  Skeleton out;
  VarMap vars;
  for (const Token& t : target) {
    if (classify_token(t, d) == TokenClass::Action) {
      out.tokens.push_back(skeleton_atom(d.head_action, {vars.var_of(t)}));
    }
  }
  return out;
}

void append_atom(Skeleton& out, SkeletonToken atom) {
  if (!out.tokens.empty()) out.tokens.push_back(skeleton_separator());
  out.tokens.push_back(std::move(atom));
}

[[noreturn]] void malformed(std::size_t position, const std::string& what) {
  throw Error("malformed logical form at token " + std::to_string(position + 1) + ": " + what);
}

// PRED ( arg , arg ) groups; everything else is dropped.
Skeleton predarg_skeleton(const TokenSeq& target, const FormalismDescriptor& d, bool strict) {
  Skeleton out;
  VarMap vars;
  std::size_t i = 0;
  while (i < target.size()) {
    TokenClass cls = classify_token(target[i], d);
    if (cls != TokenClass::Entity && cls != TokenClass::Relation) {
      ++i;
      continue;
    }
    std::size_t pred_pos = i;
    if (i + 1 >= target.size() || target[i + 1] != "(") {
      if (strict) malformed(pred_pos, "expected '(' after predicate '" + target[pred_pos] + "'");
      ++i;
      continue;
    }
    std::vector<Token> args;
    std::size_t j = i + 2;
    bool closed = false;
    for (; j < target.size(); ++j) {
      if (target[j] == ")") {
        closed = true;
        break;
      }
      if (target[j] == ",") continue;
      if (target[j] == "(") break;  // nested '(' means the group is broken
      args.push_back(target[j]);
    }
    if (!closed || args.empty()) {
      if (strict) malformed(pred_pos, "unrecoverable argument list for '" + target[pred_pos] + "'");
      ++i;
      continue;
    }
    std::vector<int> ids;
    ids.reserve(args.size());
    for (const Token& a : args) ids.push_back(vars.var_of(a));
    std::string head = cls == TokenClass::Entity ? d.head_entity : relation_head(target[pred_pos], d);
    append_atom(out, skeleton_atom(std::move(head), std::move(ids)));
    i = j + 1;
  }
  return out;
}

// Linearized functional forms, read right to left so inner arguments are
// emitted before the relations applied to them. Each relation links a fresh
// output variable to the variable of the expression it wraps.
Skeleton chain_skeleton(const TokenSeq& target, const FormalismDescriptor& d, bool strict) {
  Skeleton out;
  VarMap vars;
  std::optional<int> current;
  for (std::size_t r = target.size(); r > 0; --r) {
    std::size_t i = r - 1;
    TokenClass cls = classify_token(target[i], d);
    if (cls == TokenClass::Entity) {
      int v = vars.var_of(target[i]);
      append_atom(out, skeleton_atom(d.head_entity, {v}));
      current = v;
    } else if (cls == TokenClass::Relation) {
      if (!current) {
        if (strict) malformed(i, "relation '" + target[i] + "' has no operand");
        continue;
      }
      int v = vars.fresh();
      append_atom(out, skeleton_atom(relation_head(target[i], d), {v, *current}));
      current = v;
    }
  }
  return out;
}

// Subject/predicate/object triples between '{' and '}', split on '.'.
// "?s a CLASS" abstracts to N(subject); "?s REL ?o" to R(subject, object).
Skeleton triples_skeleton(const TokenSeq& target, const FormalismDescriptor& d, bool strict) {
  Skeleton out;
  VarMap vars;
  auto open = std::find(target.begin(), target.end(), "{");
  if (open == target.end()) {
    if (strict && !target.empty()) malformed(0, "no '{' opening a triple block");
    return out;
  }
  std::vector<std::pair<Token, std::size_t>> pending;  // token, position
  auto flush = [&](std::size_t at) {
    if (pending.empty()) return;
    if (pending.size() != 3) {
      if (strict)
        malformed(pending.front().second,
                  "triple with " + std::to_string(pending.size()) + " tokens");
      pending.clear();
      return;
    }
    const Token& subj = pending[0].first;
    const Token& pred = pending[1].first;
    const Token& obj = pending[2].first;
    if (pred == "a") {
      append_atom(out, skeleton_atom(d.head_entity, {vars.var_of(subj)}));
    } else {
      int s = vars.var_of(subj);
      int o = vars.var_of(obj);
      append_atom(out, skeleton_atom(relation_head(pred, d), {s, o}));
    }
    pending.clear();
    (void)at;
  };
  for (std::size_t i = static_cast<std::size_t>(open - target.begin()) + 1; i < target.size();
       ++i) {
    const Token& t = target[i];
    if (t == "}") {
      flush(i);
      break;
    }
    if (t == ".") {
      flush(i);
      continue;
    }
    pending.emplace_back(t, i);
  }
  flush(target.size());
  return out;
}

}  // namespace

Skeleton extract_skeleton(const TokenSeq& target, const FormalismDescriptor& d, bool strict) {
  switch (d.mode) {
    case SkeletonMode::ScanActions:
      return scan_skeleton(target, d);
    case SkeletonMode::PredicateArgs:
      return predarg_skeleton(target, d, strict);
    case SkeletonMode::FunctionChain:
      return chain_skeleton(target, d, strict);
    case SkeletonMode::SparqlTriples:
      return triples_skeleton(target, d, strict);
  }
  return {};
}

namespace {

SkeletonMode mode_from_name(const std::string& name, const std::string& origin) {
  if (name == "scan-actions") return SkeletonMode::ScanActions;
  if (name == "predicate-args") return SkeletonMode::PredicateArgs;
  if (name == "function-chain") return SkeletonMode::FunctionChain;
  if (name == "sparql-triples") return SkeletonMode::SparqlTriples;
  throw Error(origin + ": unknown mode '" + name + "'");
}

TokenRule parse_rule(const std::string& entry, const std::string& origin, int line_no) {
  auto colon = entry.find(':');
  std::string where = origin + ":" + std::to_string(line_no);
  if (colon == std::string::npos) throw Error(where + ": rule entry needs kind:text");
  std::string kind = entry.substr(0, colon);
  std::string text = entry.substr(colon + 1);
  if (text.empty()) throw Error(where + ": empty rule text");
  TokenRule rule;
  rule.text = text;
  if (kind == "exact") {
    rule.kind = MatchKind::Exact;
  } else if (kind == "prefix") {
    rule.kind = MatchKind::Prefix;
  } else if (kind == "pattern") {
    rule.kind = MatchKind::Pattern;
    try {
      rule.compiled = std::regex(text, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(where + ": bad pattern '" + text + "': " + e.what());
    }
  } else {
    throw Error(where + ": unknown rule kind '" + kind + "'");
  }
  return rule;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void validate_descriptor(const FormalismDescriptor& d, const std::string& origin) {
  // Exact entries must classify uniquely through the full matcher; this
  // catches duplicates across sections and exact-vs-exact clashes up front.
  auto check_exacts = [&](const std::vector<TokenRule>& rules, TokenClass cls) {
    for (const TokenRule& r : rules) {
      if (r.kind != MatchKind::Exact) continue;
      TokenClass got = classify_token(r.text, d);  // throws on same-rank ambiguity
      if (got != cls)
        throw Error(origin + ": exact token '" + r.text + "' listed under " +
                    token_class_name(cls) + " but classifies as " + token_class_name(got));
    }
  };
  check_exacts(d.actions, TokenClass::Action);
  check_exacts(d.entities, TokenClass::Entity);
  check_exacts(d.relations, TokenClass::Relation);
  check_exacts(d.structural, TokenClass::Structural);

  if (d.mode == SkeletonMode::ScanActions && d.actions.empty())
    throw Error(origin + ": scan-actions mode needs at least one [actions] rule");
  if (d.mode != SkeletonMode::ScanActions && d.entities.empty() && d.relations.empty())
    throw Error(origin + ": logical-form modes need [entities] or [relations] rules");
}

}  // namespace

FormalismDescriptor parse_descriptor(const std::string& text, const std::string& origin) {
  FormalismDescriptor d;
  std::vector<TokenRule>* section = nullptr;
  bool have_formalism = false, have_mode = false;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trimmed(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      std::string name = line.substr(1, line.size() - 2);
      if (name == "actions")
        section = &d.actions;
      else if (name == "entities")
        section = &d.entities;
      else if (name == "relations")
        section = &d.relations;
      else if (name == "structural")
        section = &d.structural;
      else
        throw Error(origin + ":" + std::to_string(line_no) + ": unknown section [" + name + "]");
      continue;
    }
    if (section == nullptr) {
      auto colon = line.find(':');
      if (colon == std::string::npos)
        throw Error(origin + ":" + std::to_string(line_no) + ": expected key: value");
      std::string key = trimmed(line.substr(0, colon));
      std::string value = trimmed(line.substr(colon + 1));
      if (key == "formalism") {
        d.formalism = formalism_from_name(value);
        have_formalism = true;
      } else if (key == "mode") {
        d.mode = mode_from_name(value, origin);
        have_mode = true;
      } else if (key == "relation-role-suffix") {
        d.relation_role_suffix = value == "true";
      } else if (key == "head-action") {
        d.head_action = value;
      } else if (key == "head-entity") {
        d.head_entity = value;
      } else if (key == "head-relation") {
        d.head_relation = value;
      } else {
        throw Error(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
      continue;
    }
    section->push_back(parse_rule(line, origin, line_no));
  }
  if (!have_formalism) throw Error(origin + ": missing 'formalism:' key");
  if (!have_mode) throw Error(origin + ": missing 'mode:' key");
  validate_descriptor(d, origin);
  return d;
}

FormalismDescriptor load_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open descriptor file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_descriptor(buf.str(), path.string());
}

namespace {

constexpr const char* kScanFd = R"(# SCAN action sequences: every upper-case token is an action primitive.
formalism: scan
mode: scan-actions

[actions]
pattern:^[A-Z_]+$
)";

constexpr const char* kCogsFd = R"(# COGS logical forms, compact tokenization:
#   * cake ( x4 ) ; hedgehog ( x1 ) AND eat.agent ( x2 , x1 )
# Lemmas and proper names are entities; role predicates (lemma.role) are
# relations and keep their role suffix in the skeleton.
formalism: cogs
mode: predicate-args
relation-role-suffix: true
head-relation: V

[entities]
pattern:^[a-z]+$
pattern:^[A-Z][a-z]+$

[relations]
pattern:^[a-z]+(\.[a-z]+)+$

[structural]
exact:(
exact:)
exact:,
exact:;
exact:AND
exact:*
pattern:^x[0-9]+$
)";

constexpr const char* kFunqlFd = R"(# GeoQuery FunQL, linearized: answer state next_to stateid texas
# Relations and meta/function tokens form closed classes; remaining
# lower-case tokens are entity names.
formalism: funql
mode: function-chain

[entities]
pattern:^[a-z][a-z_0-9]*$

[relations]
exact:next_to
exact:loc
exact:traverse
exact:capital
exact:area
exact:population
exact:len
exact:size
exact:elevation
exact:density
exact:high_point
exact:low_point

[structural]
exact:answer
exact:intersection
exact:exclude
exact:largest
exact:smallest
exact:largest_one
exact:smallest_one
exact:most
exact:fewest
exact:count
exact:sum
exact:each
exact:all
exact:state
exact:city
exact:river
exact:place
exact:mountain
exact:lake
exact:country
exact:major
exact:stateid
exact:cityid
exact:riverid
exact:placeid
exact:countryid
)";

constexpr const char* kSparqlFd = R"(# CFQ SPARQL, space-separated punctuation:
#   SELECT DISTINCT ?x0 WHERE { ?x0 a ns:people.person . }
# Freebase mids and two-part ns: types are entities; three-part ns:
# properties are relations; query variables and keywords are structural.
formalism: sparql
mode: sparql-triples

[entities]
prefix:m.
pattern:^ns:[a-z_]+\.[a-z_]+$

[relations]
pattern:^ns:[a-z_]+(\.[a-z_]+){2,}$

[structural]
exact:SELECT
exact:DISTINCT
exact:WHERE
exact:FILTER
exact:count
exact:{
exact:}
exact:.
exact:a
exact:(
exact:)
exact:!=
pattern:^\?[A-Za-z0-9_]+$
)";

}  // namespace

std::string builtin_descriptor_text(Formalism f) {
  switch (f) {
    case Formalism::Scan:
      return kScanFd;
    case Formalism::Cogs:
      return kCogsFd;
    case Formalism::FunQL:
      return kFunqlFd;
    case Formalism::Sparql:
      return kSparqlFd;
  }
  return kScanFd;
}

const FormalismDescriptor& builtin_descriptor(Formalism f) {
  static const FormalismDescriptor scan = parse_descriptor(kScanFd, "<builtin scan>");
  static const FormalismDescriptor cogs = parse_descriptor(kCogsFd, "<builtin cogs>");
  static const FormalismDescriptor funql = parse_descriptor(kFunqlFd, "<builtin funql>");
  static const FormalismDescriptor sparql = parse_descriptor(kSparqlFd, "<builtin sparql>");
  switch (f) {
    case Formalism::Scan:
      return scan;
    case Formalism::Cogs:
      return cogs;
    case Formalism::FunQL:
      return funql;
    case Formalism::Sparql:
      return sparql;
  }
  return scan;
}

}  // namespace comprl

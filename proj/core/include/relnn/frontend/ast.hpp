#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "relnn/frontend/scalar.hpp"

namespace relnn::frontend {

struct SourcePos {
  int line = 0;
  int col = 0;
  // Positions never take part in structural comparison.
  bool operator==(const SourcePos&) const { return true; }
};

// Expressions: transformations, alias values, template arguments and the
// arithmetic of filters share one tree.
struct Expr {
  enum class Kind {
    Number,     // text
    String,     // text (unquoted)
    Name,       // text, optional targs
    Splat,      // *text
    Call,       // text<targs>(args)(args2)
    Binary,     // text is one of + - * / @, args = {lhs, rhs}
    Neg,        // args = {x}
    Transpose,  // args = {x}
    Bracket,    // [args...] encode items
  };
  Kind kind = Kind::Number;
  std::string text;
  std::vector<Expr> targs;
  std::vector<Expr> args;
  std::vector<Expr> args2;
  bool has_args2 = false;
  SourcePos pos;

  bool operator==(const Expr&) const = default;

  static Expr number(std::string text);
  static Expr string(std::string text);
  static Expr name(std::string text, std::vector<Expr> targs = {});
  static Expr binary(char op, Expr a, Expr b);
};

enum class Cmp { Eq, Ne, Lt, Le, Gt, Ge };
const char* to_string(Cmp c);

struct Filter {
  Cmp op = Cmp::Eq;
  Expr lhs;
  Expr rhs;
  bool operator==(const Filter&) const = default;
};

// Iteration domain of a replicator: [i = a to b] or [Rel(v1, ..., vn)].
struct Domain {
  bool is_range = true;
  std::string var;           // range variable
  Expr from;
  Expr to;
  std::string relation;      // tuple domain
  std::vector<Expr> terms;   // tuple domain: names or literals
  bool operator==(const Domain&) const = default;
};

struct Replicator {
  bool join = true;  // ",..." (conjunction) or "|..." (union)
  Domain domain;
  bool operator==(const Replicator&) const = default;
};

// R(x, y; z), R<args>(...), F(A, B)(x; z), Softmax(R)(s, t; z).
struct Atom {
  std::string name;
  std::vector<Expr> targs;
  bool is_call = false;          // explicit first argument list present
  std::vector<Expr> call_args;   // relation names (Name exprs)
  std::vector<Expr> terms;       // content terms: Name (variable or _), Number, String
  bool has_emb = false;          // ';' present
  std::string emb;               // empty when ';' present but no variable
  std::optional<Replicator> rep;
  SourcePos pos;
  bool operator==(const Atom&) const = default;
};

// A content position of a head: a variable or a decode bracket [z].
struct HeadTerm {
  std::string var;
  bool decode = false;
  bool operator==(const HeadTerm&) const = default;
};

struct Head {
  std::string name;
  std::vector<Expr> targs;
  std::vector<HeadTerm> terms;
  bool has_emb = false;            // ';' present
  std::optional<std::string> agg;  // sum | mean | max
  std::optional<Expr> tau;
  bool operator==(const Head&) const = default;
};

struct AliasStmt {
  std::string name;
  std::vector<Expr> targs;
  Expr value;
  bool operator==(const AliasStmt&) const = default;
};

struct RuleStmt {
  Head head;
  bool is_union = false;
  std::vector<Atom> atoms;
  std::vector<Filter> filters;
  bool operator==(const RuleStmt&) const = default;
};

struct Statement;

struct FunctionDef {
  std::string name;
  std::vector<Expr> targs;
  std::vector<std::string> params;
  std::vector<Statement> body;
  bool operator==(const FunctionDef&) const;
};

struct FitStmt {
  std::vector<std::pair<std::string, Expr>> kwargs;
  std::string target;
  std::vector<Expr> targs;
  bool operator==(const FitStmt&) const = default;
};

struct PredStmt {
  std::string target;
  std::vector<Expr> targs;
  bool operator==(const PredStmt&) const = default;
};

struct Statement {
  std::variant<AliasStmt, RuleStmt, FunctionDef, FitStmt, PredStmt> node;
  SourcePos pos;
  bool operator==(const Statement&) const = default;
};

using Program = std::vector<Statement>;

// Template parameter names when targs are all plain identifiers; empty when
// the statement is concrete. Mixed identifier/literal lists throw.
std::vector<std::string> template_params(const std::vector<Expr>& targs);
bool is_literal(const Expr& e);

// Name of the statement's defined symbol, with its targs.
const std::string& defined_name(const Statement& s);
const std::vector<Expr>& defined_targs(const Statement& s);

// Concrete relation name for name<args>: "Att" + "1" for one argument,
// "HGT_Papers_0" for several. String args appear unquoted.
std::string mangle(const std::string& name, const std::vector<Expr>& targs);
std::string literal_text(const Expr& e);

// Source printer. Every compound expression is parenthesized, so printing
// and re-parsing yields an identical tree.
std::string print(const Expr& e);
std::string print(const Atom& a);
std::string print(const Statement& s, int indent = 0);
std::string print(const Program& p);

}  // namespace relnn::frontend

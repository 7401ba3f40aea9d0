#include "relnn/frontend/ast.hpp"

#include <sstream>

namespace relnn::frontend {

Expr Expr::number(std::string text) {
  Expr e;
  e.kind = Kind::Number;
  e.text = std::move(text);
  return e;
}

Expr Expr::string(std::string text) {
  Expr e;
  e.kind = Kind::String;
  e.text = std::move(text);
  return e;
}

Expr Expr::name(std::string text, std::vector<Expr> targs) {
  Expr e;
  e.kind = Kind::Name;
  e.text = std::move(text);
  e.targs = std::move(targs);
  return e;
}

Expr Expr::binary(char op, Expr a, Expr b) {
  Expr e;
  e.kind = Kind::Binary;
  e.text = std::string(1, op);
  e.args = {std::move(a), std::move(b)};
  return e;
}

bool FunctionDef::operator==(const FunctionDef& o) const {
  return name == o.name && targs == o.targs && params == o.params && body == o.body;
}

const char* to_string(Cmp c) {
  switch (c) {
    case Cmp::Eq: return "=";
    case Cmp::Ne: return "!=";
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
  }
  return "?";
}

bool is_literal(const Expr& e) { return e.kind == Expr::Kind::Number || e.kind == Expr::Kind::String; }

std::vector<std::string> template_params(const std::vector<Expr>& targs) {
  std::vector<std::string> names;
  bool any_literal = false;
  for (const auto& t : targs) {
    if (t.kind == Expr::Kind::Name && t.targs.empty()) {
      names.push_back(t.text);
    } else if (is_literal(t)) {
      any_literal = true;
    } else {
      return {};  // an expression: only meaningful under substitution
    }
  }
  if (!names.empty() && any_literal) {
    throw FrontendError("template arguments mix parameters and literals");
  }
  return names;
}

const std::string& defined_name(const Statement& s) {
  static const std::string none;
  if (auto* a = std::get_if<AliasStmt>(&s.node)) return a->name;
  if (auto* r = std::get_if<RuleStmt>(&s.node)) return r->head.name;
  if (auto* f = std::get_if<FunctionDef>(&s.node)) return f->name;
  return none;
}

const std::vector<Expr>& defined_targs(const Statement& s) {
  static const std::vector<Expr> none;
  if (auto* a = std::get_if<AliasStmt>(&s.node)) return a->targs;
  if (auto* r = std::get_if<RuleStmt>(&s.node)) return r->head.targs;
  if (auto* f = std::get_if<FunctionDef>(&s.node)) return f->targs;
  return none;
}

std::string literal_text(const Expr& e) {
  if (!is_literal(e)) throw FrontendError("template argument '" + print(e) + "' is not a literal");
  return e.text;
}

std::string mangle(const std::string& name, const std::vector<Expr>& targs) {
  if (targs.empty()) return name;
  if (targs.size() == 1) return name + literal_text(targs[0]);
  std::string out = name;
  for (const auto& t : targs) out += "_" + literal_text(t);
  return out;
}

namespace {

std::string join(const std::vector<Expr>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + print(xs[i]);
  return s;
}

// Content terms print negative literals bare, as the term grammar expects.
std::string join_terms(const std::vector<Expr>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    const Expr& x = xs[i];
    s += x.kind == Expr::Kind::Neg ? "-" + print(x.args[0]) : print(x);
  }
  return s;
}

std::string print_targs(const std::vector<Expr>& targs) {
  return targs.empty() ? "" : "<" + join(targs) + ">";
}

std::string print_domain(const Domain& d) {
  if (d.is_range) return "[" + d.var + " = " + print(d.from) + " to " + print(d.to) + "]";
  return "[" + d.relation + "(" + join_terms(d.terms) + ")]";
}

std::string print_head(const Head& h) {
  std::string s = h.name + print_targs(h.targs) + "(";
  for (std::size_t i = 0; i < h.terms.size(); ++i) {
    if (i) s += ", ";
    s += h.terms[i].decode ? "[" + h.terms[i].var + "]" : h.terms[i].var;
  }
  if (h.has_emb) {
    s += h.terms.empty() ? ";" : "; ";
    if (h.tau) s += h.agg ? *h.agg + "(" + print(*h.tau) + ")" : print(*h.tau);
  }
  return s + ")";
}

}  // namespace

std::string print(const Expr& e) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::Number: return e.text;
    case K::String: return "'" + e.text + "'";
    case K::Name: return e.text + print_targs(e.targs);
    case K::Splat: return "*" + e.text;
    case K::Call: {
      std::string s = e.text + print_targs(e.targs) + "(" + join(e.args) + ")";
      if (e.has_args2) s += "(" + join(e.args2) + ")";
      return s;
    }
    case K::Binary: return "(" + print(e.args[0]) + " " + e.text + " " + print(e.args[1]) + ")";
    case K::Neg: return "(-" + print(e.args[0]) + ")";
    case K::Transpose: return print(e.args[0]) + ".T";
    case K::Bracket: return "[" + join(e.args) + "]";
  }
  return "?";
}

std::string print(const Atom& a) {
  std::string s = a.name + print_targs(a.targs);
  if (a.is_call) s += "(" + join(a.call_args) + ")";
  s += "(" + join_terms(a.terms);
  if (a.has_emb) {
    s += a.terms.empty() ? ";" : "; ";
    s += a.emb;
  }
  s += ")";
  if (a.rep) s += std::string(a.rep->join ? " ,... " : " |... ") + print_domain(a.rep->domain);
  return s;
}

std::string print(const Statement& st, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  std::ostringstream os;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AliasStmt>) {
          os << pad << s.name << print_targs(s.targs) << " = " << print(s.value) << " .";
        } else if constexpr (std::is_same_v<T, RuleStmt>) {
          os << pad << print_head(s.head) << " :- ";
          for (std::size_t i = 0; i < s.atoms.size(); ++i) {
            if (i) os << (s.is_union ? " | " : ", ");
            os << print(s.atoms[i]);
          }
          for (const auto& f : s.filters) {
            os << ", " << print(f.lhs) << " " << to_string(f.op) << " " << print(f.rhs);
          }
          os << " .";
        } else if constexpr (std::is_same_v<T, FunctionDef>) {
          os << pad << "def " << s.name << print_targs(s.targs) << "(";
          for (std::size_t i = 0; i < s.params.size(); ++i) os << (i ? ", " : "") << s.params[i];
          os << "):\n";
          for (const auto& b : s.body) os << print(b, indent + 2) << "\n";
          os << pad << "enddef";
        } else if constexpr (std::is_same_v<T, FitStmt>) {
          os << pad << "?fit ";
          if (!s.kwargs.empty()) {
            os << "<";
            for (std::size_t i = 0; i < s.kwargs.size(); ++i) {
              os << (i ? ", " : "") << s.kwargs[i].first << "=" << print(s.kwargs[i].second);
            }
            os << "> ";
          }
          os << s.target << print_targs(s.targs) << " .";
        } else {
          os << pad << "?pred " << s.target << print_targs(s.targs) << " .";
        }
      },
      st.node);
  return os.str();
}

std::string print(const Program& p) {
  std::string out;
  for (const auto& s : p) out += print(s) + "\n";
  return out;
}

}  // namespace relnn::frontend

#include "relnn/frontend/expand.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace relnn::frontend {

std::optional<Scalar> try_eval_scalar(const Expr& e, const ScalarEnv& env) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::Number: return parse_number(e.text);
    case K::Name: {
      if (!e.targs.empty()) return std::nullopt;
      auto it = env.find(e.text);
      if (it == env.end()) return std::nullopt;
      return it->second;
    }
    case K::Neg: {
      auto x = try_eval_scalar(e.args[0], env);
      if (!x) return std::nullopt;
      return negate(*x);
    }
    case K::Binary: {
      if (e.text == "@") return std::nullopt;
      auto a = try_eval_scalar(e.args[0], env);
      if (!a) return std::nullopt;
      auto b = try_eval_scalar(e.args[1], env);
      if (!b) return std::nullopt;
      return apply(e.text[0], *a, *b);
    }
    case K::Call: {
      if (e.text != "sqrt" || !e.targs.empty() || e.has_args2 || e.args.size() != 1) return std::nullopt;
      auto x = try_eval_scalar(e.args[0], env);
      if (!x) return std::nullopt;
      if (x->value < 0) throw FrontendError("sqrt of a negative constant");
      return Scalar::of(std::sqrt(x->value));
    }
    default: return std::nullopt;
  }
}

Scalar eval_scalar(const Expr& e, const ScalarEnv& env) {
  auto s = try_eval_scalar(e, env);
  if (!s) throw FrontendError("'" + print(e) + "' is not a constant");
  return *s;
}

Expr scalar_literal(const Scalar& s) {
  bool neg = s.exact ? s.q.num < 0 : s.value < 0;
  Scalar m = neg ? negate(s) : s;
  std::string text = m.is_integer() ? std::to_string(m.q.num) : rel::format_double(m.value);
  Expr lit = Expr::number(text);
  if (!neg) return lit;
  Expr e;
  e.kind = Expr::Kind::Neg;
  e.args = {lit};
  return e;
}

namespace {

using Subst = std::map<std::string, Expr>;

Expr value_literal(const rel::Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return scalar_literal(Scalar::integer(*i));
  if (auto* d = std::get_if<double>(&v)) return scalar_literal(Scalar::of(*d));
  if (auto* b = std::get_if<bool>(&v)) return Expr::string(*b ? "true" : "false");
  return Expr::string(std::get<std::string>(v));
}

std::string key_of(const std::string& name, const std::vector<Expr>& targs) {
  std::string k = name + "<";
  for (std::size_t i = 0; i < targs.size(); ++i) k += (i ? "," : "") + print(targs[i]);
  return k + ">";
}

bool is_var(const Expr& t) { return t.kind == Expr::Kind::Name && t.targs.empty() && t.text != "_"; }

struct Template {
  Statement stmt;
  std::vector<std::string> params;
};

struct Scope {
  std::map<std::string, std::vector<Template>> templates;
  std::set<std::string> instances;
  Program* out = nullptr;
};

class Expander {
 public:
  explicit Expander(const ExpandContext& ctx) : ctx_(ctx) {}

  Program run(const Program& program) {
    Program out;
    scopes_.push_back(Scope{{}, {}, &out});
    for (const auto& s : program) process(s, {});
    scopes_.pop_back();
    return out;
  }

 private:
  const ExpandContext& ctx_;
  ScalarEnv env_;
  std::vector<Scope> scopes_;
  std::set<std::string> in_progress_;

  // --- substitution -------------------------------------------------------

  // Template argument: substitute, then fold to a literal when possible.
  Expr targ(const Expr& e, const Subst& sub) {
    Expr r = subst(e, sub);
    if (r.kind == Expr::Kind::String) return r;
    if (auto s = try_eval_scalar(r, env_)) return scalar_literal(*s);
    return r;
  }

  std::vector<Expr> targs(const std::vector<Expr>& xs, const Subst& sub) {
    std::vector<Expr> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(targ(x, sub));
    return out;
  }

  std::vector<Expr> concrete_targs(const std::string& name, const std::vector<Expr>& xs, const Subst& sub) {
    auto out = targs(xs, sub);
    for (const auto& t : out) {
      if (!is_literal(t) && t.kind != Expr::Kind::Neg) {
        throw FrontendError("template argument '" + print(t) + "' of " + name + " is not a constant");
      }
      if (t.kind == Expr::Kind::Neg) throw FrontendError("negative template argument for " + name);
    }
    return out;
  }

  Expr subst(const Expr& e, const Subst& sub) {
    if (e.kind == Expr::Kind::Name && e.targs.empty()) {
      auto it = sub.find(e.text);
      if (it != sub.end()) return it->second;
      return e;
    }
    Expr r = e;
    for (auto& t : r.targs) t = targ(t, sub);
    for (auto& a : r.args) a = subst(a, sub);
    for (auto& a : r.args2) a = subst(a, sub);
    return r;
  }

  // A name position (relation or call argument) taking a substituted literal.
  std::string subst_name(const std::string& name, const Subst& sub) {
    auto it = sub.find(name);
    if (it == sub.end()) return name;
    if (!is_literal(it->second)) throw FrontendError("parameter " + name + " used as a relation name");
    return it->second.text;
  }

  // --- templates ----------------------------------------------------------

  void ensure(const std::string& name, const std::vector<Expr>& args) {
    if (args.empty()) return;
    std::string key = key_of(name, args);
    for (std::size_t i = scopes_.size(); i-- > 0;) {
      if (scopes_[i].instances.count(key)) return;
      auto it = scopes_[i].templates.find(name);
      if (it == scopes_[i].templates.end()) continue;
      for (const auto& t : it->second) {
        if (t.params.size() == args.size()) {
          instantiate(t, args, i, key);
          return;
        }
      }
      throw FrontendError("no template " + name + " with " + std::to_string(args.size()) + " arguments");
    }
    throw FrontendError("unknown template " + name);
  }

  void instantiate(Template t, const std::vector<Expr>& args, std::size_t scope, const std::string& key) {
    if (in_progress_.count(key)) throw FrontendError("recursive template instantiation of " + key);
    in_progress_.insert(key);
    Subst sub;
    for (std::size_t i = 0; i < args.size(); ++i) sub[t.params[i]] = args[i];
    std::vector<Scope> saved(std::make_move_iterator(scopes_.begin() + static_cast<std::ptrdiff_t>(scope) + 1),
                             std::make_move_iterator(scopes_.end()));
    scopes_.resize(scope + 1);
    try {
      process(t.stmt, sub, &args);
    } catch (...) {
      for (auto& s : saved) scopes_.push_back(std::move(s));
      in_progress_.erase(key);
      throw;
    }
    for (auto& s : saved) scopes_.push_back(std::move(s));
    in_progress_.erase(key);
  }

  void ensure_in(const Expr& e) {
    if ((e.kind == Expr::Kind::Name || e.kind == Expr::Kind::Call) && !e.targs.empty()) {
      for (const auto& t : e.targs) {
        if (!is_literal(t)) throw FrontendError("template argument '" + print(t) + "' is not a constant");
      }
      ensure(e.text, e.targs);
    }
    for (const auto& a : e.args) ensure_in(a);
    for (const auto& a : e.args2) ensure_in(a);
  }

  // --- statements ---------------------------------------------------------

  void emit(Statement s) {
    std::string key = key_of(defined_name(s), defined_targs(s));
    if (!defined_name(s).empty()) scopes_.back().instances.insert(key);
    scopes_.back().out->push_back(std::move(s));
  }

  // forced: literal targs of an instance being materialized.
  void process(const Statement& s, const Subst& sub, const std::vector<Expr>* forced = nullptr) {
    if (!forced && (std::holds_alternative<AliasStmt>(s.node) || std::holds_alternative<RuleStmt>(s.node) ||
                    std::holds_alternative<FunctionDef>(s.node))) {
      auto params = template_params(targs(defined_targs(s), sub));
      if (!params.empty()) {
        Subst inner = sub;
        for (const auto& p : params) inner.erase(p);
        Statement body = s;
        set_targs(body, [&] {
          std::vector<Expr> v;
          for (const auto& p : params) v.push_back(Expr::name(p));
          return v;
        }());
        // Outer parameters are bound now; own parameters stay symbolic.
        body = substitute_only(body, inner);
        auto& list = scopes_.back().templates[defined_name(s)];
        for (const auto& t : list) {
          if (t.params.size() == params.size()) throw FrontendError("template " + defined_name(s) + " defined twice");
        }
        list.push_back(Template{std::move(body), params});
        return;
      }
    }
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, AliasStmt>) {
            AliasStmt a = n;
            a.targs = forced ? *forced : concrete_targs(a.name, a.targs, sub);
            a.value = subst(a.value, sub);
            ensure_in(a.value);
            if (a.targs.empty()) {
              if (auto v = try_eval_scalar(a.value, env_)) env_[a.name] = *v;
            }
            emit(Statement{std::move(a), s.pos});
          } else if constexpr (std::is_same_v<T, RuleStmt>) {
            RuleStmt r = expand_rule(n, sub);
            r.head.targs = forced ? *forced : concrete_targs(r.head.name, r.head.targs, sub);
            emit(Statement{std::move(r), s.pos});
          } else if constexpr (std::is_same_v<T, FunctionDef>) {
            FunctionDef f;
            f.name = n.name;
            f.targs = forced ? *forced : concrete_targs(n.name, n.targs, sub);
            f.params = n.params;
            scopes_.push_back(Scope{{}, {}, &f.body});
            try {
              for (const auto& b : n.body) process(b, sub);
            } catch (...) {
              scopes_.pop_back();
              throw;
            }
            scopes_.pop_back();
            emit(Statement{std::move(f), s.pos});
          } else if constexpr (std::is_same_v<T, FitStmt>) {
            FitStmt f = n;
            f.target = subst_name(f.target, sub);
            f.targs = concrete_targs(f.target, f.targs, sub);
            for (auto& kv : f.kwargs) kv.second = subst(kv.second, sub);
            ensure(f.target, f.targs);
            scopes_.back().out->push_back(Statement{std::move(f), s.pos});
          } else {
            PredStmt p = n;
            p.target = subst_name(p.target, sub);
            p.targs = concrete_targs(p.target, p.targs, sub);
            ensure(p.target, p.targs);
            scopes_.back().out->push_back(Statement{std::move(p), s.pos});
          }
        },
        s.node);
  }

  static void set_targs(Statement& s, std::vector<Expr> t) {
    if (auto* a = std::get_if<AliasStmt>(&s.node)) a->targs = std::move(t);
    if (auto* r = std::get_if<RuleStmt>(&s.node)) r->head.targs = std::move(t);
    if (auto* f = std::get_if<FunctionDef>(&s.node)) f->targs = std::move(t);
  }

  // Substitution without instantiation, for stored template bodies.
  Statement substitute_only(const Statement& s, const Subst& sub) {
    if (sub.empty()) return s;
    Statement r = s;
    std::visit(
        [&](auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, AliasStmt>) {
            n.value = subst(n.value, sub);
          } else if constexpr (std::is_same_v<T, RuleStmt>) {
            if (n.head.tau) n.head.tau = subst(*n.head.tau, sub);
            for (auto& a : n.atoms) {
              a.name = subst_name(a.name, sub);
              for (auto& t : a.targs) t = targ(t, sub);
              for (auto& c : a.call_args) c = subst(c, sub);
              for (auto& t : a.terms) t = subst(t, sub);
              if (a.rep) {
                auto& d = a.rep->domain;
                Subst inner = sub;
                if (d.is_range) {
                  d.from = subst(d.from, sub);
                  d.to = subst(d.to, sub);
                  inner.erase(d.var);
                } else {
                  d.relation = subst_name(d.relation, sub);
                  for (auto& t : d.terms) t = subst(t, sub);
                }
              }
            }
            for (auto& f : n.filters) {
              f.lhs = subst(f.lhs, sub);
              f.rhs = subst(f.rhs, sub);
            }
          } else if constexpr (std::is_same_v<T, FunctionDef>) {
            for (auto& b : n.body) {
              Subst inner = sub;
              for (const auto& p : template_params(defined_targs(b))) inner.erase(p);
              b = substitute_only(b, inner);
            }
          }
        },
        r.node);
    return r;
  }

  // --- rules and replicators ----------------------------------------------

  std::vector<Subst> domain_bindings(const Domain& d, const Subst& sub) {
    std::vector<Subst> out;
    if (d.is_range) {
      Expr from = subst(d.from, sub), to = subst(d.to, sub);
      auto a = eval_scalar(from, env_).as_integer("replicator bound");
      auto b = eval_scalar(to, env_).as_integer("replicator bound");
      if (b < a) throw FrontendError("empty replicator range [" + d.var + " = " + print(from) + " to " + print(to) + "]");
      for (auto i = a; i <= b; ++i) out.push_back(Subst{{d.var, scalar_literal(Scalar::integer(i))}});
      return out;
    }
    std::string rel = subst_name(d.relation, sub);
    std::optional<std::vector<rel::Tuple>> rows;
    if (ctx_.relation_rows) rows = ctx_.relation_rows(rel);
    if (!rows) throw FrontendError("replicator domain " + rel + " has no data at compile time");
    std::vector<std::string> seen;
    for (const auto& row : *rows) {
      if (row.size() != d.terms.size()) {
        throw FrontendError("replicator domain " + rel + " has arity " + std::to_string(row.size()));
      }
      Subst b;
      std::string sig;
      bool ok = true;
      for (std::size_t c = 0; c < row.size() && ok; ++c) {
        Expr lit = value_literal(row[c]);
        Expr term = subst(d.terms[c], sub);
        if (term.kind == Expr::Kind::Name && term.text == "_") continue;
        if (is_var(term)) {
          auto it = b.find(term.text);
          if (it != b.end()) {
            ok = it->second == lit;
          } else {
            b[term.text] = lit;
            sig += term.text + "=" + print(lit) + ";";
          }
        } else {
          Expr t = term.kind == Expr::Kind::String ? term : targ(term, {});
          ok = t == lit || (t.kind == Expr::Kind::String && lit.kind == Expr::Kind::Number && t.text == lit.text) ||
               (lit.kind == Expr::Kind::String && t.kind == Expr::Kind::Number && t.text == lit.text);
        }
      }
      if (!ok) continue;
      if (std::find(seen.begin(), seen.end(), sig) != seen.end()) continue;
      seen.push_back(sig);
      out.push_back(std::move(b));
    }
    if (out.empty()) throw FrontendError("replicator domain " + rel + " selects no rows");
    return out;
  }

  Atom concrete_atom(const Atom& a, const Subst& sub) {
    Atom r = a;
    r.rep.reset();
    r.name = subst_name(a.name, sub);
    r.targs = concrete_targs(r.name, a.targs, sub);
    for (auto& c : r.call_args) {
      if (c.kind != Expr::Kind::Name) throw FrontendError("call argument '" + print(c) + "' must name a relation");
      c.text = subst_name(c.text, sub);
      c.targs = concrete_targs(c.text, c.targs, sub);
      ensure(c.text, c.targs);
    }
    for (auto& t : r.terms) {
      if (t.kind == Expr::Kind::Name && t.targs.empty()) {
        auto it = sub.find(t.text);
        if (it != sub.end()) t = it->second;
      }
    }
    ensure(r.name, r.targs);
    return r;
  }

  static void splat(Expr& e, const std::map<std::string, std::vector<std::string>>& fans, bool allowed) {
    if (e.kind == Expr::Kind::Splat) {
      throw FrontendError("*" + e.text + " is only allowed as an argument of Concat, Sum or Prod");
    }
    if (e.kind == Expr::Kind::Call && (e.text == "Concat" || e.text == "Sum" || e.text == "Prod") && allowed) {
      std::vector<Expr> args;
      for (auto& a : e.args) {
        if (a.kind == Expr::Kind::Splat) {
          auto it = fans.find(a.text);
          if (it == fans.end()) throw FrontendError("*" + a.text + " does not name a replicated variable");
          for (const auto& v : it->second) args.push_back(Expr::name(v));
        } else {
          splat(a, fans, allowed);
          args.push_back(a);
        }
      }
      e.args = std::move(args);
      for (auto& a : e.args2) splat(a, fans, allowed);
      return;
    }
    for (auto& a : e.args) splat(a, fans, allowed);
    for (auto& a : e.args2) splat(a, fans, allowed);
  }

  RuleStmt expand_rule(const RuleStmt& in, const Subst& sub) {
    RuleStmt r;
    r.head = in.head;
    r.is_union = in.is_union;
    std::map<std::string, std::vector<std::string>> fans;
    for (const auto& a : in.atoms) {
      if (!a.rep) {
        r.atoms.push_back(concrete_atom(a, sub));
        continue;
      }
      auto bindings = domain_bindings(a.rep->domain, sub);
      if (a.rep->join) {
        if (in.is_union) throw FrontendError("',...' replicator inside a union rule");
        std::vector<std::string> names;
        for (std::size_t k = 0; k < bindings.size(); ++k) {
          Subst s = sub;
          for (auto& [n, v] : bindings[k]) s[n] = v;
          Atom c = concrete_atom(a, s);
          if (!c.emb.empty()) {
            c.emb = a.emb + "_" + std::to_string(k + 1);
            names.push_back(c.emb);
          }
          r.atoms.push_back(std::move(c));
        }
        if (!a.emb.empty()) fans[a.emb] = names;
      } else {
        if (in.atoms.size() != 1) throw FrontendError("a '|...' replicator must be the only atom of its rule");
        r.is_union = true;
        for (const auto& b : bindings) {
          Subst s = sub;
          for (auto& [n, v] : b) s[n] = v;
          r.atoms.push_back(concrete_atom(a, s));
        }
      }
    }
    if (r.head.tau) {
      Expr tau = subst(*r.head.tau, sub);
      splat(tau, fans, true);
      ensure_in(tau);
      r.head.tau = std::move(tau);
    }
    for (const auto& f : in.filters) r.filters.push_back(Filter{f.op, subst(f.lhs, sub), subst(f.rhs, sub)});
    return r;
  }
};

}  // namespace

Program expand_templates(const Program& program, const ExpandContext& ctx) {
  Expander e(ctx);
  return e.run(program);
}

}  // namespace relnn::frontend

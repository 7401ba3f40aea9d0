#include <algorithm>
#include <map>
#include <set>

#include "relnn/frontend/expand.hpp"

namespace relnn::frontend {

namespace {

std::string key_of(const std::string& name, const std::vector<Expr>& targs) {
  std::string k = name + "<";
  for (std::size_t i = 0; i < targs.size(); ++i) k += (i ? "," : "") + print(targs[i]);
  return k + ">";
}

class Inliner {
 public:
  Program run(const Program& program) {
    for (const auto& s : program) top(s);
    return std::move(out_);
  }

 private:
  std::map<std::string, FunctionDef> functions_;
  std::map<std::string, int> calls_;
  std::map<std::string, std::string> shared_;  // zero-parameter function -> relation
  std::vector<std::string> stack_;
  std::set<std::string> aliases_;
  Program out_;

  void top(const Statement& s) {
    if (auto* f = std::get_if<FunctionDef>(&s.node)) {
      std::string key = key_of(f->name, f->targs);
      if (functions_.count(key)) throw FrontendError("function " + key + " defined twice");
      functions_[key] = *f;
    } else if (auto* r = std::get_if<RuleStmt>(&s.node)) {
      rule(*r, s.pos);
    } else if (std::holds_alternative<AliasStmt>(s.node)) {
      alias(s);
    } else {
      out_.push_back(s);
    }
  }

  void alias(const Statement& s) {
    // Aliases declared inside function bodies are global; copies coming from
    // several call sites collapse to one.
    std::string text = print(s);
    if (aliases_.insert(text).second) out_.push_back(s);
  }

  const FunctionDef* function_of(const std::string& name, const std::vector<Expr>& targs) const {
    auto it = functions_.find(key_of(name, targs));
    return it == functions_.end() ? nullptr : &it->second;
  }

  // Relation name a call argument refers to; zero-parameter functions are
  // expanded on first use.
  std::string argument(const Expr& a) {
    if (a.kind != Expr::Kind::Name) throw FrontendError("call argument '" + print(a) + "' must name a relation");
    if (const FunctionDef* f = function_of(a.text, a.targs)) {
      if (!f->params.empty()) throw FrontendError("function " + a.text + " passed without arguments");
      return expand(*f, {});
    }
    return mangle(a.text, a.targs);
  }

  void rule(RuleStmt r, SourcePos pos) {
    for (auto& a : r.atoms) {
      const FunctionDef* f = function_of(a.name, a.targs);
      if (!f) {
        if (a.is_call && a.name != "Softmax") throw FrontendError("unknown function " + a.name);
        continue;
      }
      if (!a.is_call && !f->params.empty()) {
        throw FrontendError("function " + a.name + " needs " + std::to_string(f->params.size()) + " arguments");
      }
      if (a.call_args.size() != f->params.size()) {
        throw FrontendError("function " + a.name + " takes " + std::to_string(f->params.size()) + " arguments, got " +
                            std::to_string(a.call_args.size()));
      }
      std::vector<std::string> args;
      for (const auto& c : a.call_args) args.push_back(argument(c));
      a.name = expand(*f, args);
      a.targs.clear();
      a.is_call = false;
      a.call_args.clear();
    }
    for (auto& a : r.atoms) {
      for (auto& c : a.call_args) {
        c = Expr::name(argument(c));
      }
    }
    out_.push_back(Statement{std::move(r), pos});
  }

  std::string expand(const FunctionDef& f, const std::vector<std::string>& args) {
    const std::string key = key_of(f.name, f.targs);
    if (f.params.empty()) {
      auto it = shared_.find(key);
      if (it != shared_.end()) return it->second;
    }
    if (std::find(stack_.begin(), stack_.end(), key) != stack_.end()) {
      throw FrontendError("recursive call of function " + f.name);
    }
    const std::string base = mangle(f.name, f.targs);
    const std::string prefix = f.params.empty() ? base + "_" : base + "_" + std::to_string(++calls_[key]) + "_";

    std::map<std::string, std::string> rename;
    for (std::size_t i = 0; i < f.params.size(); ++i) rename[key_of(f.params[i], {})] = args[i];
    std::string last;
    for (const auto& b : f.body) {
      if (auto* r = std::get_if<RuleStmt>(&b.node)) {
        std::string local = mangle(r->head.name, r->head.targs);
        rename[key_of(r->head.name, r->head.targs)] = prefix + local;
      }
    }
    stack_.push_back(key);
    for (const auto& b : f.body) {
      if (std::holds_alternative<AliasStmt>(b.node)) {
        alias(b);
      } else if (auto* r = std::get_if<RuleStmt>(&b.node)) {
        RuleStmt c = *r;
        c.head.name = rename.at(key_of(r->head.name, r->head.targs));
        c.head.targs.clear();
        for (auto& a : c.atoms) {
          auto it = rename.find(key_of(a.name, a.targs));
          if (it != rename.end()) {
            a.name = it->second;
            a.targs.clear();
          }
          for (auto& ca : a.call_args) {
            auto jt = rename.find(key_of(ca.text, ca.targs));
            if (jt != rename.end()) ca = Expr::name(jt->second);
          }
        }
        last = c.head.name;
        rule(std::move(c), b.pos);
      } else if (std::holds_alternative<FunctionDef>(b.node)) {
        throw FrontendError("nested function definition in " + f.name);
      } else {
        throw FrontendError("?fit and ?pred are not allowed inside function " + f.name);
      }
    }
    stack_.pop_back();
    if (last.empty() || !std::holds_alternative<RuleStmt>(f.body.back().node)) {
      throw FrontendError("function " + f.name + " must end with a rule");
    }
    if (f.params.empty()) shared_[key] = last;
    return last;
  }
};

void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Name && e.targs.empty()) out.insert(e.text);
  for (const auto& a : e.args) collect_vars(a, out);
  for (const auto& a : e.args2) collect_vars(a, out);
}

void encode_items(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == Expr::Kind::Bracket) out.push_back(&e);
  for (const auto& a : e.args) encode_items(a, out);
  for (const auto& a : e.args2) encode_items(a, out);
}

std::vector<std::string> atom_vars(const Atom& a) {
  std::vector<std::string> v;
  for (const auto& t : a.terms) {
    if (t.kind == Expr::Kind::Name && t.targs.empty() && t.text != "_") v.push_back(t.text);
  }
  return v;
}

}  // namespace

Program inline_functions(const Program& program) {
  Inliner in;
  return in.run(program);
}

void check_range_restriction(const Program& flat) {
  for (const auto& s : flat) {
    const auto* r = std::get_if<RuleStmt>(&s.node);
    if (!r) continue;
    const std::string where = "rule " + mangle(r->head.name, r->head.targs);
    std::set<std::string> content, emb;
    for (const auto& a : r->atoms) {
      for (const auto& v : atom_vars(a)) content.insert(v);
      if (!a.emb.empty()) emb.insert(a.emb);
    }
    if (r->is_union) {
      for (const auto& a : r->atoms) {
        if (atom_vars(a) != atom_vars(r->atoms[0]) || a.emb != r->atoms[0].emb) {
          throw FrontendError(where + ": union alternatives must use the same variables");
        }
      }
    }
    for (const auto& t : r->head.terms) {
      if (t.decode) {
        if (!emb.count(t.var)) throw FrontendError(where + ": decoded variable " + t.var + " is not an embedding variable");
      } else if (!content.count(t.var)) {
        throw FrontendError(where + ": head variable " + t.var + " is not bound by the body");
      }
    }
    if (r->head.tau) {
      std::vector<const Expr*> items;
      encode_items(*r->head.tau, items);
      for (const Expr* b : items) {
        std::set<std::string> vs;
        for (const auto& x : b->args) collect_vars(x, vs);
        for (const auto& v : vs) {
          if (!content.count(v)) throw FrontendError(where + ": encoded attribute " + v + " is not bound by the body");
        }
      }
    }
  }
}

}  // namespace relnn::frontend

#include "relnn/frontend/parser.hpp"

#include <cctype>

namespace relnn::frontend {

namespace {

[[noreturn]] void error_at(SourcePos p, const std::string& msg) {
  throw FrontendError("line " + std::to_string(p.line) + ", col " + std::to_string(p.col) + ": " + msg);
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

struct Multi {
  const char* text;
  const char* norm;
};

// Longest first.
constexpr Multi kMulti[] = {
    {",...", ",..."}, {"|...", "|..."}, {":-", ":-"}, {"<=", "<="}, {">=", ">="}, {"!=", "!="},
    {"\xE2\x89\xA0", "!="},  // ≠
    {"\xE2\x89\xA4", "<="},  // ≤
    {"\xE2\x89\xA5", ">="},  // ≥
    {"\xE2\x9F\xA8", "<"},   // ⟨
    {"\xE2\x9F\xA9", ">"},   // ⟩
    {"\xE2\x88\x92", "-"},   // minus sign
};

constexpr const char* kSingle = "(),;.:|[]<>=+-*/@?";

}  // namespace

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else if ((static_cast<unsigned char>(src[i]) & 0xC0) != 0x80) {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.pos = {line, col};
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      t.kind = Token::Kind::Ident;
      t.text = src.substr(i, j - i);
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (digit(c)) {
      std::size_t j = i;
      while (j < src.size() && digit(src[j])) ++j;
      if (j + 1 < src.size() && src[j] == '.' && digit(src[j + 1])) {
        ++j;
        while (j < src.size() && digit(src[j])) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && digit(src[k])) {
          while (k < src.size() && digit(src[k])) ++k;
          j = k;
        }
      }
      if (j < src.size() && ident_char(src[j])) error_at(t.pos, "malformed number");
      t.kind = Token::Kind::Number;
      t.text = src.substr(i, j - i);
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (c == '\'' || c == '"') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != c && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != c) error_at(t.pos, "unterminated string literal");
      t.kind = Token::Kind::String;
      t.text = src.substr(i + 1, j - i - 1);
      advance(j + 1 - i);
      out.push_back(std::move(t));
      continue;
    }
    // ".T" postfix transpose: no space, and T is not the start of a longer name.
    if (c == '.' && i + 1 < src.size() && src[i + 1] == 'T' &&
        (i + 2 >= src.size() || !ident_char(src[i + 2]))) {
      t.kind = Token::Kind::Punct;
      t.text = ".T";
      advance(2);
      out.push_back(std::move(t));
      continue;
    }
    bool matched = false;
    for (const auto& m : kMulti) {
      const std::string s = m.text;
      if (src.compare(i, s.size(), s) == 0) {
        t.kind = Token::Kind::Punct;
        t.text = m.norm;
        advance(s.size());
        out.push_back(std::move(t));
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string(kSingle).find(c) != std::string::npos) {
      t.kind = Token::Kind::Punct;
      t.text = std::string(1, c);
      advance(1);
      out.push_back(std::move(t));
      continue;
    }
    error_at(t.pos, std::string("unexpected character '") + c + "'");
  }
  Token end;
  end.kind = Token::Kind::End;
  end.pos = {line, col};
  out.push_back(end);
  return out;
}

namespace {

// Thrown internally when a speculative parse fails.
struct Backtrack {};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Program program() {
    Program out;
    while (!at_end()) out.push_back(statement(false));
    return out;
  }

 private:
  std::vector<Token> t_;
  std::size_t p_ = 0;
  bool speculative_ = false;

  const Token& peek(std::size_t k = 0) const { return t_[std::min(p_ + k, t_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is(const char* punct, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::Punct && peek(k).text == punct;
  }
  bool is_ident(const char* word, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::Ident && peek(k).text == word;
  }

  [[noreturn]] void fail(const std::string& what) {
    if (speculative_) throw Backtrack{};
    const Token& tok = peek();
    std::string found = tok.kind == Token::Kind::End ? "end of input" : "'" + tok.text + "'";
    error_at(tok.pos, "expected " + what + ", found " + found);
  }

  void expect(const char* punct) {
    if (!is(punct)) fail(std::string("'") + punct + "'");
    ++p_;
  }

  bool accept(const char* punct) {
    if (!is(punct)) return false;
    ++p_;
    return true;
  }

  std::string ident(const char* what = "identifier") {
    if (peek().kind != Token::Kind::Ident) fail(what);
    return t_[p_++].text;
  }

  // ---- statements -------------------------------------------------------

  Statement statement(bool in_def) {
    Statement s;
    s.pos = peek().pos;
    if (is_ident("def")) {
      s.node = function_def();
      return s;
    }
    if (is_ident("enddef")) {
      if (!in_def) fail("statement");
    }
    if (is("?")) {
      ++p_;
      if (is_ident("fit")) {
        ++p_;
        FitStmt f;
        if (accept("<")) {
          if (!is(">")) {
            do {
              std::string key = ident("keyword argument");
              expect("=");
              f.kwargs.emplace_back(key, expr(true));
            } while (accept(","));
          }
          expect(">");
        }
        f.target = ident("loss relation name");
        f.targs = opt_targs();
        expect(".");
        s.node = std::move(f);
        return s;
      }
      if (is_ident("pred")) {
        ++p_;
        PredStmt pr;
        pr.target = ident("relation name");
        pr.targs = opt_targs();
        expect(".");
        s.node = std::move(pr);
        return s;
      }
      fail("'fit' or 'pred' after '?'");
    }
    if (peek().kind != Token::Kind::Ident) fail("statement");
    // Alias: name targs? '=' ...
    const std::size_t save = p_;
    std::string name = ident();
    std::vector<Expr> targs = opt_targs();
    if (accept("=")) {
      AliasStmt a;
      a.name = std::move(name);
      a.targs = std::move(targs);
      a.value = expr(true);
      expect(".");
      s.node = std::move(a);
      return s;
    }
    p_ = save;
    s.node = rule();
    return s;
  }

  FunctionDef function_def() {
    ++p_;  // def
    FunctionDef f;
    f.name = ident("function name");
    f.targs = opt_targs();
    expect("(");
    if (!is(")")) {
      do {
        f.params.push_back(ident("parameter name"));
      } while (accept(","));
    }
    expect(")");
    expect(":");
    while (!is_ident("enddef")) {
      if (at_end()) fail("'enddef'");
      f.body.push_back(statement(true));
    }
    ++p_;
    accept(".");
    if (f.body.empty()) error_at(peek().pos, "function " + f.name + " has an empty body");
    return f;
  }

  std::vector<Expr> opt_targs() {
    std::vector<Expr> out;
    if (!accept("<")) return out;
    do {
      out.push_back(expr(true));
    } while (accept(","));
    expect(">");
    return out;
  }

  RuleStmt rule() {
    RuleStmt r;
    r.head = head();
    expect(":-");
    body(r);
    expect(".");
    return r;
  }

  Head head() {
    Head h;
    h.name = ident("relation name");
    h.targs = opt_targs();
    expect("(");
    if (!is(";") && !is(")")) {
      do {
        HeadTerm term;
        if (accept("[")) {
          term.var = ident("embedding variable");
          term.decode = true;
          expect("]");
        } else {
          term.var = ident("content variable");
        }
        h.terms.push_back(std::move(term));
      } while (accept(","));
    }
    if (accept(";")) {
      h.has_emb = true;
      if (!is(")")) {
        Expr tau = expr(true);
        static const char* kAggs[] = {"sum", "mean", "max"};
        bool is_agg = false;
        if (tau.kind == Expr::Kind::Call && tau.targs.empty() && !tau.has_args2 && tau.args.size() == 1) {
          for (const char* a : kAggs) is_agg = is_agg || tau.text == a;
        }
        if (is_agg) {
          h.agg = tau.text;
          h.tau = std::move(tau.args[0]);
        } else {
          h.tau = std::move(tau);
        }
      }
    }
    expect(")");
    return h;
  }

  void body(RuleStmt& r) {
    auto first = item();
    if (auto* a = std::get_if<Atom>(&first); a && is("|")) {
      r.is_union = true;
      r.atoms.push_back(std::move(*a));
      while (accept("|")) r.atoms.push_back(atom_strict());
      while (accept(",")) r.filters.push_back(filter());
      return;
    }
    auto add = [&](std::variant<Atom, Filter> it) {
      if (auto* a = std::get_if<Atom>(&it)) {
        r.atoms.push_back(std::move(*a));
      } else {
        r.filters.push_back(std::move(std::get<Filter>(it)));
      }
    };
    add(std::move(first));
    while (accept(",")) add(item());
    if (r.atoms.empty()) fail("at least one body relation");
  }

  std::variant<Atom, Filter> item() {
    const std::size_t save = p_;
    if (peek().kind == Token::Kind::Ident) {
      const bool was = speculative_;
      speculative_ = true;
      try {
        Atom a = atom();
        speculative_ = was;
        return a;
      } catch (const Backtrack&) {
        speculative_ = was;
        p_ = save;
      }
    }
    return filter();
  }

  Atom atom_strict() {
    if (peek().kind != Token::Kind::Ident) fail("body relation");
    return atom();
  }

  Atom atom() {
    Atom a;
    a.pos = peek().pos;
    a.name = ident("relation name");
    a.targs = opt_targs();
    expect("(");
    std::vector<Expr> first;
    bool first_has_emb = false;
    std::string first_emb;
    terms(first, first_has_emb, first_emb);
    expect(")");
    if (is("(")) {
      if (first_has_emb) fail("',' or ')' in call arguments");
      for (const auto& e : first) {
        if (e.kind != Expr::Kind::Name || e.text == "_") fail("relation name as call argument");
      }
      a.is_call = true;
      a.call_args = std::move(first);
      expect("(");
      terms(a.terms, a.has_emb, a.emb);
      expect(")");
    } else {
      for (const auto& e : first) {
        if (!e.targs.empty()) fail("content variable");
      }
      a.terms = std::move(first);
      a.has_emb = first_has_emb;
      a.emb = std::move(first_emb);
    }
    if (is(",...") || is("|...")) {
      Replicator rep;
      rep.join = is(",...");
      ++p_;
      expect("[");
      rep.domain = domain();
      expect("]");
      a.rep = std::move(rep);
    }
    return a;
  }

  void terms(std::vector<Expr>& out, bool& has_emb, std::string& emb) {
    if (!is(";") && !is(")")) {
      do {
        out.push_back(term());
      } while (accept(","));
    }
    if (accept(";")) {
      has_emb = true;
      if (peek().kind == Token::Kind::Ident) emb = ident();
    }
  }

  Expr term() {
    const Token& tok = peek();
    if (tok.kind == Token::Kind::Ident) {
      Expr e = Expr::name(ident());
      e.pos = tok.pos;
      if (is("<")) e.targs = opt_targs();
      return e;
    }
    if (tok.kind == Token::Kind::Number) {
      ++p_;
      return Expr::number(tok.text);
    }
    if (tok.kind == Token::Kind::String) {
      ++p_;
      return Expr::string(tok.text);
    }
    if (is("-") && peek(1).kind == Token::Kind::Number) {
      ++p_;
      Expr e;
      e.kind = Expr::Kind::Neg;
      e.args.push_back(Expr::number(t_[p_++].text));
      return e;
    }
    fail("content term");
  }

  Domain domain() {
    Domain d;
    std::string name = ident("iteration variable or relation");
    if (accept("=")) {
      d.is_range = true;
      d.var = std::move(name);
      d.from = expr(false);
      if (!is_ident("to")) fail("'to'");
      ++p_;
      d.to = expr(false);
      return d;
    }
    d.is_range = false;
    d.relation = std::move(name);
    expect("(");
    if (!is(")")) {
      do {
        d.terms.push_back(term());
      } while (accept(","));
    }
    expect(")");
    return d;
  }

  Filter filter() {
    Filter f;
    f.lhs = expr(false);
    static const std::pair<const char*, Cmp> kOps[] = {{"=", Cmp::Eq},  {"!=", Cmp::Ne}, {"<", Cmp::Lt},
                                                       {"<=", Cmp::Le}, {">", Cmp::Gt},  {">=", Cmp::Ge}};
    for (const auto& [text, op] : kOps) {
      if (is(text)) {
        ++p_;
        f.op = op;
        f.rhs = expr(false);
        return f;
      }
    }
    fail("comparison operator");
  }

  // ---- expressions --------------------------------------------------------
  // templates: whether Name<...> is read as template arguments (never inside
  // filters, where '<' compares).

  Expr expr(bool templates) {
    Expr e = mult(templates);
    while (is("+") || is("-")) {
      const char op = t_[p_++].text[0];
      e = Expr::binary(op, std::move(e), mult(templates));
    }
    return e;
  }

  Expr mult(bool templates) {
    Expr e = unary(templates);
    while (is("*") || is("/") || is("@")) {
      const char op = t_[p_++].text[0];
      e = Expr::binary(op, std::move(e), unary(templates));
    }
    return e;
  }

  Expr unary(bool templates) {
    const SourcePos pos = peek().pos;
    if (accept("-")) {
      Expr e;
      e.kind = Expr::Kind::Neg;
      e.pos = pos;
      e.args.push_back(unary(templates));
      return e;
    }
    if (accept("*")) {
      Expr e;
      e.kind = Expr::Kind::Splat;
      e.pos = pos;
      e.text = ident("variable after '*'");
      return e;
    }
    Expr e = primary(templates);
    while (accept(".T")) {
      Expr t;
      t.kind = Expr::Kind::Transpose;
      t.pos = pos;
      t.args.push_back(std::move(e));
      e = std::move(t);
    }
    return e;
  }

  std::vector<Expr> arg_list(bool templates) {
    std::vector<Expr> out;
    expect("(");
    if (!is(")")) {
      do {
        out.push_back(expr(templates));
      } while (accept(","));
    }
    expect(")");
    return out;
  }

  Expr primary(bool templates) {
    const Token& tok = peek();
    const SourcePos pos = tok.pos;
    switch (tok.kind) {
      case Token::Kind::Number: {
        ++p_;
        Expr e = Expr::number(tok.text);
        e.pos = pos;
        return e;
      }
      case Token::Kind::String: {
        ++p_;
        Expr e = Expr::string(tok.text);
        e.pos = pos;
        return e;
      }
      case Token::Kind::Ident: {
        if (tok.text == "def" || tok.text == "enddef") fail("expression");
        Expr e = Expr::name(ident());
        e.pos = pos;
        if (templates && is("<")) e.targs = opt_targs();
        if (is("(")) {
          e.kind = Expr::Kind::Call;
          e.args = arg_list(templates);
          if (is("(")) {
            e.has_args2 = true;
            e.args2 = arg_list(templates);
          }
        }
        return e;
      }
      case Token::Kind::Punct: {
        if (accept("(")) {
          Expr e = expr(templates);
          expect(")");
          return e;
        }
        if (accept("[")) {
          Expr e;
          e.kind = Expr::Kind::Bracket;
          e.pos = pos;
          do {
            e.args.push_back(expr(templates));
          } while (accept(","));
          expect("]");
          return e;
        }
        break;
      }
      default: break;
    }
    fail("expression");
  }
};

}  // namespace

Program parse(const std::string& source) { return Parser(lex(source)).program(); }

}  // namespace relnn::frontend

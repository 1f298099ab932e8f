#include "core/scenario.hpp"

#include <cctype>
#include <sstream>

namespace mg {

namespace {

struct Tok {
  enum class Kind : uint8_t { Ident, Num, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  uint64_t num = 0;
  char punct = 0;
};

class LineLexer {
 public:
  explicit LineLexer(const std::string& line) : s_(line) {}

  Tok next() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) i_++;
    if (i_ >= s_.size() || s_[i_] == '#') return Tok{};
    char c = s_[i_];
    if (std::isalpha(uint8_t(c)) || c == '_') {
      size_t start = i_;
      while (i_ < s_.size() &&
             (std::isalnum(uint8_t(s_[i_])) || s_[i_] == '_' || s_[i_] == '-'))
        i_++;
      return Tok{Tok::Kind::Ident, s_.substr(start, i_ - start), 0, 0};
    }
    if (std::isdigit(uint8_t(c))) {
      size_t start = i_;
      uint64_t v = 0;
      if (c == '0' && i_ + 1 < s_.size() &&
          (s_[i_ + 1] == 'x' || s_[i_ + 1] == 'X')) {
        i_ += 2;
        while (i_ < s_.size() && std::isxdigit(uint8_t(s_[i_]))) i_++;
        v = std::stoull(s_.substr(start + 2, i_ - start - 2), nullptr, 16);
      } else {
        while (i_ < s_.size() && std::isdigit(uint8_t(s_[i_]))) i_++;
        v = std::stoull(s_.substr(start, i_ - start));
      }
      return Tok{Tok::Kind::Num, s_.substr(start, i_ - start), v, 0};
    }
    i_++;
    return Tok{Tok::Kind::Punct, std::string(1, c), 0, c};
  }

  Tok peek() {
    size_t save = i_;
    Tok t = next();
    i_ = save;
    return t;
  }

 private:
  const std::string& s_;
  size_t i_ = 0;
};

ApiError parseErr(int line, const std::string& what) {
  std::ostringstream os;
  os << "line " << line << ": " << what;
  return ApiError{ErrorCode::ParseError, os.str()};
}

using ArgExpr = ScenarioStmt::ArgExpr;

// `{a, 3}` or `{a+, b-}`; caps=true requires a +/- suffix on each element.
Result<ArgExpr> parseSetLiteral(LineLexer& lex, int line, bool caps) {
  ArgExpr out;
  out.kind = caps ? ArgExpr::Kind::CapSet : ArgExpr::Kind::LabelSet;
  Tok t = lex.next();
  if (t.kind != Tok::Kind::Punct || t.punct != '{')
    return parseErr(line, "expected '{'");
  t = lex.next();
  if (t.kind == Tok::Kind::Punct && t.punct == '}') return out;
  while (true) {
    ArgExpr::SetElem e;
    if (t.kind == Tok::Kind::Ident) {
      e.isIdent = true;
      e.ident = t.text;
    } else if (t.kind == Tok::Kind::Num) {
      e.num = t.num;
    } else {
      return parseErr(line, "expected a tag name or number in set literal");
    }
    t = lex.next();
    if (caps) {
      if (t.kind == Tok::Kind::Punct && t.punct == '+') {
        e.plus = true;
        t = lex.next();
      } else if (t.kind == Tok::Kind::Punct && t.punct == '-') {
        e.minus = true;
        t = lex.next();
      } else {
        return parseErr(line, "capability needs a '+' or '-' suffix");
      }
    }
    out.elems.push_back(e);
    if (t.kind == Tok::Kind::Punct && t.punct == ',') {
      t = lex.next();
      continue;
    }
    if (t.kind == Tok::Kind::Punct && t.punct == '}') return out;
    return parseErr(line, "expected ',' or '}' in set literal");
  }
}

Result<ArgExpr> parseArg(LineLexer& lex, Tok first, int line) {
  ArgExpr a;
  if (first.kind == Tok::Kind::Num) {
    a.kind = ArgExpr::Kind::Int;
    a.num = first.num;
    return a;
  }
  if (first.kind == Tok::Kind::Ident) {
    if (auto p = permFromName(first.text)) {
      a.kind = ArgExpr::Kind::Perm;
      a.perm = *p;
      return a;
    }
    if (auto b = backingFromName(first.text)) {
      a.kind = ArgExpr::Kind::Backing;
      a.backing = *b;
      return a;
    }
    a.kind = ArgExpr::Kind::Ident;
    a.ident = first.text;
    return a;
  }
  if (first.kind == Tok::Kind::Punct && first.punct == '{') {
    // re-lex the set literal: distinguish caps from labels by peeking is
    // messy, so accept both shapes and mark caps when a sign shows up
    std::vector<ArgExpr::SetElem> elems;
    bool anySign = false;
    Tok t = lex.next();
    if (!(t.kind == Tok::Kind::Punct && t.punct == '}')) {
      while (true) {
        ArgExpr::SetElem e;
        if (t.kind == Tok::Kind::Ident) {
          e.isIdent = true;
          e.ident = t.text;
        } else if (t.kind == Tok::Kind::Num) {
          e.num = t.num;
        } else {
          return parseErr(line, "expected a tag name or number in set literal");
        }
        t = lex.next();
        if (t.kind == Tok::Kind::Punct && (t.punct == '+' || t.punct == '-')) {
          anySign = true;
          e.plus = t.punct == '+';
          e.minus = t.punct == '-';
          t = lex.next();
        }
        elems.push_back(e);
        if (t.kind == Tok::Kind::Punct && t.punct == ',') {
          t = lex.next();
          continue;
        }
        if (t.kind == Tok::Kind::Punct && t.punct == '}') break;
        return parseErr(line, "expected ',' or '}' in set literal");
      }
    }
    a.kind = anySign ? ArgExpr::Kind::CapSet : ArgExpr::Kind::LabelSet;
    a.elems = std::move(elems);
    return a;
  }
  return parseErr(line, "unexpected token in argument list");
}

Result<ScenarioStmt> parseCall(LineLexer& lex, Tok first, int line) {
  ScenarioStmt st;
  st.op = ScenarioStmt::Op::Call;
  st.line = line;
  Tok name = first;
  Tok t = lex.peek();
  if (t.kind == Tok::Kind::Punct && t.punct == '=') {
    lex.next();
    st.result = first.text;
    name = lex.next();
    if (name.kind != Tok::Kind::Ident)
      return parseErr(line, "expected a call name after '='");
  }
  st.callName = name.text;
  t = lex.next();
  if (t.kind != Tok::Kind::Punct || t.punct != '(')
    return parseErr(line, "expected '(' after call name");
  t = lex.next();
  if (!(t.kind == Tok::Kind::Punct && t.punct == ')')) {
    while (true) {
      auto a = parseArg(lex, t, line);
      if (!isOk(a)) return error(a);
      st.args.push_back(value(a));
      t = lex.next();
      if (t.kind == Tok::Kind::Punct && t.punct == ',') {
        t = lex.next();
        continue;
      }
      if (t.kind == Tok::Kind::Punct && t.punct == ')') break;
      return parseErr(line, "expected ',' or ')' in argument list");
    }
  }
  t = lex.next();
  if (t.kind != Tok::Kind::End)
    return parseErr(line, "trailing tokens after call");
  return st;
}

} // namespace

const ScenarioThread* Scenario::findThread(const std::string& n) const {
  for (const auto& t : threads)
    if (t.name == n) return &t;
  return nullptr;
}

size_t Scenario::statementCount() const {
  size_t n = 0;
  for (const auto& t : threads) n += t.stmts.size();
  return n;
}

Result<Scenario> parseScenario(const std::string& text,
                               const std::string& name) {
  Scenario sc;
  sc.name = name;
  ScenarioThread* current = nullptr;
  std::istringstream in(text);
  std::string raw;
  int lineNo = 0;

  while (std::getline(in, raw)) {
    lineNo++;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    LineLexer lex(raw);
    Tok t = lex.next();
    if (t.kind == Tok::Kind::End) continue;

    if (t.kind == Tok::Kind::Punct && t.punct == '}') {
      if (!current) return parseErr(lineNo, "'}' outside a thread block");
      if (lex.next().kind != Tok::Kind::End)
        return parseErr(lineNo, "trailing tokens after '}'");
      current = nullptr;
      continue;
    }
    if (t.kind != Tok::Kind::Ident)
      return parseErr(lineNo, "expected a statement");

    if (!current) {
      if (t.text == "config") {
        Tok key = lex.next();
        if (key.kind != Tok::Kind::Ident)
          return parseErr(lineNo, "config key expected");
        Tok val = lex.next();
        if (key.text == "backend") {
          auto b = val.kind == Tok::Kind::Ident ? backingFromName(val.text)
                                                : std::nullopt;
          if (!b) return parseErr(lineNo, "config backend md|mte|plain");
          sc.backend = *b;
        } else if (key.text == "domains") {
          if (val.kind != Tok::Kind::Num)
            return parseErr(lineNo, "config domains <n>");
          sc.domains = int(val.num);
        } else if (key.text == "seed") {
          if (val.kind != Tok::Kind::Num)
            return parseErr(lineNo, "config seed <n>");
          sc.seed = val.num;
        } else if (key.text == "guard-limit") {
          if (val.kind != Tok::Kind::Num)
            return parseErr(lineNo, "config guard-limit <n>");
          sc.guardLimit = uint32_t(val.num);
        } else {
          return parseErr(lineNo, "unknown config key: " + key.text);
        }
        if (lex.next().kind != Tok::Kind::End)
          return parseErr(lineNo, "trailing tokens after config");
        continue;
      }
      if (t.text == "thread") {
        Tok tn = lex.next();
        if (tn.kind != Tok::Kind::Ident)
          return parseErr(lineNo, "thread name expected");
        Tok brace = lex.next();
        if (brace.kind != Tok::Kind::Punct || brace.punct != '{')
          return parseErr(lineNo, "expected '{' after thread name");
        if (lex.next().kind != Tok::Kind::End)
          return parseErr(lineNo, "trailing tokens after '{'");
        if (sc.findThread(tn.text))
          return parseErr(lineNo, "duplicate thread name: " + tn.text);
        sc.threads.push_back({tn.text, {}});
        current = &sc.threads.back();
        continue;
      }
      return parseErr(lineNo, "statements must appear inside a thread block");
    }

    // inside a thread block
    if (t.text == "read" || t.text == "write" || t.text == "exec") {
      ScenarioStmt st;
      st.op = ScenarioStmt::Op::Access;
      st.line = lineNo;
      st.accessKind = t.text == "read"    ? AccessKind::Read
                      : t.text == "write" ? AccessKind::Write
                                          : AccessKind::Execute;
      Tok tgt = lex.next();
      if (tgt.kind == Tok::Kind::Ident) {
        st.target.kind = ArgExpr::Kind::Ident;
        st.target.ident = tgt.text;
      } else if (tgt.kind == Tok::Kind::Num) {
        st.target.kind = ArgExpr::Kind::Int;
        st.target.num = tgt.num;
      } else {
        return parseErr(lineNo, "access target expected");
      }
      Tok more = lex.next();
      if (more.kind == Tok::Kind::Punct && more.punct == '+') {
        Tok off = lex.next();
        if (off.kind != Tok::Kind::Num)
          return parseErr(lineNo, "numeric offset expected after '+'");
        st.offset = off.num;
        more = lex.next();
      }
      if (more.kind != Tok::Kind::End)
        return parseErr(lineNo, "trailing tokens after access target");
      current->stmts.push_back(std::move(st));
      continue;
    }
    if (t.text == "expect") {
      Tok what = lex.next();
      ScenarioStmt st;
      st.line = lineNo;
      if (what.kind == Tok::Kind::Ident && what.text == "fault") {
        Tok cause = lex.next();
        if (cause.kind != Tok::Kind::Ident)
          return parseErr(lineNo, "fault cause expected");
        auto c = faultCauseFromName(cause.text);
        if (!c) return parseErr(lineNo, "unknown fault cause: " + cause.text);
        st.op = ScenarioStmt::Op::ExpectFault;
        st.expectCause = *c;
      } else if (what.kind == Tok::Kind::Ident && what.text == "error") {
        Tok code = lex.next();
        if (code.kind != Tok::Kind::Ident)
          return parseErr(lineNo, "error code expected");
        auto c = errorCodeFromName(code.text);
        if (!c) return parseErr(lineNo, "unknown error code: " + code.text);
        st.op = ScenarioStmt::Op::ExpectError;
        st.expectError = *c;
      } else {
        return parseErr(lineNo, "expect fault <cause> or expect error <code>");
      }
      if (lex.next().kind != Tok::Kind::End)
        return parseErr(lineNo, "trailing tokens after expect");
      current->stmts.push_back(std::move(st));
      continue;
    }
    if (t.text == "spawn") {
      ScenarioStmt st;
      st.op = ScenarioStmt::Op::Spawn;
      st.line = lineNo;
      Tok tn = lex.next();
      if (tn.kind != Tok::Kind::Ident)
        return parseErr(lineNo, "spawn target thread expected");
      st.spawnThread = tn.text;
      Tok kw = lex.next();
      if (kw.kind != Tok::Kind::Ident || kw.text != "label")
        return parseErr(lineNo, "expected 'label' after spawn target");
      auto lbl = parseSetLiteral(lex, lineNo, /*caps=*/false);
      if (!isOk(lbl)) return error(lbl);
      st.spawnLabel = value(lbl);
      kw = lex.next();
      if (kw.kind != Tok::Kind::Ident || kw.text != "caps")
        return parseErr(lineNo, "expected 'caps' after label set");
      auto caps = parseSetLiteral(lex, lineNo, /*caps=*/true);
      if (!isOk(caps)) return error(caps);
      st.spawnCaps = value(caps);
      if (lex.next().kind != Tok::Kind::End)
        return parseErr(lineNo, "trailing tokens after spawn");
      current->stmts.push_back(std::move(st));
      continue;
    }
    auto call = parseCall(lex, t, lineNo);
    if (!isOk(call)) return error(call);
    current->stmts.push_back(value(call));
  }
  if (current) return parseErr(lineNo, "unterminated thread block");

  // Name resolution: every referenced identifier must be bound somewhere.
  std::set<std::string> declared{"main"};
  for (auto& th : sc.threads) {
    declared.insert(th.name);
    for (auto& st : th.stmts)
      if (!st.result.empty()) declared.insert(st.result);
  }
  auto checkIdent = [&](const std::string& id, int line) -> std::optional<ApiError> {
    if (!declared.count(id))
      return parseErr(line, "undeclared name: " + id);
    return std::nullopt;
  };
  for (auto& th : sc.threads) {
    for (auto& st : th.stmts) {
      auto checkExpr = [&](const ArgExpr& a) -> std::optional<ApiError> {
        if (a.kind == ArgExpr::Kind::Ident) return checkIdent(a.ident, st.line);
        if (a.kind == ArgExpr::Kind::LabelSet ||
            a.kind == ArgExpr::Kind::CapSet) {
          for (auto& e : a.elems)
            if (e.isIdent)
              if (auto err = checkIdent(e.ident, st.line)) return err;
        }
        return std::nullopt;
      };
      if (st.op == ScenarioStmt::Op::Call) {
        for (auto& a : st.args)
          if (auto err = checkExpr(a)) return *err;
      } else if (st.op == ScenarioStmt::Op::Access) {
        if (auto err = checkExpr(st.target)) return *err;
      } else if (st.op == ScenarioStmt::Op::Spawn) {
        if (!sc.findThread(st.spawnThread))
          return parseErr(st.line, "spawn of unknown thread: " + st.spawnThread);
        if (auto err = checkExpr(st.spawnLabel)) return *err;
        if (auto err = checkExpr(st.spawnCaps)) return *err;
      }
    }
  }
  return sc;
}

} // namespace mg

#pragma once

#include "core/types.hpp"

namespace mg {

// One scenario statement. Statements are one per line inside a thread block:
//
//   [name =] call(arg, ...)          syscall-surface call
//   read|write|exec target           memory access by the running thread
//   expect fault <cause>             previous statement faulted with cause
//   expect error <ErrorCode>         previous statement returned the error
//   spawn thread label {..} caps {..}
//
// Arguments are integers (decimal or 0x hex), identifiers, permission or
// backing keywords, label literals {a,b} and capability literals {a+,b-}.
struct ScenarioStmt {
  enum class Op : uint8_t {
    Call,
    Access,
    ExpectFault,
    ExpectError,
    Spawn,
  };
  struct ArgExpr {
    enum class Kind : uint8_t { Int, Ident, Perm, Backing, LabelSet, CapSet };
    Kind kind = Kind::Int;
    uint64_t num = 0;
    std::string ident;
    PagePerm perm = PagePerm::None;
    Backing backing = Backing::Plain;
    // label/cap literal elements: identifier or number, plus/minus flags for
    // capability literals
    struct SetElem {
      bool isIdent = false;
      uint64_t num = 0;
      std::string ident;
      bool plus = false;
      bool minus = false;
    };
    std::vector<SetElem> elems;
  };

  Op op = Op::Call;
  int line = 0;

  // Call
  std::string result; // optional bound name
  std::string callName;
  std::vector<ArgExpr> args;

  // Access
  AccessKind accessKind = AccessKind::Read;
  ArgExpr target;     // Ident or Int
  uint64_t offset = 0;

  // Expect
  FaultCause expectCause = FaultCause::PagePerm;
  ErrorCode expectError = ErrorCode::PermissionDenied;

  // Spawn
  std::string spawnThread;
  ArgExpr spawnLabel; // LabelSet
  ArgExpr spawnCaps;  // CapSet
};

struct ScenarioThread {
  std::string name;
  std::vector<ScenarioStmt> stmts;
};

struct Scenario {
  std::string name = "scenario";
  std::optional<Backing> backend;
  std::optional<int> domains;
  std::optional<uint64_t> seed;
  std::optional<uint32_t> guardLimit;
  std::vector<ScenarioThread> threads; // declaration order; "main" runs first

  const ScenarioThread* findThread(const std::string& n) const;
  size_t statementCount() const;
};

Result<Scenario> parseScenario(const std::string& text,
                               const std::string& name = "scenario");

} // namespace mg

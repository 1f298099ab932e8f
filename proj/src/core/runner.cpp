#include "core/runner.hpp"

#include <sstream>

#include "core/hash.hpp"
#include "core/oracle.hpp"

namespace mg {

namespace {

struct ThreadRun {
  const ScenarioThread* src = nullptr;
  PrincipalId pid = 0;
  size_t pc = 0;
  enum class St : uint8_t { NotStarted, Runnable, Blocked, Finished };
  St st = St::NotStarted;
  PrincipalId joinTarget = 0;
  std::optional<FaultCause> lastFault;
  std::optional<ErrorCode> lastError;
  uint32_t writeCount = 0;
};

class Run {
 public:
  Run(const Scenario& sc, Kernel& k, RunReport& rep, bool oracleCheck,
      uint64_t schedSeed)
      : sc_(sc), k_(k), rep_(rep), oracleCheck_(oracleCheck),
        sched_(schedSeed) {
    for (const auto& th : sc.threads) threads_.push_back(ThreadRun{&th});
  }

  void execute() {
    if (threads_.empty()) return;
    // the thread named "main" (or the first declared one) starts as the
    // initial principal
    size_t first = 0;
    for (size_t i = 0; i < threads_.size(); ++i)
      if (threads_[i].src->name == "main") first = i;
    threads_[first].pid = 0;
    threads_[first].st = ThreadRun::St::Runnable;
    vars_[threads_[first].src->name] = Value::principal(0);

    size_t cursor = first;
    bool havePrev = false;
    PrincipalId prevPid = 0;
    while (true) {
      wakeJoiners();
      auto pick = nextRunnable(cursor);
      if (!pick) break;
      cursor = *pick;
      ThreadRun& tr = threads_[cursor];
      if (havePrev && prevPid != tr.pid) k_.contextSwitch(prevPid, tr.pid);
      havePrev = true;
      prevPid = tr.pid;
      uint64_t quantum = 1 + sched_() % 3;
      for (uint64_t i = 0; i < quantum && tr.st == ThreadRun::St::Runnable;
           ++i) {
        step(tr);
        wakeJoiners();
      }
      cursor = (cursor + 1) % threads_.size();
    }
    for (auto& tr : threads_) {
      const char* status = nullptr;
      switch (tr.st) {
        case ThreadRun::St::NotStarted: status = "not-started"; break;
        case ThreadRun::St::Blocked:
          status = "blocked";
          rep_.anyBlocked = true;
          break;
        case ThreadRun::St::Runnable: status = "blocked"; break; // unreachable
        case ThreadRun::St::Finished: break;
      }
      std::string text = status
                             ? status
                             : k_.principals().exitStatus(tr.pid)
                                   .value_or(ExitStatus{})
                                   .describe();
      rep_.threadExits.emplace_back(tr.src->name, text);
    }
  }

 private:
  std::optional<size_t> nextRunnable(size_t from) {
    for (size_t off = 0; off < threads_.size(); ++off) {
      size_t i = (from + off) % threads_.size();
      if (threads_[i].st == ThreadRun::St::Runnable) return i;
    }
    return std::nullopt;
  }

  void wakeJoiners() {
    for (auto& tr : threads_) {
      if (tr.st != ThreadRun::St::Blocked) continue;
      const Principal* t = k_.principals().find(tr.joinTarget);
      if (t && !t->running) tr.st = ThreadRun::St::Runnable;
    }
  }

  void recordError(const ThreadRun& tr, int line, const std::string& what,
                   const ApiError& e) {
    rep_.errors.push_back({line, tr.src->name, what, e.code, e.detail});
  }

  Result<Value> resolveIdent(const std::string& id, int line) {
    auto it = vars_.find(id);
    if (it == vars_.end())
      return ApiError{ErrorCode::ParseError,
                      "name not yet bound at line " + std::to_string(line) +
                          ": " + id};
    return it->second;
  }

  Result<uint32_t> resolveSetElem(const ScenarioStmt::ArgExpr::SetElem& e,
                                  int line) {
    if (!e.isIdent) return uint32_t(e.num);
    auto v = resolveIdent(e.ident, line);
    if (!isOk(v)) return error(v);
    return uint32_t(value(v).raw);
  }

  Result<Arg> resolveArg(const ScenarioStmt::ArgExpr& a, int line) {
    using K = ScenarioStmt::ArgExpr::Kind;
    switch (a.kind) {
      case K::Int:
        return Arg::of(Value::integer(a.num));
      case K::Perm:
        return Arg::of(Value::perm(a.perm));
      case K::Backing:
        return Arg::of(Value::integer(uint64_t(a.backing)));
      case K::Ident: {
        auto v = resolveIdent(a.ident, line);
        if (!isOk(v)) return error(v);
        return Arg::of(value(v));
      }
      case K::LabelSet: {
        std::vector<uint32_t> tags;
        for (auto& e : a.elems) {
          auto t = resolveSetElem(e, line);
          if (!isOk(t)) return error(t);
          tags.push_back(value(t));
        }
        return Arg::labelSet(std::move(tags));
      }
      case K::CapSet: {
        std::vector<uint32_t> caps;
        for (auto& e : a.elems) {
          auto t = resolveSetElem(e, line);
          if (!isOk(t)) return error(t);
          Capability c{value(t) & kTagIdentityMask, e.plus, e.minus};
          caps.push_back(c.encode());
        }
        return Arg::capabilitySet(std::move(caps));
      }
    }
    return ApiError{ErrorCode::ParseError, "bad argument"};
  }

  void checkLockstep(const ThreadRun& tr, uint64_t ptr, AccessKind kind,
                     const AccessVerdict& verdict) {
    if (!oracleCheck_) return;
    StateSnapshot snap = takeSnapshot(k_, /*includeContentHash=*/false);
    OracleVerdict ov = oracleAccess(snap, tr.pid, ptr, kind);
    bool agree = ov.allowed == verdict.allowed &&
                 (ov.allowed || ov.cause == verdict.cause);
    if (!agree) rep_.divergences++;
  }

  void step(ThreadRun& tr) {
    if (tr.pc >= tr.src->stmts.size()) {
      (void)k_.exitPrincipal(tr.pid);
      tr.st = ThreadRun::St::Finished;
      return;
    }
    const ScenarioStmt& st = tr.src->stmts[tr.pc];
    switch (st.op) {
      case ScenarioStmt::Op::Spawn: executeSpawn(tr, st); break;
      case ScenarioStmt::Op::Call: executeCall(tr, st); break;
      case ScenarioStmt::Op::Access: executeAccess(tr, st); break;
      case ScenarioStmt::Op::ExpectFault: {
        bool met = tr.lastFault && *tr.lastFault == st.expectCause;
        rep_.expectations.push_back(
            {st.line, tr.src->name,
             std::string("fault ") + faultCauseName(st.expectCause), met});
        tr.pc++;
        break;
      }
      case ScenarioStmt::Op::ExpectError: {
        bool met = tr.lastError && *tr.lastError == st.expectError;
        rep_.expectations.push_back(
            {st.line, tr.src->name,
             std::string("error ") + errorCodeName(st.expectError), met});
        tr.pc++;
        break;
      }
    }
    if (tr.st == ThreadRun::St::Runnable && tr.pc >= tr.src->stmts.size()) {
      (void)k_.exitPrincipal(tr.pid);
      tr.st = ThreadRun::St::Finished;
    }
  }

  void executeSpawn(ThreadRun& tr, const ScenarioStmt& st) {
    tr.lastFault.reset();
    tr.lastError.reset();
    ThreadRun* target = nullptr;
    for (auto& cand : threads_)
      if (cand.src->name == st.spawnThread) target = &cand;
    if (!target || target->st != ThreadRun::St::NotStarted) {
      ApiError e{ErrorCode::ParseError, "thread already spawned or missing"};
      tr.lastError = e.code;
      recordError(tr, st.line, "spawn " + st.spawnThread, e);
      tr.pc++;
      return;
    }
    auto lbl = resolveArg(st.spawnLabel, st.line);
    auto caps = resolveArg(st.spawnCaps, st.line);
    if (!isOk(lbl) || !isOk(caps)) {
      const ApiError& e = !isOk(lbl) ? error(lbl) : error(caps);
      tr.lastError = e.code;
      recordError(tr, st.line, "spawn " + st.spawnThread, e);
      tr.pc++;
      return;
    }
    Label label;
    for (uint32_t t : value(lbl).items) label.insert(t);
    std::vector<Capability> capList;
    for (uint32_t enc : value(caps).items)
      capList.push_back(Capability::decode(enc));
    auto child = k_.clonePrincipal(tr.pid, label, capList);
    if (!isOk(child)) {
      tr.lastError = error(child).code;
      recordError(tr, st.line, "spawn " + st.spawnThread, error(child));
      tr.pc++;
      return;
    }
    target->pid = value(child);
    target->st = ThreadRun::St::Runnable;
    vars_[st.spawnThread] = Value::principal(value(child));
    tr.pc++;
  }

  void executeCall(ThreadRun& tr, const ScenarioStmt& st) {
    if (st.callName == "mg_join") {
      executeJoin(tr, st);
      return;
    }
    tr.lastFault.reset();
    tr.lastError.reset();
    std::vector<Arg> args;
    for (auto& a : st.args) {
      auto r = resolveArg(a, st.line);
      if (!isOk(r)) {
        tr.lastError = error(r).code;
        recordError(tr, st.line, st.callName, error(r));
        tr.pc++;
        return;
      }
      args.push_back(value(r));
    }
    auto res = dispatch(k_, tr.pid, st.callName, args);
    if (!isOk(res)) {
      tr.lastError = error(res).code;
      recordError(tr, st.line, st.callName, error(res));
    } else if (!st.result.empty()) {
      vars_[st.result] = value(res);
    }
    tr.pc++;
  }

  void executeJoin(ThreadRun& tr, const ScenarioStmt& st) {
    if (st.args.size() != 1) {
      ApiError e{ErrorCode::ParseError, "mg_join(thread)"};
      tr.lastFault.reset();
      tr.lastError = e.code;
      recordError(tr, st.line, "mg_join", e);
      tr.pc++;
      return;
    }
    auto arg = resolveArg(st.args[0], st.line);
    if (!isOk(arg) || value(arg).value.kind != Value::Kind::Principal) {
      ApiError e = isOk(arg)
                       ? ApiError{ErrorCode::ParseError, "join target must be a principal"}
                       : error(arg);
      tr.lastFault.reset();
      tr.lastError = e.code;
      recordError(tr, st.line, "mg_join", e);
      tr.pc++;
      return;
    }
    PrincipalId target = PrincipalId(value(arg).value.raw);
    auto r = k_.tryJoin(tr.pid, target);
    if (!isOk(r)) {
      tr.lastFault.reset();
      tr.lastError = error(r).code;
      recordError(tr, st.line, "mg_join", error(r));
      tr.pc++;
      return;
    }
    if (!value(r).has_value()) {
      // target still running; park without advancing
      tr.st = ThreadRun::St::Blocked;
      tr.joinTarget = target;
      return;
    }
    const ExitStatus& es = *value(r);
    tr.lastError.reset();
    tr.lastFault.reset();
    if (es.kind == ExitStatus::Kind::FaultKill) tr.lastFault = es.cause;
    if (!st.result.empty())
      vars_[st.result] =
          Value::integer(es.kind == ExitStatus::Kind::FaultKill ? 1 : 0);
    tr.pc++;
  }

  void executeAccess(ThreadRun& tr, const ScenarioStmt& st) {
    tr.lastFault.reset();
    tr.lastError.reset();
    uint64_t ptr = 0;
    if (st.target.kind == ScenarioStmt::ArgExpr::Kind::Ident) {
      auto v = resolveIdent(st.target.ident, st.line);
      if (!isOk(v)) {
        tr.lastError = error(v).code;
        recordError(tr, st.line, "access", error(v));
        tr.pc++;
        return;
      }
      ptr = value(v).raw;
    } else {
      ptr = st.target.num;
    }
    ptr = makePointer(pointerAddr(ptr) + uint32_t(st.offset), pointerTag(ptr));

    bool probe = tr.pc + 1 < tr.src->stmts.size() &&
                 tr.src->stmts[tr.pc + 1].op == ScenarioStmt::Op::ExpectFault;
    AccessVerdict verdict = k_.probeAccess(tr.pid, ptr, st.accessKind);
    checkLockstep(tr, ptr, st.accessKind, verdict);
    if (probe) {
      // guarded probe: the decision is recorded for the following
      // expectation, no fault is materialized and nobody is killed
      if (!verdict.allowed) tr.lastFault = verdict.cause;
      tr.pc++;
      return;
    }
    uint8_t writeValue = 0;
    if (st.accessKind == AccessKind::Write)
      writeValue = scenarioWriteValue(tr.src->name, tr.writeCount);
    auto out = k_.accessMem(tr.pid, ptr, st.accessKind, writeValue);
    if (!isOk(out)) {
      tr.lastError = error(out).code;
      recordError(tr, st.line, "access", error(out));
      tr.pc++;
      return;
    }
    if (!value(out).ok) {
      tr.lastFault = value(out).fault->cause;
      tr.st = ThreadRun::St::Finished; // killed; remaining statements skipped
      return;
    }
    if (st.accessKind == AccessKind::Write) tr.writeCount++;
    tr.pc++;
  }

  const Scenario& sc_;
  Kernel& k_;
  RunReport& rep_;
  bool oracleCheck_;
  std::mt19937_64 sched_;
  std::vector<ThreadRun> threads_;
  std::map<std::string, Value> vars_;
};

} // namespace

uint8_t scenarioWriteValue(const std::string& thread, uint32_t index) {
  uint64_t h = fnv1a64(thread);
  h = fnv1a64(&index, sizeof(index), h);
  return uint8_t(h);
}

bool RunReport::allExpectationsMet() const {
  for (const auto& e : expectations)
    if (!e.met) return false;
  return true;
}

std::string RunReport::serialize() const {
  std::ostringstream os;
  os << "run-report v1\n";
  os << "scenario: " << scenarioName << "\n";
  os << "seed: " << seed << "\n";
  os << "backend: " << backingName(backend) << "\n";
  os << "domains: " << domains << "\n";
  os << "\n[threads]\n";
  for (auto& [name, status] : threadExits) os << name << ": " << status << "\n";
  os << "\n[expectations]\n";
  if (expectations.empty()) os << "none\n";
  for (auto& e : expectations)
    os << "line " << e.line << " thread " << e.thread << ": " << e.what
       << " -- " << (e.met ? "met" : "NOT MET") << "\n";
  os << "\n[errors]\n";
  if (errors.empty()) os << "none\n";
  for (auto& e : errors)
    os << "line " << e.line << " thread " << e.thread << " " << e.what << ": "
       << errorCodeName(e.code) << " (" << e.detail << ")\n";
  os << "\n[faults]\n";
  if (faults.empty()) os << "none\n";
  for (auto& f : faults) os << f.line() << "\n";
  os << "\n[counters]\n";
  os << counters.csvHeader() << "\n" << counters.csvRow() << "\n";
  os << "\n[guards]\n";
  if (checksums.empty()) os << "none\n";
  char buf[96];
  for (auto& c : checksums) {
    std::snprintf(buf, sizeof(buf), "guard %u tag %u %s fnv64 0x%016llx", c.id,
                  c.tag, backingName(c.backing),
                  (unsigned long long)c.checksum);
    os << buf << "\n";
  }
  if (divergences > 0 || anyBlocked) {
    os << "\n[anomalies]\n";
    if (divergences > 0) os << "oracle divergences: " << divergences << "\n";
    if (anyBlocked) os << "blocked threads at end of run\n";
  }
  return os.str();
}

Result<RunReport> runScenario(const Scenario& sc, const RunOptions& opts) {
  Config cfg;
  cfg.seed = opts.seed ? *opts.seed : sc.seed.value_or(1);
  cfg.defaultBacking =
      opts.backend ? *opts.backend : sc.backend.value_or(Backing::Md);
  cfg.domainCount = opts.domains ? *opts.domains
                                 : sc.domains.value_or(kDomainFields);
  if (sc.guardLimit) cfg.guardLimit = *sc.guardLimit;
  if (cfg.domainCount < kReservedDomains + 1 ||
      cfg.domainCount > kDomainFields)
    return ApiError{ErrorCode::ParseError,
                    "domain count must lie in [3,16]"};

  Kernel kernel(cfg);
  RunReport rep;
  rep.scenarioName = sc.name;
  rep.seed = cfg.seed;
  rep.backend = cfg.defaultBacking;
  rep.domains = cfg.domainCount;

  Run run(sc, kernel, rep, opts.oracleCheck,
          cfg.seed ^ 0x9E3779B97F4A7C15ull);
  run.execute();

  rep.faults = kernel.guards().faultLog();
  rep.counters = kernel.counters();
  for (auto& [id, g] : kernel.guards().all())
    if (g.mapped)
      rep.checksums.push_back(
          {id, g.realTag(), g.backing, guardContentChecksum(g)});
  return rep;
}

} // namespace mg

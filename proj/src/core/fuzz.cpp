#include "core/fuzz.hpp"

#include <random>

#include "core/kernel.hpp"
#include "core/oracle.hpp"
#include "core/snapshot.hpp"

namespace mg {

namespace {

struct FuzzWorld {
  Kernel kernel;
  std::mt19937_64 rng;
  std::vector<PrincipalId> alive{0};
  std::vector<GuardId> guards;
  std::vector<uint64_t> pointers;

  FuzzWorld(const Config& cfg, uint64_t seed) : kernel(cfg), rng(seed) {}

  uint64_t roll(uint64_t n) { return rng() % n; }
  PrincipalId somePrincipal() { return alive[roll(alive.size())]; }
  bool hasGuards() const { return !guards.empty(); }
  GuardId someGuard() { return guards[roll(guards.size())]; }

  void reapDead() {
    std::vector<PrincipalId> still;
    for (PrincipalId p : alive)
      if (kernel.principals().isRunning(p)) still.push_back(p);
    alive = std::move(still);
  }
};

Backing rollBacking(std::mt19937_64& rng) {
  switch (rng() % 3) {
    case 0: return Backing::Plain;
    case 1: return Backing::Md;
    default: return Backing::Mte;
  }
}

void fuzzCheckInvariants(FuzzWorld& w, FuzzStats& stats) {
  if (!w.kernel.guardRangesDisjoint()) stats.invariantViolations++;
  size_t residents = 0;
  for (auto& [id, g] : w.kernel.guards().all())
    if (w.kernel.domains().resident(id)) residents++;
  if (int(residents) > w.kernel.config().assignableDomains())
    stats.invariantViolations++;
}

void fuzzAccess(FuzzWorld& w, FuzzStats& stats) {
  PrincipalId p = w.somePrincipal();
  AccessKind kind = AccessKind(w.roll(3));
  uint64_t ptr = 0;
  switch (w.roll(3)) {
    case 0:
      if (!w.pointers.empty()) {
        uint64_t base = w.pointers[w.roll(w.pointers.size())];
        int64_t off = int64_t(w.roll(64)) - 16;
        ptr = makePointer(uint32_t(int64_t(pointerAddr(base)) + off),
                          pointerTag(base));
        break;
      }
      [[fallthrough]];
    case 1:
      if (w.hasGuards()) {
        const Guard* g = w.kernel.guards().find(w.someGuard());
        if (g && g->mapped) {
          ptr = makePointer(g->range.base + uint32_t(w.roll(g->range.length)),
                            0);
          break;
        }
      }
      [[fallthrough]];
    default:
      ptr = makePointer(0x10000000u + uint32_t(w.roll(1u << 24)), 0);
  }

  AccessVerdict verdict = w.kernel.probeAccess(p, ptr, kind);
  StateSnapshot snap = takeSnapshot(w.kernel, /*includeContentHash=*/false);
  OracleVerdict ov = oracleAccess(snap, p, ptr, kind);
  bool agree = ov.allowed == verdict.allowed &&
               (ov.allowed || ov.cause == verdict.cause);
  if (!agree) stats.divergences++;
  stats.accesses++;

  // allowed accesses must always be covered by the flow rule
  if (verdict.allowed) {
    const Guard* g = w.kernel.guards().find(verdict.guard);
    const Principal* pr = w.kernel.principals().find(p);
    if (!g || !pr || !pr->label.count(g->tag)) stats.invariantViolations++;
  }

  auto out = w.kernel.accessMem(p, ptr, kind, uint8_t(w.roll(256)));
  if (isOk(out) && !value(out).ok) {
    stats.faults++;
    w.reapDead();
  }
}

void fuzzStep(FuzzWorld& w, FuzzStats& stats) {
  if (w.alive.empty()) return;
  switch (w.roll(14)) {
    case 0: { // clone
      if (w.alive.size() >= 4) break;
      PrincipalId parent = w.somePrincipal();
      const Principal* pp = w.kernel.principals().find(parent);
      std::vector<Capability> pass;
      Label label;
      for (TagId t : pp->caps.plusSet())
        if (w.roll(2) == 0) {
          pass.push_back({t, true, w.roll(2) == 0 && pp->caps.hasMinus(t)});
          if (w.roll(2) == 0) label.insert(t);
        }
      auto r = w.kernel.clonePrincipal(parent, label, pass);
      if (isOk(r)) w.alive.push_back(value(r));
      break;
    }
    case 1: { // create guard
      if (w.kernel.guards().liveCount() >= 6) break;
      auto r = w.kernel.createGuard(w.somePrincipal(), rollBacking(w.rng));
      if (isOk(r)) w.guards.push_back(value(r));
      break;
    }
    case 2: { // map
      if (!w.hasGuards()) break;
      PagePerm perm = PagePerm(w.roll(7));
      (void)w.kernel.mapPages(w.somePrincipal(), w.someGuard(),
                              uint32_t(1 + w.roll(4 * kPageSize)), perm);
      break;
    }
    case 3: { // protect
      if (!w.hasGuards()) break;
      (void)w.kernel.setProtection(w.somePrincipal(), w.someGuard(),
                                   PagePerm(w.roll(7)));
      break;
    }
    case 4: { // lock / unlock
      if (!w.hasGuards()) break;
      GuardId g = w.someGuard();
      if (w.roll(2) == 0)
        (void)w.kernel.lockGuard(w.somePrincipal(), g);
      else
        (void)w.kernel.unlockGuard(w.somePrincipal(), g);
      break;
    }
    case 5: { // label change
      PrincipalId p = w.somePrincipal();
      const Principal* pr = w.kernel.principals().find(p);
      Label target;
      for (TagId t : pr->label)
        if (w.roll(4) != 0) target.insert(t);
      for (TagId t : pr->caps.plusSet())
        if (w.roll(3) == 0) target.insert(t);
      (void)w.kernel.modifyLabel(p, target);
      break;
    }
    case 6: { // transfer
      if (w.alive.size() < 2) break;
      PrincipalId src = w.somePrincipal();
      PrincipalId dst = w.somePrincipal();
      const Principal* ps = w.kernel.principals().find(src);
      std::vector<Capability> caps;
      for (TagId t : ps->caps.plusSet())
        if (w.roll(2) == 0) caps.push_back({t, true, false});
      (void)w.kernel.transferCaps(src, dst, caps);
      break;
    }
    case 7: { // declassify
      PrincipalId p = w.somePrincipal();
      const Principal* pr = w.kernel.principals().find(p);
      Label mset = pr->caps.minusSet();
      if (mset.empty()) break;
      auto it = mset.begin();
      std::advance(it, long(w.roll(mset.size())));
      (void)w.kernel.declassify(p, *it);
      break;
    }
    case 8: { // malloc
      if (!w.hasGuards()) break;
      auto r = w.kernel.guardAlloc(w.somePrincipal(), w.someGuard(),
                                   uint32_t(16 + w.roll(512)));
      if (isOk(r)) w.pointers.push_back(value(r));
      break;
    }
    case 9: { // free
      if (w.pointers.empty() || !w.hasGuards()) break;
      size_t i = w.roll(w.pointers.size());
      uint64_t ptr = w.pointers[i];
      const Guard* g = w.kernel.guards().guardAt(pointerAddr(ptr));
      if (g && isOk(w.kernel.guardFree(w.somePrincipal(), g->id, ptr)))
        w.pointers.erase(w.pointers.begin() + long(i));
      break;
    }
    case 10: { // unmap
      if (!w.hasGuards() || w.roll(8) != 0) break;
      (void)w.kernel.unmapGuard(w.somePrincipal(), w.someGuard());
      break;
    }
    default:
      fuzzAccess(w, stats);
      break;
  }
  stats.steps++;
  fuzzCheckInvariants(w, stats);
}

} // namespace

FuzzStats runAccessFuzz(uint64_t seed, int scenarioCount,
                        int stepsPerScenario) {
  FuzzStats stats;
  for (int s = 0; s < scenarioCount; ++s) {
    std::mt19937_64 seeder(seed + uint64_t(s) * 0x9E3779B97F4A7C15ull);
    Config cfg;
    cfg.seed = seeder();
    cfg.defaultBacking = rollBacking(seeder);
    FuzzWorld w(cfg, seeder());
    int steps = 1 + int(seeder() % uint64_t(stepsPerScenario));
    for (int i = 0; i < steps && !w.alive.empty(); ++i) fuzzStep(w, stats);
    stats.scenarios++;
  }
  return stats;
}

CloneFuzzStats runCloneFuzz(uint64_t seed, int treeCount) {
  CloneFuzzStats stats;
  for (int t = 0; t < treeCount; ++t) {
    std::mt19937_64 rng(seed + uint64_t(t) * 0x6C62272E07BB0142ull);
    Config cfg;
    cfg.seed = rng();
    Kernel k(cfg);
    std::vector<PrincipalId> nodes{0};
    int tagCount = 1 + int(rng() % 6);
    for (int i = 0; i < tagCount; ++i) (void)k.allocTag(0);

    int clones = 2 + int(rng() % 10);
    for (int c = 0; c < clones; ++c) {
      PrincipalId parent = nodes[rng() % nodes.size()];
      const Principal* pp = k.principals().find(parent);
      std::vector<Capability> pass;
      Label passedLabel;
      Label plusPassed, minusPassed;
      for (auto& [tag, flags] : pp->caps.raw()) {
        if ((flags & 1) && rng() % 2 == 0) {
          bool withMinus = (flags & 2) && rng() % 2 == 0;
          pass.push_back({tag, true, withMinus});
          plusPassed.insert(tag);
          if (withMinus) minusPassed.insert(tag);
          if (rng() % 2 == 0) passedLabel.insert(tag);
        }
      }
      bool sabotage = rng() % 5 == 0;
      if (sabotage) pass.push_back({kMaxTagIdentity - 1, true, false});
      auto r = k.clonePrincipal(parent, passedLabel, pass);
      stats.clones++;
      if (!isOk(r)) {
        stats.deniedClones++;
        if (!sabotage) stats.violations++; // legal clone must not be denied
        continue;
      }
      if (sabotage) stats.violations++; // illegal clone must be denied
      const Principal* child = k.principals().find(value(r));
      if (child->label != passedLabel || child->caps.plusSet() != plusPassed ||
          child->caps.minusSet() != minusPassed)
        stats.violations++;
      nodes.push_back(value(r));
    }
    stats.trees++;
  }
  return stats;
}

} // namespace mg

#pragma once

#include <condition_variable>
#include <mutex>
#include <random>

#include "core/guard_memory.hpp"
#include "core/label_core.hpp"

namespace mg {

struct AccessOutcome {
  bool ok = false;
  uint8_t value = 0;                // byte read, for reads
  std::optional<FaultRecord> fault; // set when !ok; the caller is terminated
};

// The kernel-state object. Every public operation runs as one atomic
// transaction under the internal mutex; an error return leaves the state
// untouched. Principals may be driven from real threads or from the
// deterministic simulated scheduler.
class Kernel {
 public:
  explicit Kernel(const Config& cfg = Config{});

  const Config& config() const { return cfg_; }

  // -- tags, labels, capabilities ----------------------------------------
  Result<TagId> allocTag(PrincipalId caller);
  Status modifyLabel(PrincipalId caller, const Label& target);
  Status transferCaps(PrincipalId caller, PrincipalId dst,
                      const std::vector<Capability>& caps);
  Status declassify(PrincipalId caller, TagId tag);
  Status grant(PrincipalId caller, PrincipalId p1, PrincipalId p2, TagId tag);
  Status revokeGrant(PrincipalId caller, PrincipalId p1, PrincipalId p2,
                     TagId tag);

  // -- principals -----------------------------------------------------------
  Result<PrincipalId> clonePrincipal(PrincipalId caller, const Label& label,
                                     const std::vector<Capability>& caps);
  // nullopt while the target still runs.
  Result<std::optional<ExitStatus>> tryJoin(PrincipalId waiter,
                                            PrincipalId target);
  // Blocks the calling OS thread until the target terminates. The kernel
  // lock is not held while waiting.
  Result<ExitStatus> join(PrincipalId waiter, PrincipalId target);
  Status exitPrincipal(PrincipalId p);
  Status lockGuard(PrincipalId caller, GuardId g);
  Status unlockGuard(PrincipalId caller, GuardId g);

  // -- guard memory -----------------------------------------------------------
  Result<GuardId> createGuard(PrincipalId caller, Backing backing);
  Result<GuardId> createGuard(PrincipalId caller) {
    return createGuard(caller, cfg_.defaultBacking);
  }
  Status destroyGuard(PrincipalId caller, GuardId g);
  Result<AddressRange> mapPages(PrincipalId caller, GuardId g, uint32_t length,
                                PagePerm perm);
  Status unmapGuard(PrincipalId caller, GuardId g);
  Status setProtection(PrincipalId caller, GuardId g, PagePerm perm);
  Result<PagePerm> getProtection(GuardId g);
  Result<uint64_t> guardAlloc(PrincipalId caller, GuardId g, uint32_t size);
  Status guardFree(PrincipalId caller, GuardId g, uint64_t ptr);

  // -- memory access -----------------------------------------------------------
  Result<AccessOutcome> accessMem(PrincipalId caller, uint64_t ptr,
                                  AccessKind kind, uint8_t writeValue = 0);
  // Pure decision, no side effects; used for probes and lockstep checks.
  AccessVerdict probeAccess(PrincipalId caller, uint64_t ptr,
                            AccessKind kind) const;

  // -- POSIX-analogue surface ---------------------------------------------------
  Result<PrincipalId> posixFork(PrincipalId caller);
  Result<AddressRange> posixMmap(PrincipalId caller, uint32_t length,
                                 PagePerm perm);
  Result<AddressRange> posixMmapFixed(PrincipalId caller, uint32_t base,
                                      uint32_t length, PagePerm perm);
  Status posixMprotect(PrincipalId caller, uint32_t base, uint32_t length,
                       PagePerm perm);

  // -- scheduling / events ----------------------------------------------------
  void contextSwitch(PrincipalId from, PrincipalId to);
  EventCounters counters() const;

  // -- inspection (external synchronization required when driving from
  //    multiple real threads) -------------------------------------------------
  const PrincipalRegistry& principals() const { return principals_; }
  const GuardTable& guards() const { return guards_; }
  const DomainEngine& domains() const { return domains_; }
  const DelegationGraph& delegation() const { return delegation_; }
  const std::set<std::pair<PrincipalId, TagId>>& declassRecords() const {
    return declass_;
  }
  std::mt19937_64& rng() { return rng_; }

  bool guardRangesDisjoint() const;
  bool ownsMappedMdGuard(PrincipalId p) const;

 private:
  Status gateRunning(PrincipalId caller) const;
  bool layoutAuthorized(const Principal& p, TagId tag) const;
  // Ensures a resident domain for a mapped md guard and syncs the page-table
  // domain fields to the assigned index.
  void attachDomainSynced(Guard& g);
  void notifyExitLocked();

  Config cfg_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::mt19937_64 rng_;

  TagRegistry tags_;
  DelegationGraph delegation_;
  std::set<std::pair<PrincipalId, TagId>> declass_;
  PrincipalRegistry principals_;
  GuardTable guards_;
  DomainEngine domains_;
};

} // namespace mg

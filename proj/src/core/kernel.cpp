#include "core/kernel.hpp"

namespace mg {

namespace {

ApiError denied(const char* what) {
  return ApiError{ErrorCode::PermissionDenied, what};
}

AccessMode initialModeFor(PagePerm perm) {
  return perm == PagePerm::None ? AccessMode::NoAccess : AccessMode::Client;
}

} // namespace

Kernel::Kernel(const Config& cfg) : cfg_(cfg), rng_(cfg.seed) {
  domains_.configure(cfg_);
  guards_.space().configure(cfg_.addressBase, cfg_.addressCeiling);
}

Status Kernel::gateRunning(PrincipalId caller) const {
  const Principal* p = principals_.find(caller);
  if (!p) return ApiError{ErrorCode::NoSuchPrincipal, "unknown principal"};
  if (!p->running)
    return ApiError{ErrorCode::NoSuchPrincipal, "principal terminated"};
  return okStatus();
}

bool Kernel::layoutAuthorized(const Principal& p, TagId tag) const {
  if (p.caps.hasMinus(tag)) return true;
  return declass_.count({p.id, tag}) > 0;
}

void Kernel::attachDomainSynced(Guard& g) {
  AttachOutcome out = domains_.attach(g.id, initialModeFor(g.perm));
  bool rewrite = false;
  for (auto& [idx, pe] : g.pageTable.entries)
    if (!pe.domainField || *pe.domainField != out.index) {
      pe.domainField = out.index;
      rewrite = true;
    }
  if (rewrite)
    domains_.countPageTableWrites(g.pageTable.entries.size());
}

void Kernel::notifyExitLocked() { cv_.notify_all(); }

// ---- tags, labels, capabilities ---------------------------------------------

Result<TagId> Kernel::allocTag(PrincipalId caller) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return error(g);
  Principal* p = principals_.find(caller);
  return tags_.alloc(caller, p->caps);
}

Status Kernel::modifyLabel(PrincipalId caller, const Label& target) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  Principal* p = principals_.find(caller);
  if (!validateLabelChange(p->label, target, p->caps))
    return denied("label change not covered by capabilities");
  p->label = target;
  return okStatus();
}

Status Kernel::transferCaps(PrincipalId caller, PrincipalId dst,
                            const std::vector<Capability>& caps) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  if (auto g = gateRunning(dst); !isOk(g)) return g;
  const Principal* src = principals_.find(caller);
  for (const Capability& c : caps) {
    if (c.minus || !c.valid())
      return ApiError{ErrorCode::InvalidCapability,
                      "only plus capabilities are transferable"};
    if (!src->caps.hasPlus(c.tag))
      return denied("transfer of a capability not held");
  }
  Principal* d = principals_.find(dst);
  for (const Capability& c : caps) d->caps.addPlus(c.tag);
  return okStatus();
}

Status Kernel::declassify(PrincipalId caller, TagId tag) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  Principal* p = principals_.find(caller);
  if (!tags_.exists(tag)) return denied("unknown tag");
  bool authorized = p->caps.hasMinus(tag) || tags_.ownerOf(tag) == caller;
  if (!authorized) {
    if (auto grantor = delegation_.grantorFor(caller, tag)) {
      const Principal* q = principals_.find(*grantor);
      authorized = (q && q->caps.hasMinus(tag)) || tags_.ownerOf(tag) == grantor;
    }
  }
  if (!authorized) return denied("no declassification authority for tag");
  p->label.erase(tag);
  declass_.insert({caller, tag});
  return okStatus();
}

Status Kernel::grant(PrincipalId caller, PrincipalId p1, PrincipalId p2,
                     TagId tag) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  if (auto g = gateRunning(p1); !isOk(g)) return g;
  if (auto g = gateRunning(p2); !isOk(g)) return g;
  const Principal* a = principals_.find(caller);
  if (!tags_.exists(tag)) return denied("unknown tag");
  if (!a->caps.hasMinus(tag))
    return denied("granting requires the minus capability");
  delegation_.add(p1, p2, tag);
  return okStatus();
}

Status Kernel::revokeGrant(PrincipalId caller, PrincipalId p1, PrincipalId p2,
                           TagId tag) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  const Principal* a = principals_.find(caller);
  if (!tags_.exists(tag)) return denied("unknown tag");
  if (!a->caps.hasMinus(tag))
    return denied("revoking requires the minus capability");
  if (!delegation_.remove(p1, p2, tag))
    return ApiError{ErrorCode::NoSuchEdge, "no such delegation edge"};
  return okStatus();
}

// ---- principals ---------------------------------------------------------------

Result<PrincipalId> Kernel::clonePrincipal(PrincipalId caller,
                                           const Label& label,
                                           const std::vector<Capability>& caps) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return error(g);
  const Principal* parent = principals_.find(caller);
  CapSet childCaps;
  for (const Capability& c : caps) {
    if (!c.valid())
      return ApiError{ErrorCode::InvalidCapability, "malformed capability"};
    if (!parent->caps.has(c))
      return denied("passing a capability the parent does not hold");
    childCaps.add(c);
  }
  if (!validateLabelChange(Label{}, label, childCaps))
    return denied("passed label unreachable from passed capabilities");
  return principals_.createChild(caller, label, std::move(childCaps));
}

Result<std::optional<ExitStatus>> Kernel::tryJoin(PrincipalId waiter,
                                                  PrincipalId target) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(waiter); !isOk(g)) return error(g);
  const Principal* t = principals_.find(target);
  if (!t) return ApiError{ErrorCode::NoSuchPrincipal, "unknown join target"};
  if (t->running) return std::optional<ExitStatus>{};
  return std::optional<ExitStatus>{t->exit};
}

Result<ExitStatus> Kernel::join(PrincipalId waiter, PrincipalId target) {
  std::unique_lock lk(mu_);
  if (auto g = gateRunning(waiter); !isOk(g)) return error(g);
  const Principal* t = principals_.find(target);
  if (!t) return ApiError{ErrorCode::NoSuchPrincipal, "unknown join target"};
  cv_.wait(lk, [&] { return !principals_.find(target)->running; });
  return principals_.find(target)->exit;
}

Status Kernel::exitPrincipal(PrincipalId p) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(p); !isOk(g)) return g;
  principals_.terminateNormal(p);
  notifyExitLocked();
  return okStatus();
}

Status Kernel::lockGuard(PrincipalId caller, GuardId gid) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  Guard* g = guards_.find(gid);
  if (!g) return ApiError{ErrorCode::NoSuchGuard, "unknown guard"};
  if (g->locked()) return ApiError{ErrorCode::AlreadyLocked, "guard locked"};
  const Principal* p = principals_.find(caller);
  if (!p->caps.hasPlus(g->tag))
    return denied("locking requires the plus capability");
  g->savedTag = g->tag;
  g->tag = kLockTag;
  principals_.lockedBy()[gid] = caller;
  return okStatus();
}

Status Kernel::unlockGuard(PrincipalId caller, GuardId gid) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  Guard* g = guards_.find(gid);
  if (!g) return ApiError{ErrorCode::NoSuchGuard, "unknown guard"};
  if (!g->locked()) return ApiError{ErrorCode::NotLocked, "guard not locked"};
  const Principal* p = principals_.find(caller);
  auto locker = principals_.lockedBy().find(gid);
  bool isLocker = locker != principals_.lockedBy().end() &&
                  locker->second == caller;
  if (!isLocker && !p->caps.hasMinus(*g->savedTag))
    return denied("unlock requires being the locker or holding minus");
  g->tag = *g->savedTag;
  g->savedTag.reset();
  principals_.lockedBy().erase(gid);
  return okStatus();
}

// ---- guard memory ---------------------------------------------------------------

Result<GuardId> Kernel::createGuard(PrincipalId caller, Backing backing) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return error(g);
  if (guards_.liveCount() >= cfg_.guardLimit)
    return ApiError{ErrorCode::GuardLimitExceeded, "live guard limit reached"};
  Principal* p = principals_.find(caller);
  auto tag = tags_.alloc(caller, p->caps);
  if (!isOk(tag)) return error(tag);
  Guard& g = guards_.create(value(tag), caller, backing);
  p->label.insert(value(tag)); // owner starts with the guard tag in its label
  return g.id;
}

Status Kernel::destroyGuard(PrincipalId caller, GuardId gid) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  Guard* g = guards_.find(gid);
  if (!g) return ApiError{ErrorCode::NoSuchGuard, "unknown guard"};
  if (g->locked()) return ApiError{ErrorCode::GuardLocked, "guard locked"};
  if (g->owner != caller) return denied("destroy requires ownership");
  if (g->mapped) {
    guards_.space().release(g->range.base);
    if (g->backing == Backing::Mte) domains_.dropTags(g->range);
    if (g->backing == Backing::Md) (void)domains_.detach(gid);
    domains_.countTlbFlush();
  }
  guards_.destroy(gid);
  return okStatus();
}

Result<AddressRange> Kernel::mapPages(PrincipalId caller, GuardId gid,
                                      uint32_t length, PagePerm perm) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return error(g);
  Guard* g = guards_.find(gid);
  if (!g) return ApiError{ErrorCode::NoSuchGuard, "unknown guard"};
  if (g->locked()) return ApiError{ErrorCode::GuardLocked, "guard locked"};
  const Principal* p = principals_.find(caller);
  if (!layoutAuthorized(*p, g->realTag()))
    return denied("mapping requires declassification authority");
  if (length == 0)
    return ApiError{ErrorCode::OutOfAddressSpace, "zero-length mapping"};
  if (g->mapped)
    return ApiError{ErrorCode::OutOfAddressSpace, "guard already mapped"};
  uint32_t pages = (length + kPageSize - 1) / kPageSize;
  uint32_t bytes = pages * kPageSize;
  auto base = guards_.space().reserve(bytes);
  if (!base)
    return ApiError{ErrorCode::OutOfAddressSpace, "no free address range"};
  g->mapped = true;
  g->range = {*base, bytes};
  g->perm = perm;
  g->content.assign(bytes, 0);
  g->heap.init(bytes);
  for (uint32_t i = 0; i < pages; ++i)
    g->pageTable.entries[i] = PageEntry{true, perm, std::nullopt};
  domains_.countPageTableWrites(pages);
  if (g->backing == Backing::Md) attachDomainSynced(*g);
  return g->range;
}

Status Kernel::unmapGuard(PrincipalId caller, GuardId gid) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  Guard* g = guards_.find(gid);
  if (!g) return ApiError{ErrorCode::NoSuchGuard, "unknown guard"};
  if (g->locked()) return ApiError{ErrorCode::GuardLocked, "guard locked"};
  const Principal* p = principals_.find(caller);
  if (!layoutAuthorized(*p, g->realTag()))
    return denied("unmapping requires declassification authority");
  if (!g->mapped)
    return ApiError{ErrorCode::NoSuchGuard, "guard has no mapping"};
  domains_.countPageTableWrites(g->pageTable.entries.size());
  guards_.space().release(g->range.base);
  if (g->backing == Backing::Mte) domains_.dropTags(g->range);
  if (g->backing == Backing::Md) (void)domains_.detach(gid);
  g->mapped = false;
  g->range = {};
  g->pageTable.entries.clear();
  g->content.clear();
  g->heap.reset();
  domains_.countTlbFlush();
  return okStatus();
}

Status Kernel::setProtection(PrincipalId caller, GuardId gid, PagePerm perm) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  Guard* g = guards_.find(gid);
  if (!g) return ApiError{ErrorCode::NoSuchGuard, "unknown guard"};
  if (g->locked()) return ApiError{ErrorCode::GuardLocked, "guard locked"};
  const Principal* p = principals_.find(caller);
  if (!layoutAuthorized(*p, g->realTag()))
    return denied("protection change requires declassification authority");
  g->perm = perm;
  if (!g->mapped) return okStatus();
  bool fastPath = g->backing == Backing::Md &&
                  (perm == PagePerm::None || perm == PagePerm::RW);
  if (fastPath) {
    // One register-state write; page tables and TLB untouched.
    domains_.programMode(gid, perm == PagePerm::None ? AccessMode::NoAccess
                                                     : AccessMode::Manager);
    return okStatus();
  }
  for (auto& [idx, pe] : g->pageTable.entries) pe.perm = perm;
  domains_.countPageTableWrites(g->pageTable.entries.size());
  domains_.countTlbFlush();
  if (g->backing == Backing::Md) domains_.programMode(gid, AccessMode::Client);
  return okStatus();
}

Result<PagePerm> Kernel::getProtection(GuardId gid) {
  std::scoped_lock lk(mu_);
  const Guard* g = guards_.find(gid);
  if (!g) return ApiError{ErrorCode::NoSuchGuard, "unknown guard"};
  return g->perm;
}

Result<uint64_t> Kernel::guardAlloc(PrincipalId caller, GuardId gid,
                                    uint32_t size) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return error(g);
  Guard* g = guards_.find(gid);
  if (!g) return ApiError{ErrorCode::NoSuchGuard, "unknown guard"};
  if (g->locked()) return ApiError{ErrorCode::GuardLocked, "guard locked"};
  const Principal* p = principals_.find(caller);
  if (!g->perms.canAllocate(caller) || !p->label.count(g->tag))
    return denied("allocate bitmap or label does not admit caller");
  if (!g->mapped || size == 0)
    return ApiError{ErrorCode::OutOfGuardMemory, "no allocatable memory"};
  auto off = g->heap.alloc(size);
  if (!off)
    return ApiError{ErrorCode::OutOfGuardMemory, "no block large enough"};
  uint32_t addr = g->range.base + *off;
  uint8_t tag = 0;
  if (g->backing == Backing::Mte) {
    AddressRange block{addr, GuardHeap::roundUp(size)};
    tag = domains_.pickAllocationTag(block, rng_);
    (void)domains_.tagRegion(block, tag);
  }
  return makePointer(addr, tag);
}

Status Kernel::guardFree(PrincipalId caller, GuardId gid, uint64_t ptr) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  Guard* g = guards_.find(gid);
  if (!g) return ApiError{ErrorCode::NoSuchGuard, "unknown guard"};
  if (g->locked()) return ApiError{ErrorCode::GuardLocked, "guard locked"};
  const Principal* p = principals_.find(caller);
  if (!g->perms.canAllocate(caller) || !p->label.count(g->tag))
    return denied("allocate bitmap or label does not admit caller");
  uint32_t addr = pointerAddr(ptr);
  if (!g->mapped || !g->range.contains(addr))
    return ApiError{ErrorCode::InvalidFree, "address outside guard heap"};
  auto size = g->heap.free(addr - g->range.base);
  if (!size)
    return ApiError{ErrorCode::InvalidFree, "not a live block start"};
  if (g->backing == Backing::Mte) {
    uint8_t retag = domains_.pickRetag(domains_.granuleTag(addr), rng_);
    (void)domains_.tagRegion({addr, *size}, retag);
  }
  return okStatus();
}

// ---- memory access ---------------------------------------------------------------

Result<AccessOutcome> Kernel::accessMem(PrincipalId caller, uint64_t ptr,
                                        AccessKind kind, uint8_t writeValue) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return error(g);
  AccessVerdict v =
      classifyAccess(guards_, principals_, domains_, caller, ptr, kind);
  uint32_t addr = pointerAddr(ptr);
  if (!v.allowed) {
    FaultRecord rec =
        guards_.appendFault(caller, v.guard, addr, kind, v.cause);
    principals_.terminateFault(caller, v.cause, rec.seq);
    notifyExitLocked();
    return AccessOutcome{false, 0, rec};
  }
  Guard* g = guards_.find(v.guard);
  if (g->backing == Backing::Md) attachDomainSynced(*g);
  AccessOutcome out;
  out.ok = true;
  uint32_t off = addr - g->range.base;
  if (kind == AccessKind::Read) out.value = g->content[off];
  if (kind == AccessKind::Write) g->content[off] = writeValue;
  return out;
}

AccessVerdict Kernel::probeAccess(PrincipalId caller, uint64_t ptr,
                                  AccessKind kind) const {
  std::scoped_lock lk(mu_);
  return classifyAccess(guards_, principals_, domains_, caller, ptr, kind);
}

// ---- POSIX-analogue surface ----------------------------------------------------

Result<PrincipalId> Kernel::posixFork(PrincipalId caller) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return error(g);
  // fork never copies labels or capability lists
  return principals_.createChild(caller, Label{}, CapSet{});
}

Result<AddressRange> Kernel::posixMmap(PrincipalId caller, uint32_t length,
                                       PagePerm perm) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return error(g);
  if (length == 0)
    return ApiError{ErrorCode::OutOfAddressSpace, "zero-length mapping"};
  uint32_t bytes = ((length + kPageSize - 1) / kPageSize) * kPageSize;
  auto base = guards_.space().reserve(bytes);
  if (!base)
    return ApiError{ErrorCode::OutOfAddressSpace, "no free address range"};
  guards_.plain()[*base] = PlainMapping{{*base, bytes}, perm, caller};
  return AddressRange{*base, bytes};
}

Result<AddressRange> Kernel::posixMmapFixed(PrincipalId caller, uint32_t base,
                                            uint32_t length, PagePerm perm) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return error(g);
  if (base % kPageSize != 0)
    return ApiError{ErrorCode::MisalignedRange, "base not page aligned"};
  if (length == 0)
    return ApiError{ErrorCode::OutOfAddressSpace, "zero-length mapping"};
  uint32_t bytes = ((length + kPageSize - 1) / kPageSize) * kPageSize;
  AddressRange want{base, bytes};
  for (auto& [id, g] : guards_.all())
    if (g.mapped && g.range.overlaps(want))
      return denied("fixed mapping overlaps a guard range");
  if (!guards_.space().reserveFixed(base, bytes))
    return ApiError{ErrorCode::OutOfAddressSpace, "range unavailable"};
  guards_.plain()[base] = PlainMapping{want, perm, caller};
  return want;
}

Status Kernel::posixMprotect(PrincipalId caller, uint32_t base,
                             uint32_t length, PagePerm perm) {
  std::scoped_lock lk(mu_);
  if (auto g = gateRunning(caller); !isOk(g)) return g;
  AddressRange want{base, length};
  for (auto& [id, g] : guards_.all())
    if (g.mapped && g.range.overlaps(want))
      return denied("plain protection change over a guard range");
  for (auto& [b, m] : guards_.plain())
    if (m.range.overlaps(want)) m.perm = perm;
  return okStatus();
}

// ---- scheduling / events --------------------------------------------------------

void Kernel::contextSwitch(PrincipalId from, PrincipalId to) {
  std::scoped_lock lk(mu_);
  bool involved = ownsMappedMdGuard(from) || ownsMappedMdGuard(to);
  domains_.contextSwitch(involved);
}

EventCounters Kernel::counters() const {
  std::scoped_lock lk(mu_);
  return domains_.counters();
}

bool Kernel::guardRangesDisjoint() const {
  std::vector<AddressRange> ranges;
  for (auto& [id, g] : guards_.all())
    if (g.mapped) ranges.push_back(g.range);
  for (auto& [b, m] : guards_.plain()) ranges.push_back(m.range);
  for (size_t i = 0; i < ranges.size(); ++i)
    for (size_t j = i + 1; j < ranges.size(); ++j)
      if (ranges[i].overlaps(ranges[j])) return false;
  return true;
}

bool Kernel::ownsMappedMdGuard(PrincipalId p) const {
  for (auto& [id, g] : guards_.all())
    if (g.owner == p && g.backing == Backing::Md && g.mapped &&
        !g.pageTable.empty())
      return true;
  return false;
}

} // namespace mg

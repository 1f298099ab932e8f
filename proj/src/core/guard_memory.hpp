#pragma once

#include "core/allocator.hpp"
#include "core/domain_engine.hpp"
#include "core/principal_registry.hpp"
#include "core/types.hpp"

namespace mg {

struct PageEntry {
  bool present = false;
  PagePerm perm = PagePerm::None;       // what the tables encode; may lag the
                                        // guard's logical perm on fast paths
  std::optional<int> domainField;       // md backing only
  friend bool operator==(const PageEntry&, const PageEntry&) = default;
};

// Per-guard table, keyed by page index relative to the guard range.
struct PageTable {
  std::map<uint32_t, PageEntry> entries;
  bool empty() const { return entries.empty(); }
  friend bool operator==(const PageTable&, const PageTable&) = default;
};

// Four per-principal-slot operation bitmaps. Slots over kMaxSlots have no
// bits and therefore no rights.
struct PermBitmaps {
  std::bitset<kMaxSlots> read, write, execute, allocate;

  void setAll(PrincipalId p) {
    if (p >= kMaxSlots) return;
    read.set(p);
    write.set(p);
    execute.set(p);
    allocate.set(p);
  }
  bool canAllocate(PrincipalId p) const {
    return p < kMaxSlots && allocate.test(p);
  }
  friend bool operator==(const PermBitmaps&, const PermBitmaps&) = default;
};

struct Guard {
  GuardId id = 0;
  TagId tag = 0; // swapped to kLockTag while locked
  PrincipalId owner = 0;
  Backing backing = Backing::Plain;
  bool mapped = false;
  AddressRange range;
  PagePerm perm = PagePerm::None; // uniform logical permission
  PermBitmaps perms;
  PageTable pageTable;
  std::optional<TagId> savedTag; // set while locked; holds the real tag
  GuardHeap heap;
  std::vector<uint8_t> content; // range.length bytes while mapped

  bool locked() const { return savedTag.has_value(); }
  TagId effectiveTag() const { return tag; }
  TagId realTag() const { return savedTag ? *savedTag : tag; }
};

// Simulated flat address space: guard ranges and plain mappings share it and
// never overlap.
class AddressSpace {
 public:
  void configure(uint32_t base, uint32_t ceiling) {
    base_ = base;
    ceiling_ = ceiling;
    reserved_.clear();
  }
  std::optional<uint32_t> reserve(uint32_t length); // first-fit gap
  bool reserveFixed(uint32_t base, uint32_t length);
  void release(uint32_t base);
  bool overlapsReserved(AddressRange r) const;

 private:
  uint32_t base_ = 0;
  uint32_t ceiling_ = 0;
  std::map<uint32_t, uint32_t> reserved_; // base -> length
};

struct PlainMapping {
  AddressRange range;
  PagePerm perm = PagePerm::RW;
  PrincipalId owner = 0;
  friend bool operator==(const PlainMapping&, const PlainMapping&) = default;
};

class GuardTable {
 public:
  Guard* find(GuardId id);
  const Guard* find(GuardId id) const;
  Guard& create(TagId tag, PrincipalId owner, Backing backing);
  void destroy(GuardId id) { guards_.erase(id); }
  size_t liveCount() const { return guards_.size(); }
  const std::map<GuardId, Guard>& all() const { return guards_; }
  std::map<GuardId, Guard>& all() { return guards_; }

  // Address resolution against mapped guards.
  const Guard* guardAt(uint32_t addr) const;
  Guard* guardAt(uint32_t addr);

  AddressSpace& space() { return space_; }
  std::map<uint32_t, PlainMapping>& plain() { return plain_; }
  const std::map<uint32_t, PlainMapping>& plain() const { return plain_; }

  FaultRecord appendFault(PrincipalId p, GuardId g, uint32_t addr,
                          AccessKind kind, FaultCause cause);
  const std::vector<FaultRecord>& faultLog() const { return faultLog_; }
  std::string faultLogText() const;

 private:
  std::map<GuardId, Guard> guards_;
  GuardId next_ = 1;
  AddressSpace space_;
  std::map<uint32_t, PlainMapping> plain_; // base -> mapping
  std::vector<FaultRecord> faultLog_;
  uint64_t faultSeq_ = 0;
};

struct AccessVerdict {
  bool allowed = false;
  FaultCause cause = FaultCause::PagePerm;
  GuardId guard = 0; // guard the address resolved to, 0 if none
};

// Pure decision pipeline: mapped guard page -> lock -> label flow -> logical
// page permission -> hardware backing. Mutates nothing; commit effects
// (domain restore, fault, kill) happen in the kernel transaction.
AccessVerdict classifyAccess(const GuardTable& guards,
                             const PrincipalRegistry& principals,
                             const DomainEngine& domains, PrincipalId caller,
                             uint64_t ptr, AccessKind kind);

uint64_t guardContentChecksum(const Guard& g);

} // namespace mg

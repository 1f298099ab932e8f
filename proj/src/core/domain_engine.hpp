#pragma once

#include <list>
#include <random>

#include "core/types.hpp"

namespace mg {

// DACR two-bit field values.
enum class AccessMode : uint8_t {
  NoAccess = 0b00,
  Client = 0b01,
  Reserved = 0b10,
  Manager = 0b11,
};
const char* accessModeName(AccessMode m);

// 16 two-bit fields and their packed 32-bit image.
struct DacrRegister {
  std::array<AccessMode, kDomainFields> fields{};

  uint32_t packed() const {
    uint32_t img = 0;
    for (int i = 0; i < kDomainFields; ++i)
      img |= uint32_t(fields[size_t(i)]) << (2 * i);
    return img;
  }
  static DacrRegister unpack(uint32_t img) {
    DacrRegister r;
    for (int i = 0; i < kDomainFields; ++i)
      r.fields[size_t(i)] = AccessMode((img >> (2 * i)) & 0b11);
    return r;
  }
  friend bool operator==(const DacrRegister&, const DacrRegister&) = default;
};

enum class DacrVerdict : uint8_t { Allowed, DomainFault, DeferToPage };

// Pure Table-lookup: NoAccess faults unconditionally, Manager bypasses page
// permissions, Client defers to them.
DacrVerdict dacrCheck(AccessMode mode);

struct AttachOutcome {
  int index = -1;
  bool evicted = false;
  GuardId victim = 0;
  bool restored = false;
};

// Simulated hardware backing layers. Hardware domains are multiplexed over
// the assignable DACR fields with LRU eviction; the MTE side keeps the
// 4-bit tag per 16-byte granule.
class DomainEngine {
 public:
  void configure(const Config& cfg);

  // -- memory domains ---------------------------------------------------
  // Ensures `guard` holds a domain index, evicting the least recently used
  // resident guard when none is free. `modeIfFresh` is programmed unless a
  // spilled mode is being restored.
  AttachOutcome attach(GuardId guard, AccessMode modeIfFresh);
  Status detach(GuardId guard);
  void touch(GuardId guard); // refresh recency; no-op when not resident
  bool resident(GuardId guard) const { return residency_.count(guard) > 0; }
  bool spilled(GuardId guard) const { return spill_.count(guard) > 0; }
  std::optional<int> indexOf(GuardId guard) const;
  // Mode the hardware would apply: live DACR field when resident, saved
  // spill mode otherwise.
  std::optional<AccessMode> effectiveMode(GuardId guard) const;
  // Reprograms the guard's access mode wherever it lives (field or spill).
  void programMode(GuardId guard, AccessMode mode);

  Status setDacr(int index, AccessMode mode);
  const DacrRegister& dacr() const { return dacr_; }
  std::vector<GuardId> residentsByRecency() const; // least recent first
  const std::map<GuardId, AccessMode>& spillMap() const { return spill_; }

  // -- counters -----------------------------------------------------------
  void countTlbFlush() { counters_.tlbFlushes++; }
  void countPageTableWrites(uint64_t n) { counters_.pageTableWrites += n; }
  void contextSwitch(bool mdOwnerInvolved);
  const EventCounters& counters() const { return counters_; }

  // -- memory tagging -----------------------------------------------------
  Status tagRegion(AddressRange range, uint8_t tag);
  uint8_t granuleTag(uint32_t addr) const;
  bool tagCheck(uint8_t pointerTag, uint32_t addr) const {
    return granuleTag(addr) == pointerTag;
  }
  // Fresh allocation tag: non-zero, never equal to the granules adjacent to
  // the block, so a one-granule overrun always mismatches.
  uint8_t pickAllocationTag(AddressRange block, std::mt19937_64& rng) const;
  // Tag applied on free, per the configured retag policy.
  uint8_t pickRetag(uint8_t current, std::mt19937_64& rng) const;
  void dropTags(AddressRange range);
  const std::map<uint32_t, uint8_t>& granules() const { return granules_; }

 private:
  int freeIndex() const;

  int domainCount_ = kDomainFields;
  MteRetagPolicy retagPolicy_ = MteRetagPolicy::DifferentTag;
  DacrRegister dacr_{};
  std::map<GuardId, int> residency_;
  std::list<GuardId> lru_; // front = least recently used
  std::map<GuardId, AccessMode> spill_;
  std::map<uint32_t, uint8_t> granules_; // granule index -> tag; absent = 0
  EventCounters counters_;
};

} // namespace mg

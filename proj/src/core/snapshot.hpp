#pragma once

#include "core/kernel.hpp"

namespace mg {

// Plain-data image of the kernel state. The access oracle consumes this and
// nothing else, so its decisions share no code with the live pipeline.
struct StateSnapshot {
  struct PrincipalSnap {
    PrincipalId id = 0;
    bool running = true;
    std::set<TagId> label;
    std::set<TagId> plus;
    std::set<TagId> minus;
    friend bool operator==(const PrincipalSnap&,
                           const PrincipalSnap&) = default;
  };
  struct PageSnap {
    uint32_t index = 0;
    bool present = false;
    PagePerm perm = PagePerm::None;
    int domainField = -1;
    friend bool operator==(const PageSnap&, const PageSnap&) = default;
  };
  struct GuardSnap {
    GuardId id = 0;
    TagId tag = 0;     // current tag; equals the lock tag while locked
    TagId realTag = 0; // the guard's own tag regardless of lock state
    bool locked = false;
    PrincipalId owner = 0;
    Backing backing = Backing::Plain;
    bool mapped = false;
    AddressRange range;
    PagePerm perm = PagePerm::None;
    uint64_t bitmapRead = 0, bitmapWrite = 0, bitmapExec = 0, bitmapAlloc = 0;
    std::vector<PageSnap> pages;
    std::vector<GuardHeap::FreeBlock> headFree, tailFree;
    std::map<uint32_t, uint32_t> liveBlocks;
    uint64_t contentHash = 0;
    friend bool operator==(const GuardSnap&, const GuardSnap&) = default;
  };

  std::vector<PrincipalSnap> principals;
  std::vector<GuardSnap> guards;
  std::array<uint8_t, kDomainFields> dacrFields{}; // two-bit modes
  int domainCount = kDomainFields;
  std::map<GuardId, int> residency;
  std::map<GuardId, uint8_t> spillModes;
  std::map<uint32_t, uint8_t> granules;
  std::vector<PlainMapping> plainMappings;
  std::map<GuardId, PrincipalId> lockedBy;
  std::set<std::tuple<PrincipalId, PrincipalId, TagId>> delegation;
  std::set<std::pair<PrincipalId, TagId>> declassRecords;
  EventCounters counters;
  uint64_t faultCount = 0;

  std::string serialize() const;
  friend bool operator==(const StateSnapshot&, const StateSnapshot&) = default;
};

StateSnapshot takeSnapshot(const Kernel& k, bool includeContentHash = true);

// Core guard state used by the eviction round-trip comparison: range,
// logical permission, operation bitmaps, lock state, heap.
std::string guardCoreState(const StateSnapshot::GuardSnap& g);

} // namespace mg

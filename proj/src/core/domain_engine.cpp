#include "core/domain_engine.hpp"

#include <algorithm>

namespace mg {

const char* accessModeName(AccessMode m) {
  switch (m) {
    case AccessMode::NoAccess: return "no-access";
    case AccessMode::Client: return "client";
    case AccessMode::Reserved: return "reserved";
    case AccessMode::Manager: return "manager";
  }
  return "?";
}

DacrVerdict dacrCheck(AccessMode mode) {
  switch (mode) {
    case AccessMode::Manager: return DacrVerdict::Allowed;
    case AccessMode::Client: return DacrVerdict::DeferToPage;
    case AccessMode::NoAccess:
    case AccessMode::Reserved: return DacrVerdict::DomainFault;
  }
  return DacrVerdict::DomainFault;
}

void DomainEngine::configure(const Config& cfg) {
  domainCount_ = cfg.domainCount;
  retagPolicy_ = cfg.retagPolicy;
  dacr_ = DacrRegister{};
  dacr_.fields[0] = AccessMode::Client; // kernel
  dacr_.fields[1] = AccessMode::Client; // default user
  residency_.clear();
  lru_.clear();
  spill_.clear();
  granules_.clear();
  counters_ = EventCounters{};
}

int DomainEngine::freeIndex() const {
  for (int i = kReservedDomains; i < domainCount_; ++i) {
    bool used = false;
    for (auto& [g, idx] : residency_)
      if (idx == i) { used = true; break; }
    if (!used) return i;
  }
  return -1;
}

AttachOutcome DomainEngine::attach(GuardId guard, AccessMode modeIfFresh) {
  AttachOutcome out;
  if (auto it = residency_.find(guard); it != residency_.end()) {
    out.index = it->second;
    touch(guard);
    return out;
  }
  int idx = freeIndex();
  if (idx < 0) {
    GuardId victim = lru_.front();
    lru_.pop_front();
    idx = residency_.at(victim);
    spill_[victim] = dacr_.fields[size_t(idx)];
    residency_.erase(victim);
    counters_.domainEvictions++;
    out.evicted = true;
    out.victim = victim;
  }
  AccessMode mode = modeIfFresh;
  if (auto sp = spill_.find(guard); sp != spill_.end()) {
    mode = sp->second;
    spill_.erase(sp);
    counters_.domainRestores++;
    out.restored = true;
  }
  residency_[guard] = idx;
  lru_.push_back(guard);
  dacr_.fields[size_t(idx)] = mode;
  counters_.dacrWrites++;
  out.index = idx;
  return out;
}

Status DomainEngine::detach(GuardId guard) {
  if (auto it = residency_.find(guard); it != residency_.end()) {
    residency_.erase(it);
    lru_.remove(guard);
    return okStatus();
  }
  if (spill_.erase(guard) > 0) return okStatus();
  return ApiError{ErrorCode::NoSuchGuard, "guard holds no domain"};
}

void DomainEngine::touch(GuardId guard) {
  if (!residency_.count(guard)) return;
  lru_.remove(guard);
  lru_.push_back(guard);
}

std::optional<int> DomainEngine::indexOf(GuardId guard) const {
  auto it = residency_.find(guard);
  if (it == residency_.end()) return std::nullopt;
  return it->second;
}

std::optional<AccessMode> DomainEngine::effectiveMode(GuardId guard) const {
  if (auto it = residency_.find(guard); it != residency_.end())
    return dacr_.fields[size_t(it->second)];
  if (auto it = spill_.find(guard); it != spill_.end()) return it->second;
  return std::nullopt;
}

void DomainEngine::programMode(GuardId guard, AccessMode mode) {
  if (auto it = residency_.find(guard); it != residency_.end()) {
    dacr_.fields[size_t(it->second)] = mode;
  } else if (auto it = spill_.find(guard); it != spill_.end()) {
    it->second = mode;
  }
  counters_.dacrWrites++;
}

Status DomainEngine::setDacr(int index, AccessMode mode) {
  if (index < kReservedDomains || index >= domainCount_)
    return ApiError{ErrorCode::ReservedIndex, "domain index reserved or out of range"};
  if (mode == AccessMode::Reserved)
    return ApiError{ErrorCode::ReservedMode, "reserved access mode is unprogrammable"};
  dacr_.fields[size_t(index)] = mode;
  counters_.dacrWrites++;
  return okStatus();
}

std::vector<GuardId> DomainEngine::residentsByRecency() const {
  return {lru_.begin(), lru_.end()};
}

void DomainEngine::contextSwitch(bool mdOwnerInvolved) {
  counters_.contextSwitches++;
  if (mdOwnerInvolved) {
    counters_.pageTableReloads++;
    counters_.tlbFlushes++;
  }
}

Status DomainEngine::tagRegion(AddressRange range, uint8_t tag) {
  if (range.base % kGranuleSize != 0 || range.length % kGranuleSize != 0)
    return ApiError{ErrorCode::MisalignedRange, "range not granule aligned"};
  for (uint32_t a = range.base; a < range.end(); a += kGranuleSize)
    granules_[a / kGranuleSize] = tag;
  return okStatus();
}

uint8_t DomainEngine::granuleTag(uint32_t addr) const {
  auto it = granules_.find(addr / kGranuleSize);
  return it == granules_.end() ? 0 : it->second;
}

uint8_t DomainEngine::pickAllocationTag(AddressRange block,
                                        std::mt19937_64& rng) const {
  uint8_t left = block.base >= kGranuleSize
                     ? granuleTag(block.base - kGranuleSize)
                     : 0;
  uint8_t right = granuleTag(block.end());
  std::vector<uint8_t> pool;
  for (uint8_t t = 1; t <= 15; ++t)
    if (t != left && t != right) pool.push_back(t);
  return pool[rng() % pool.size()];
}

uint8_t DomainEngine::pickRetag(uint8_t current, std::mt19937_64& rng) const {
  if (retagPolicy_ == MteRetagPolicy::RandomTag) return uint8_t(1 + rng() % 15);
  uint8_t t = uint8_t(1 + rng() % 14);
  if (t >= current) t++; // skip the current tag; stays within [1,15]
  return t;
}

void DomainEngine::dropTags(AddressRange range) {
  for (uint32_t a = range.base; a < range.end(); a += kGranuleSize)
    granules_.erase(a / kGranuleSize);
}

} // namespace mg

#include "core/guard_memory.hpp"

#include <sstream>

#include "core/hash.hpp"
#include "core/label_core.hpp"

namespace mg {

std::optional<uint32_t> AddressSpace::reserve(uint32_t length) {
  uint32_t cursor = base_;
  for (auto& [b, len] : reserved_) {
    if (b >= cursor && b - cursor >= length) break;
    uint32_t end = b + len;
    if (end > cursor) cursor = end;
  }
  if (cursor + length > ceiling_ || cursor + length < cursor)
    return std::nullopt;
  reserved_[cursor] = length;
  return cursor;
}

bool AddressSpace::reserveFixed(uint32_t base, uint32_t length) {
  AddressRange want{base, length};
  if (base < base_ || want.end() > ceiling_ || want.end() < base) return false;
  if (overlapsReserved(want)) return false;
  reserved_[base] = length;
  return true;
}

void AddressSpace::release(uint32_t base) { reserved_.erase(base); }

bool AddressSpace::overlapsReserved(AddressRange r) const {
  for (auto& [b, len] : reserved_)
    if (r.overlaps({b, len})) return true;
  return false;
}

Guard* GuardTable::find(GuardId id) {
  auto it = guards_.find(id);
  return it == guards_.end() ? nullptr : &it->second;
}

const Guard* GuardTable::find(GuardId id) const {
  auto it = guards_.find(id);
  return it == guards_.end() ? nullptr : &it->second;
}

Guard& GuardTable::create(TagId tag, PrincipalId owner, Backing backing) {
  GuardId id = next_++;
  Guard g;
  g.id = id;
  g.tag = tag;
  g.owner = owner;
  g.backing = backing;
  g.perms.setAll(owner);
  auto [it, _] = guards_.emplace(id, std::move(g));
  return it->second;
}

const Guard* GuardTable::guardAt(uint32_t addr) const {
  for (auto& [id, g] : guards_)
    if (g.mapped && g.range.contains(addr)) return &g;
  return nullptr;
}

Guard* GuardTable::guardAt(uint32_t addr) {
  return const_cast<Guard*>(
      static_cast<const GuardTable*>(this)->guardAt(addr));
}

FaultRecord GuardTable::appendFault(PrincipalId p, GuardId g, uint32_t addr,
                                    AccessKind kind, FaultCause cause) {
  FaultRecord rec{++faultSeq_, p, g, addr, kind, cause};
  faultLog_.push_back(rec);
  return rec;
}

std::string GuardTable::faultLogText() const {
  std::ostringstream os;
  for (const auto& f : faultLog_) os << f.line() << "\n";
  return os.str();
}

AccessVerdict classifyAccess(const GuardTable& guards,
                             const PrincipalRegistry& principals,
                             const DomainEngine& domains, PrincipalId caller,
                             uint64_t ptr, AccessKind kind) {
  uint32_t addr = pointerAddr(ptr);
  const Guard* g = guards.guardAt(addr);
  if (!g) return {false, FaultCause::PagePerm, 0};

  uint32_t pageIdx = (addr - g->range.base) / kPageSize;
  auto pe = g->pageTable.entries.find(pageIdx);
  if (pe == g->pageTable.entries.end() || !pe->second.present)
    return {false, FaultCause::PagePerm, g->id};

  if (g->locked()) return {false, FaultCause::Locked, g->id};

  const Principal* p = principals.find(caller);
  Label guardLabel{g->tag};
  if (!p || !checkFlow(guardLabel, p->label))
    return {false, FaultCause::Label, g->id};

  if (!permAdmits(g->perm, kind))
    return {false, FaultCause::PagePerm, g->id};

  switch (g->backing) {
    case Backing::Plain:
      break;
    case Backing::Md: {
      auto mode = domains.effectiveMode(g->id);
      // mapped md guards are always resident or spilled; fail closed if not
      if (!mode) return {false, FaultCause::DomainFault, g->id};
      switch (dacrCheck(*mode)) {
        case DacrVerdict::Allowed:
          break;
        case DacrVerdict::DomainFault:
          return {false, FaultCause::DomainFault, g->id};
        case DacrVerdict::DeferToPage:
          if (!permAdmits(pe->second.perm, kind))
            return {false, FaultCause::PagePerm, g->id};
          break;
      }
      break;
    }
    case Backing::Mte:
      if (!domains.tagCheck(pointerTag(ptr), addr))
        return {false, FaultCause::TagMismatch, g->id};
      break;
  }
  return {true, FaultCause::PagePerm, g->id};
}

uint64_t guardContentChecksum(const Guard& g) {
  if (!g.mapped) return fnv1a64(nullptr, 0);
  return fnv1a64(g.content.data(), g.content.size());
}

} // namespace mg

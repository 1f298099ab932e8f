#include "core/oracle.hpp"

namespace mg {

namespace {

// Local page-permission truth table; intentionally not shared with the
// pipeline's permAdmits.
bool permitsKind(PagePerm p, AccessKind k) {
  bool r = false, w = false, x = false;
  switch (p) {
    case PagePerm::None: break;
    case PagePerm::RO: r = true; break;
    case PagePerm::WO: w = true; break;
    case PagePerm::EO: x = true; break;
    case PagePerm::RW: r = w = true; break;
    case PagePerm::RX: r = x = true; break;
    case PagePerm::RWX: r = w = x = true; break;
  }
  if (k == AccessKind::Read) return r;
  if (k == AccessKind::Write) return w;
  if (k == AccessKind::Execute) return x;
  return false;
}

} // namespace

OracleVerdict oracleAccess(const StateSnapshot& state, PrincipalId principal,
                           uint64_t ptr, AccessKind kind) {
  uint32_t addr = uint32_t(ptr & 0xFFFFFFFFu);
  uint8_t ptrTag = uint8_t((ptr >> 56) & 0xF);

  // (1) the address must land on a present page of a mapped guard
  const StateSnapshot::GuardSnap* g = nullptr;
  for (const auto& cand : state.guards) {
    if (!cand.mapped) continue;
    if (addr >= cand.range.base &&
        addr < cand.range.base + cand.range.length) {
      g = &cand;
      break;
    }
  }
  if (!g) return {false, FaultCause::PagePerm};
  uint32_t pageIdx = (addr - g->range.base) / kPageSize;
  const StateSnapshot::PageSnap* page = nullptr;
  for (const auto& pg : g->pages)
    if (pg.index == pageIdx) {
      page = &pg;
      break;
    }
  if (!page || !page->present) return {false, FaultCause::PagePerm};

  // (2) locked guards admit nobody
  if (g->locked) return {false, FaultCause::Locked};

  // (3) flow: the guard's tag set must be contained in the principal's label
  const StateSnapshot::PrincipalSnap* p = nullptr;
  for (const auto& cand : state.principals)
    if (cand.id == principal) {
      p = &cand;
      break;
    }
  bool flows = false;
  if (p)
    for (TagId t : p->label)
      if (t == g->tag) {
        flows = true;
        break;
      }
  if (!flows) return {false, FaultCause::Label};

  // (4) the guard's uniform permission must admit the access kind
  if (!permitsKind(g->perm, kind)) return {false, FaultCause::PagePerm};

  // (5) hardware backing
  if (g->backing == Backing::Md) {
    int mode = -1;
    auto res = state.residency.find(g->id);
    if (res != state.residency.end()) {
      mode = state.dacrFields[size_t(res->second)];
    } else {
      auto sp = state.spillModes.find(g->id);
      if (sp != state.spillModes.end()) mode = sp->second;
    }
    if (mode == 0b11) return {true, FaultCause::PagePerm}; // manager: no check
    if (mode == 0b01) {                                    // client: page walk
      if (!permitsKind(page->perm, kind))
        return {false, FaultCause::PagePerm};
      return {true, FaultCause::PagePerm};
    }
    return {false, FaultCause::DomainFault}; // no-access, reserved, or absent
  }
  if (g->backing == Backing::Mte) {
    uint8_t granule = 0;
    auto it = state.granules.find(addr / kGranuleSize);
    if (it != state.granules.end()) granule = it->second;
    if (granule != ptrTag) return {false, FaultCause::TagMismatch};
  }
  return {true, FaultCause::PagePerm};
}

} // namespace mg

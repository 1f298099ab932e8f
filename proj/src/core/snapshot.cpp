#include "core/snapshot.hpp"

#include <sstream>

#include "core/hash.hpp"

namespace mg {

namespace {

uint64_t bitsetWord(const std::bitset<kMaxSlots>& b) {
  return b.to_ullong();
}

} // namespace

StateSnapshot takeSnapshot(const Kernel& k, bool includeContentHash) {
  StateSnapshot s;
  for (auto& [id, p] : k.principals().all()) {
    StateSnapshot::PrincipalSnap ps;
    ps.id = id;
    ps.running = p.running;
    ps.label = p.label;
    ps.plus = p.caps.plusSet();
    ps.minus = p.caps.minusSet();
    s.principals.push_back(std::move(ps));
  }
  for (auto& [id, g] : k.guards().all()) {
    StateSnapshot::GuardSnap gs;
    gs.id = id;
    gs.tag = g.tag;
    gs.realTag = g.realTag();
    gs.locked = g.locked();
    gs.owner = g.owner;
    gs.backing = g.backing;
    gs.mapped = g.mapped;
    gs.range = g.range;
    gs.perm = g.perm;
    gs.bitmapRead = bitsetWord(g.perms.read);
    gs.bitmapWrite = bitsetWord(g.perms.write);
    gs.bitmapExec = bitsetWord(g.perms.execute);
    gs.bitmapAlloc = bitsetWord(g.perms.allocate);
    for (auto& [idx, pe] : g.pageTable.entries)
      gs.pages.push_back({idx, pe.present, pe.perm,
                          pe.domainField ? *pe.domainField : -1});
    gs.headFree = g.heap.headFree();
    gs.tailFree = g.heap.tailFree();
    gs.liveBlocks = g.heap.liveBlocks();
    if (includeContentHash) gs.contentHash = guardContentChecksum(g);
    s.guards.push_back(std::move(gs));
  }
  for (int i = 0; i < kDomainFields; ++i)
    s.dacrFields[size_t(i)] = uint8_t(k.domains().dacr().fields[size_t(i)]);
  s.domainCount = k.config().domainCount;
  for (auto& [g, idx] : k.domains().spillMap())
    s.spillModes[g] = uint8_t(idx);
  // residency is exported through indexOf to keep the interface narrow
  for (auto& [gid, guard] : k.guards().all())
    if (auto idx = k.domains().indexOf(gid)) s.residency[gid] = *idx;
  s.granules = k.domains().granules();
  for (auto& [b, m] : k.guards().plain()) s.plainMappings.push_back(m);
  s.lockedBy = k.principals().lockedBy();
  for (auto& e : k.delegation().edges())
    s.delegation.insert({e.grantor, e.grantee, e.tag});
  s.declassRecords = k.declassRecords();
  s.counters = k.counters();
  s.faultCount = k.guards().faultLog().size();
  return s;
}

std::string guardCoreState(const StateSnapshot::GuardSnap& g) {
  std::ostringstream os;
  os << "guard " << g.id << " tag " << g.realTag << " locked " << g.locked
     << " range " << g.range.base << "+" << g.range.length
     << " perm " << permName(g.perm) << " bitmaps " << g.bitmapRead << ","
     << g.bitmapWrite << "," << g.bitmapExec << "," << g.bitmapAlloc
     << " heap live";
  for (auto& [off, sz] : g.liveBlocks) os << " " << off << ":" << sz;
  os << " head";
  for (auto& b : g.headFree) os << " " << b.off << ":" << b.size;
  os << " tail";
  for (auto& b : g.tailFree) os << " " << b.off << ":" << b.size;
  os << " content 0x" << std::hex << g.contentHash;
  return os.str();
}

std::string StateSnapshot::serialize() const {
  std::ostringstream os;
  os << "snapshot v1\n";
  for (auto& p : principals) {
    os << "principal " << p.id << " running " << p.running << " label";
    for (TagId t : p.label) os << " " << t;
    os << " plus";
    for (TagId t : p.plus) os << " " << t;
    os << " minus";
    for (TagId t : p.minus) os << " " << t;
    os << "\n";
  }
  for (auto& g : guards) {
    os << "guard " << g.id << " tag " << g.tag << " real " << g.realTag
       << " locked " << g.locked
       << " owner " << g.owner << " backing " << backingName(g.backing)
       << " mapped " << g.mapped << " base " << g.range.base << " len "
       << g.range.length << " perm " << permName(g.perm) << " bitmaps "
       << g.bitmapRead << "," << g.bitmapWrite << "," << g.bitmapExec << ","
       << g.bitmapAlloc << " content " << g.contentHash << "\n";
    for (auto& pg : g.pages)
      os << "  page " << pg.index << " present " << pg.present << " perm "
         << permName(pg.perm) << " domain " << pg.domainField << "\n";
    os << "  heap live";
    for (auto& [off, sz] : g.liveBlocks) os << " " << off << ":" << sz;
    os << " head";
    for (auto& b : g.headFree) os << " " << b.off << ":" << b.size;
    os << " tail";
    for (auto& b : g.tailFree) os << " " << b.off << ":" << b.size;
    os << "\n";
  }
  os << "dacr";
  for (auto f : dacrFields) os << " " << int(f);
  os << "\nresidency";
  for (auto& [g, i] : residency) os << " " << g << ":" << i;
  os << "\nspill";
  for (auto& [g, m] : spillModes) os << " " << g << ":" << int(m);
  os << "\ngranules";
  for (auto& [idx, t] : granules) os << " " << idx << ":" << int(t);
  os << "\nplain";
  for (auto& m : plainMappings)
    os << " " << m.range.base << "+" << m.range.length << ":"
       << permName(m.perm) << ":" << m.owner;
  os << "\nlocked";
  for (auto& [g, p] : lockedBy) os << " " << g << ":" << p;
  os << "\ndelegation";
  for (auto& [a, b, t] : delegation) os << " " << a << ">" << b << ":" << t;
  os << "\ndeclass";
  for (auto& [p, t] : declassRecords) os << " " << p << ":" << t;
  os << "\ncounters " << counters.csvRow() << "," << counters.pageTableWrites;
  os << "\nfaults " << faultCount << "\n";
  return os.str();
}

} // namespace mg

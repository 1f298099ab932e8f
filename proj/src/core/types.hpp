#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace mg {

// ---- fixed geometry -------------------------------------------------------

inline constexpr uint32_t kPageSize = 4096;
inline constexpr uint32_t kGranuleSize = 16;

// Width of the per-guard operation bitmaps; also the maximum principal id
// that can own a bitmap slot.
inline constexpr uint32_t kMaxSlots = 64;

// Tag identities live in the low 30 bits. Identity 0 is reserved-invalid and
// the top identity is reserved as the internal lock tag, so the issuable
// range is [1, kMaxTagIdentity].
inline constexpr uint32_t kTagIdentityMask = 0x3FFFFFFFu;
inline constexpr uint32_t kLockTag = 0x3FFFFFFFu;
inline constexpr uint32_t kMaxTagIdentity = 0x3FFFFFFEu;

inline constexpr uint32_t kCapPlusBit = 0x80000000u;  // bit 31
inline constexpr uint32_t kCapMinusBit = 0x40000000u; // bit 30

inline constexpr int kDomainFields = 16;
inline constexpr int kReservedDomains = 2; // 0 = kernel, 1 = default user

using TagId = uint32_t;       // identity only (low 30 bits)
using PrincipalId = uint32_t; // 0 = initial principal
using GuardId = uint32_t;     // issued from 1

// ---- capabilities and labels ----------------------------------------------

struct Capability {
  TagId tag = 0;
  bool plus = false;
  bool minus = false;

  uint32_t encode() const {
    return (tag & kTagIdentityMask) | (plus ? kCapPlusBit : 0) |
           (minus ? kCapMinusBit : 0);
  }
  static Capability decode(uint32_t raw) {
    return Capability{raw & kTagIdentityMask, (raw & kCapPlusBit) != 0,
                      (raw & kCapMinusBit) != 0};
  }
  bool valid() const { return tag != 0 && (plus || minus); }

  friend bool operator==(const Capability&, const Capability&) = default;
  friend auto operator<=>(const Capability&, const Capability&) = default;
};

using Label = std::set<TagId>;

// Per-principal capability list. plus/minus views are derived on demand.
class CapSet {
 public:
  void addPlus(TagId t) { flags_[t] |= 1; }
  void addMinus(TagId t) { flags_[t] |= 2; }
  void add(const Capability& c) {
    if (c.plus) addPlus(c.tag);
    if (c.minus) addMinus(c.tag);
  }
  bool hasPlus(TagId t) const {
    auto it = flags_.find(t);
    return it != flags_.end() && (it->second & 1);
  }
  bool hasMinus(TagId t) const {
    auto it = flags_.find(t);
    return it != flags_.end() && (it->second & 2);
  }
  bool has(const Capability& c) const {
    return (!c.plus || hasPlus(c.tag)) && (!c.minus || hasMinus(c.tag));
  }
  Label plusSet() const {
    Label out;
    for (auto& [t, f] : flags_)
      if (f & 1) out.insert(t);
    return out;
  }
  Label minusSet() const {
    Label out;
    for (auto& [t, f] : flags_)
      if (f & 2) out.insert(t);
    return out;
  }
  size_t plusCount() const { return plusSet().size(); }
  size_t minusCount() const { return minusSet().size(); }
  const std::map<TagId, uint8_t>& raw() const { return flags_; }

  friend bool operator==(const CapSet&, const CapSet&) = default;

 private:
  std::map<TagId, uint8_t> flags_; // bit0 = plus, bit1 = minus
};

// ---- memory geometry -------------------------------------------------------

enum class PagePerm : uint8_t { None = 0, RO, WO, EO, RW, RX, RWX };

enum class AccessKind : uint8_t { Read = 0, Write, Execute, Layout };

inline bool permAdmits(PagePerm p, AccessKind k) {
  switch (k) {
    case AccessKind::Read:
      return p == PagePerm::RO || p == PagePerm::RW || p == PagePerm::RX ||
             p == PagePerm::RWX;
    case AccessKind::Write:
      return p == PagePerm::WO || p == PagePerm::RW || p == PagePerm::RWX;
    case AccessKind::Execute:
      return p == PagePerm::EO || p == PagePerm::RX || p == PagePerm::RWX;
    case AccessKind::Layout:
      return false;
  }
  return false;
}

const char* permName(PagePerm p);
std::optional<PagePerm> permFromName(const std::string& s);
const char* accessKindName(AccessKind k);

enum class Backing : uint8_t { Plain = 0, Md, Mte };
const char* backingName(Backing b);
std::optional<Backing> backingFromName(const std::string& s);

struct AddressRange {
  uint32_t base = 0;
  uint32_t length = 0;
  uint32_t end() const { return base + length; }
  bool contains(uint32_t addr) const { return addr >= base && addr < end(); }
  bool overlaps(const AddressRange& o) const {
    return base < o.end() && o.base < end();
  }
  friend bool operator==(const AddressRange&, const AddressRange&) = default;
};

// Tagged simulated pointer: low 32 bits address, bits [59:56] carry the
// memory-tag nibble (top-byte-ignore style).
inline uint64_t makePointer(uint32_t addr, uint8_t tag) {
  return (uint64_t(tag & 0xF) << 56) | addr;
}
inline uint32_t pointerAddr(uint64_t ptr) { return uint32_t(ptr); }
inline uint8_t pointerTag(uint64_t ptr) { return uint8_t((ptr >> 56) & 0xF); }

// ---- faults ----------------------------------------------------------------

enum class FaultCause : uint8_t {
  DomainFault = 0,
  PagePerm,
  Locked,
  Label,
  TagMismatch
};
const char* faultCauseName(FaultCause c);
std::optional<FaultCause> faultCauseFromName(const std::string& s);

struct FaultRecord {
  uint64_t seq = 0;
  PrincipalId principal = 0;
  GuardId guard = 0; // 0 when the address resolves to no guard
  uint32_t address = 0;
  AccessKind kind = AccessKind::Read;
  FaultCause cause = FaultCause::PagePerm;

  std::string line() const; // "seq principal guard address kind cause"
  friend bool operator==(const FaultRecord&, const FaultRecord&) = default;
};

// ---- errors ----------------------------------------------------------------

enum class ErrorCode : uint8_t {
  PermissionDenied = 1,
  NoSuchGuard,
  NoSuchPrincipal,
  GuardLocked,
  AlreadyLocked,
  NotLocked,
  InvalidCapability,
  InvalidFree,
  OutOfGuardMemory,
  OutOfAddressSpace,
  GuardLimitExceeded,
  TagSpaceExhausted,
  ReservedMode,
  ReservedIndex,
  MisalignedRange,
  NoSuchEdge,
  ParseError,
};
const char* errorCodeName(ErrorCode c);
std::optional<ErrorCode> errorCodeFromName(const std::string& s);

struct ApiError {
  ErrorCode code;
  std::string detail;
};

template <typename T>
using Result = std::variant<T, ApiError>;

struct Unit {
  friend bool operator==(const Unit&, const Unit&) = default;
};
using Status = Result<Unit>;

template <typename T>
bool isOk(const Result<T>& r) {
  return std::holds_alternative<T>(r);
}
template <typename T>
const T& value(const Result<T>& r) {
  return std::get<T>(r);
}
template <typename T>
const ApiError& error(const Result<T>& r) {
  return std::get<ApiError>(r);
}
inline Status okStatus() { return Status{Unit{}}; }

// ---- event counters --------------------------------------------------------

struct EventCounters {
  uint64_t dacrWrites = 0;
  uint64_t tlbFlushes = 0;
  uint64_t pageTableReloads = 0;
  uint64_t domainEvictions = 0;
  uint64_t domainRestores = 0;
  uint64_t contextSwitches = 0;
  // Not part of the published CSV row; tracks slow-path page table entry
  // rewrites.
  uint64_t pageTableWrites = 0;

  std::string csvHeader() const;
  std::string csvRow() const;
  uint64_t totalDomainEvents() const {
    return dacrWrites + tlbFlushes + pageTableReloads + domainEvictions +
           domainRestores;
  }
  friend bool operator==(const EventCounters&, const EventCounters&) = default;
};

// ---- principal lifecycle ----------------------------------------------------

struct ExitStatus {
  enum class Kind : uint8_t { Normal = 0, FaultKill };
  Kind kind = Kind::Normal;
  FaultCause cause = FaultCause::PagePerm; // valid when FaultKill
  uint64_t faultSeq = 0;                   // valid when FaultKill

  std::string describe() const;
  friend bool operator==(const ExitStatus&, const ExitStatus&) = default;
};

// ---- engine configuration ---------------------------------------------------

enum class MteRetagPolicy : uint8_t {
  DifferentTag = 0, // new tag always differs from the tag being replaced
  RandomTag,        // uniform over the 15 non-zero tags, may collide
};

struct Config {
  uint64_t seed = 1;
  int domainCount = kDomainFields; // total DACR fields in use, <= 16
  uint32_t guardLimit = 64;        // live guards
  Backing defaultBacking = Backing::Md;
  uint32_t addressBase = 0x10000000u;
  uint32_t addressCeiling = 0xF0000000u;
  MteRetagPolicy retagPolicy = MteRetagPolicy::DifferentTag;

  int assignableDomains() const { return domainCount - kReservedDomains; }
};

} // namespace mg

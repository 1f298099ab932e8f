#include "core/types.hpp"

#include <cstdio>

namespace mg {

const char* permName(PagePerm p) {
  switch (p) {
    case PagePerm::None: return "none";
    case PagePerm::RO: return "ro";
    case PagePerm::WO: return "wo";
    case PagePerm::EO: return "eo";
    case PagePerm::RW: return "rw";
    case PagePerm::RX: return "rx";
    case PagePerm::RWX: return "rwx";
  }
  return "?";
}

std::optional<PagePerm> permFromName(const std::string& s) {
  if (s == "none") return PagePerm::None;
  if (s == "ro") return PagePerm::RO;
  if (s == "wo") return PagePerm::WO;
  if (s == "eo") return PagePerm::EO;
  if (s == "rw") return PagePerm::RW;
  if (s == "rx") return PagePerm::RX;
  if (s == "rwx") return PagePerm::RWX;
  return std::nullopt;
}

const char* accessKindName(AccessKind k) {
  switch (k) {
    case AccessKind::Read: return "read";
    case AccessKind::Write: return "write";
    case AccessKind::Execute: return "execute";
    case AccessKind::Layout: return "layout";
  }
  return "?";
}

const char* backingName(Backing b) {
  switch (b) {
    case Backing::Plain: return "plain";
    case Backing::Md: return "md";
    case Backing::Mte: return "mte";
  }
  return "?";
}

std::optional<Backing> backingFromName(const std::string& s) {
  if (s == "plain") return Backing::Plain;
  if (s == "md") return Backing::Md;
  if (s == "mte") return Backing::Mte;
  return std::nullopt;
}

const char* faultCauseName(FaultCause c) {
  switch (c) {
    case FaultCause::DomainFault: return "domain-fault";
    case FaultCause::PagePerm: return "page-perm";
    case FaultCause::Locked: return "locked";
    case FaultCause::Label: return "label";
    case FaultCause::TagMismatch: return "tag-mismatch";
  }
  return "?";
}

std::optional<FaultCause> faultCauseFromName(const std::string& s) {
  if (s == "domain-fault") return FaultCause::DomainFault;
  if (s == "page-perm") return FaultCause::PagePerm;
  if (s == "locked") return FaultCause::Locked;
  if (s == "label") return FaultCause::Label;
  if (s == "tag-mismatch") return FaultCause::TagMismatch;
  return std::nullopt;
}

std::string FaultRecord::line() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%llu %u %u 0x%08x %s %s",
                (unsigned long long)seq, principal, guard, address,
                accessKindName(kind), faultCauseName(cause));
  return buf;
}

const char* errorCodeName(ErrorCode c) {
  switch (c) {
    case ErrorCode::PermissionDenied: return "PermissionDenied";
    case ErrorCode::NoSuchGuard: return "NoSuchGuard";
    case ErrorCode::NoSuchPrincipal: return "NoSuchPrincipal";
    case ErrorCode::GuardLocked: return "GuardLocked";
    case ErrorCode::AlreadyLocked: return "AlreadyLocked";
    case ErrorCode::NotLocked: return "NotLocked";
    case ErrorCode::InvalidCapability: return "InvalidCapability";
    case ErrorCode::InvalidFree: return "InvalidFree";
    case ErrorCode::OutOfGuardMemory: return "OutOfGuardMemory";
    case ErrorCode::OutOfAddressSpace: return "OutOfAddressSpace";
    case ErrorCode::GuardLimitExceeded: return "GuardLimitExceeded";
    case ErrorCode::TagSpaceExhausted: return "TagSpaceExhausted";
    case ErrorCode::ReservedMode: return "ReservedMode";
    case ErrorCode::ReservedIndex: return "ReservedIndex";
    case ErrorCode::MisalignedRange: return "MisalignedRange";
    case ErrorCode::NoSuchEdge: return "NoSuchEdge";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "?";
}

std::optional<ErrorCode> errorCodeFromName(const std::string& s) {
  static const ErrorCode all[] = {
      ErrorCode::PermissionDenied,  ErrorCode::NoSuchGuard,
      ErrorCode::NoSuchPrincipal,   ErrorCode::GuardLocked,
      ErrorCode::AlreadyLocked,     ErrorCode::NotLocked,
      ErrorCode::InvalidCapability, ErrorCode::InvalidFree,
      ErrorCode::OutOfGuardMemory,  ErrorCode::OutOfAddressSpace,
      ErrorCode::GuardLimitExceeded, ErrorCode::TagSpaceExhausted,
      ErrorCode::ReservedMode,      ErrorCode::ReservedIndex,
      ErrorCode::MisalignedRange,   ErrorCode::NoSuchEdge,
      ErrorCode::ParseError,
  };
  for (ErrorCode c : all)
    if (s == errorCodeName(c)) return c;
  return std::nullopt;
}

std::string EventCounters::csvHeader() const {
  return "dacrWrites,tlbFlushes,pageTableReloads,domainEvictions,"
         "domainRestores,contextSwitches";
}

std::string EventCounters::csvRow() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%llu,%llu,%llu,%llu,%llu,%llu",
                (unsigned long long)dacrWrites, (unsigned long long)tlbFlushes,
                (unsigned long long)pageTableReloads,
                (unsigned long long)domainEvictions,
                (unsigned long long)domainRestores,
                (unsigned long long)contextSwitches);
  return buf;
}

std::string ExitStatus::describe() const {
  if (kind == Kind::Normal) return "ok";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "killed cause=%s seq=%llu",
                faultCauseName(cause), (unsigned long long)faultSeq);
  return buf;
}

} // namespace mg

#pragma once

#include "core/kernel.hpp"

namespace mg {

// Dynamically typed value passed through the call surface.
struct Value {
  enum class Kind : uint8_t { Unit, Int, Tag, Principal, Guard, Perm, Pointer };
  Kind kind = Kind::Unit;
  uint64_t raw = 0;

  static Value unit() { return {}; }
  static Value integer(uint64_t v) { return {Kind::Int, v}; }
  static Value tag(TagId t) { return {Kind::Tag, t}; }
  static Value principal(PrincipalId p) { return {Kind::Principal, p}; }
  static Value guard(GuardId g) { return {Kind::Guard, g}; }
  static Value perm(PagePerm p) { return {Kind::Perm, uint64_t(p)}; }
  static Value pointer(uint64_t p) { return {Kind::Pointer, p}; }
  friend bool operator==(const Value&, const Value&) = default;
};

// One call argument: a value, a label literal, or a capability literal.
struct Arg {
  enum class Kind : uint8_t { Value, LabelSet, CapabilitySet };
  Kind kind = Kind::Value;
  Value value;
  std::vector<uint32_t> items; // tag ids, or encoded capabilities

  static Arg of(Value v) { return {Kind::Value, v, {}}; }
  static Arg labelSet(std::vector<uint32_t> tags) {
    return {Kind::LabelSet, {}, std::move(tags)};
  }
  static Arg capabilitySet(std::vector<uint32_t> caps) {
    return {Kind::CapabilitySet, {}, std::move(caps)};
  }
};

// Name-based syscall surface. Exactly one inner operation executes per call;
// argument shape violations and unknown names report ParseError.
Result<Value> dispatch(Kernel& k, PrincipalId caller, const std::string& name,
                       const std::vector<Arg>& args);

// Every dispatchable call name, in a stable order.
const std::vector<std::string>& dispatchNames();

// Security hooks.
bool hookIsLabeled(const Kernel& k, PrincipalId p);
bool hookCheckAllowed(const Kernel& k, PrincipalId src, PrincipalId dst);
Result<Label> hookParseLabel(const std::string& text);

} // namespace mg

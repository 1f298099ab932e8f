#pragma once

#include "core/facade.hpp"
#include "core/scenario.hpp"

namespace mg {

struct RunOptions {
  std::optional<uint64_t> seed;    // overrides the scenario's config
  std::optional<Backing> backend;  // overrides the scenario's config
  std::optional<int> domains;      // overrides the scenario's config
  bool oracleCheck = false;        // lockstep-compare every access
};

struct ExpectationResult {
  int line = 0;
  std::string thread;
  std::string what;
  bool met = false;
};

struct StmtError {
  int line = 0;
  std::string thread;
  std::string what;
  ErrorCode code = ErrorCode::ParseError;
  std::string detail;
};

struct GuardChecksum {
  GuardId id = 0;
  TagId tag = 0;
  Backing backing = Backing::Plain;
  uint64_t checksum = 0;
};

// Deterministic function of (scenario, options): same inputs, same bytes.
struct RunReport {
  std::string scenarioName;
  uint64_t seed = 0;
  Backing backend = Backing::Md;
  int domains = kDomainFields;

  std::vector<std::pair<std::string, std::string>> threadExits;
  std::vector<ExpectationResult> expectations;
  std::vector<StmtError> errors;
  std::vector<FaultRecord> faults;
  EventCounters counters;
  std::vector<GuardChecksum> checksums;
  uint64_t divergences = 0;
  bool anyBlocked = false;

  bool allExpectationsMet() const;
  int exitCode() const { return allExpectationsMet() && !anyBlocked ? 0 : 1; }
  std::string serialize() const;
};

// Executes the scenario under the seeded round-robin scheduler (quantum of
// one statement plus 0-2 statements of seed-driven jitter). Returns an error
// only for configuration problems; statement-level failures are surfaced in
// the report.
Result<RunReport> runScenario(const Scenario& sc, const RunOptions& opts = {});

// Deterministic byte value for the n-th write of a named scenario thread.
uint8_t scenarioWriteValue(const std::string& thread, uint32_t index);

} // namespace mg

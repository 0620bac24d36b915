#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlrepair/faultloc.hpp"
#include "mlrepair/patchmodel.hpp"
#include "mlrepair/testkit.hpp"

namespace mlrepair::repair {

enum class RepairStatus {
  Success,
  Timeout,
  ExhaustedSearch,
  NoAngelicValue,
  NoSynthesis
};

inline const char* status_name(RepairStatus s) {
  switch (s) {
    case RepairStatus::Success: return "Success";
    case RepairStatus::Timeout: return "Timeout";
    case RepairStatus::ExhaustedSearch: return "ExhaustedSearch";
    case RepairStatus::NoAngelicValue: return "NoAngelicValue";
    case RepairStatus::NoSynthesis: return "NoSynthesis";
  }
  return "?";
}

// Residual: originally failing tests still failing. Regressions: originally
// passing tests now failing. Both against the partition frozen at session
// start.
struct FitnessState {
  int residual = 0;
  int regressions = 0;
};

struct IterationLog {
  std::string action;
  int residual_before = 0;
  int residual_after = 0;
  int regressions_after = 0;
};

// How a Strategy-2 success forced its way to green: the location, mode and
// schedule of the angelic witness behind the synthesized guard.
struct WitnessSummary {
  std::string fn;
  int line = 0;
  int node_index = 0;
  std::string mode;
  std::string schedule_kind;  // "empty" | "uniform" | "per_occurrence"
  bool uniform_value = false;
  std::vector<bool> sequence;
  std::vector<std::string> tests;
};

struct RepairResult {
  RepairStatus status = RepairStatus::ExhaustedSearch;
  patchmodel::Patch patch;  // possibly partial
  std::vector<IterationLog> iterations;
  std::optional<WitnessSummary> witness;
  double wall_ms = 0.0;
  long long tests_executed = 0;
  int initial_failing = 0;
  std::string note;
};

// Everything a repair session needs about one bug. The oracle is the shipped
// ground-truth program; it backs test augmentation only.
struct RepairInput {
  minilang::Program buggy;
  std::optional<minilang::Program> oracle;
  std::vector<testkit::TestCase> suite;
  testkit::InputDomains domains;
  std::vector<faultloc::FaultyLine> faulty_lines;
};

}  // namespace mlrepair::repair

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jitscope/ir_model.hpp"
#include "jitscope/phase_engine.hpp"

namespace jitscope {

struct FixtureParams {
  std::size_t nodes = 50;
  std::size_t phases = 4;
  std::size_t events_per_node = 6;  // mean of the geometric extra-event count
  std::uint64_t seed = 1;
};

// A synthetic trace plus per-phase summaries counted while it was built.
struct GeneratedFixture {
  IRDocument document;
  std::vector<PhaseSummary> truth;  // unassigned pseudo-phase first
};

// Deterministic for a fixed parameter set. The trace is phase-monotone, has
// 10-20% dead nodes, duplicate edges, replaces and occasional removals of
// absent edges. Dying nodes shed their incident edges inside their removal
// phase, so no snapshot has dangling edges. Throws E_BAD_ARGS when phases == 0.
GeneratedFixture generate_fixture(const FixtureParams& params);

// Sidecar document: {"generator": {...}, "summaries": [...]}.
std::string truth_json(const GeneratedFixture& fixture, const FixtureParams& params);

}  // namespace jitscope

#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <string_view>

#include "jitscope/ingest.hpp"
#include "jitscope/ir_model.hpp"
#include "jitscope/phase_engine.hpp"
#include "jitscope/store.hpp"

// JSON renderings shared by the HTTP API, the CLI and the fixture generator.
// The unassigned pseudo-phase is rendered as phase_id -1.
namespace jitscope::views {

using Json = nlohmann::ordered_json;

Json phase_ref(const ResolvedDataset& dataset, PhaseId phase);
Json issue(const ValidationIssue& issue);
Json issues(std::span<const ValidationIssue> issues);
Json summary(const PhaseSummary& summary, std::string_view phase_name);
Json summaries(const ResolvedDataset& dataset, std::span<const PhaseSummary> summaries);
Json phases(const ResolvedDataset& dataset);
Json snapshot(const ResolvedDataset& dataset, const GraphSnapshot& snapshot);
Json diff(const ResolvedDataset& dataset, const PhaseDiff& diff);
Json edge_event(const EdgeEvent& edge);
Json last_access(const ResolvedDataset& dataset, const LastAccess& access);
Json load_report(const LoadReport& report);
Json error(std::string_view code, std::string_view message);

}  // namespace jitscope::views

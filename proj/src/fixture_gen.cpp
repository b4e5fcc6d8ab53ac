#include "jitscope/fixture_gen.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <random>

#include "jitscope/error.hpp"
#include "jitscope/json_views.hpp"

namespace jitscope {

namespace {

constexpr std::array<const char*, 12> kPhaseNames = {
    "GraphBuilding",  "Inlining",          "TypedLowering",  "LoopPeeling",
    "LoadElimination", "EscapeAnalysis",   "SimplifiedLowering", "GenericLowering",
    "EarlyOptimization", "EffectLinearization", "DeadCodeElimination", "MachineLowering"};

constexpr std::array<const char*, 3> kReducers = {"Reduce", "VisitNode", "Rewrite"};

struct OpcodeInfo {
  const char* opcode;
  const char* mnemonic;
};

constexpr std::array<OpcodeInfo, 24> kOpcodes = {{
    {"Start", "start"},           {"Parameter", "param"},
    {"NumberConstant", "const"},  {"HeapConstant", "hconst"},
    {"JSAdd", "add"},             {"JSCall", "call"},
    {"Return", "ret"},            {"Phi", "phi"},
    {"Merge", "merge"},           {"Branch", "br"},
    {"IfTrue", "iftrue"},         {"IfFalse", "iffalse"},
    {"Checkpoint", "ckpt"},       {"FrameState", "fs"},
    {"LoadField", "ldf"},         {"StoreField", "stf"},
    {"SpeculativeNumberAdd", "sadd"}, {"NumberAdd", "nadd"},
    {"Int32Add", "i32add"},       {"Float64Add", "f64add"},
    {"CheckedTaggedToFloat64", "chk"}, {"ChangeInt32ToTagged", "tag"},
    {"EffectPhi", "ephi"},        {"JSLoadProperty", "ldprop"},
}};

constexpr std::array<const char*, 10> kValues = {
    "0", "1", "42", "-0.5", "NaN", "undefined", "true",
    "Range(-1, 1)", "HeapConstant[0x2a3b, <String: \"key,value\">]", "Type: Number"};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

  // Failures before the first success with success probability 1 / (mean + 1).
  std::size_t geometric(std::size_t mean) {
    const double success = 1.0 / (static_cast<double>(mean) + 1.0);
    std::size_t count = 0;
    while (!chance(success)) ++count;
    return count;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct NodePlan {
  int created_bucket = -1;
  bool dies = false;
  int death_bucket = -1;
};

struct NodeState {
  bool created = false;
  bool dead = false;
  std::map<std::size_t, int> out;  // dst -> count
  std::map<std::size_t, int> in;   // src -> count
};

class Builder {
 public:
  Builder(const FixtureParams& params, Rng& rng) : params_(params), rng_(rng) {}

  GeneratedFixture build() {
    const auto phases = static_cast<int>(params_.phases);
    IRDocument& doc = fixture_.document;
    for (int k = 0; k < phases; ++k) {
      std::string name = kPhaseNames[static_cast<std::size_t>(k) % kPhaseNames.size()];
      if (k >= static_cast<int>(kPhaseNames.size())) {
        name += "#" + std::to_string(k / static_cast<int>(kPhaseNames.size()));
      }
      doc.phases.push_back({name, 10 * k, 10 * k + 9});
      for (std::size_t r = 0; r < kReducers.size(); ++r) {
        doc.functions[10 * k + 1 + static_cast<FunctionId>(r)] = name + "Reducer::" + kReducers[r];
      }
    }
    const FunctionId outside = 10 * phases + 100;
    doc.functions[outside] = "Interpreter::CollectTypeFeedback";
    doc.functions[outside + 1] = "BytecodeGraphBuilder::VisitBytecodes";

    for (int b = -1; b < phases; ++b) fixture_.truth.push_back(PhaseSummary{PhaseId(b)});

    plan_nodes(phases);
    for (int b = -1; b < phases; ++b) run_bucket(b);
    return std::move(fixture_);
  }

 private:
  PhaseSummary& truth(int bucket) { return fixture_.truth[static_cast<std::size_t>(bucket + 1)]; }

  void plan_nodes(int phases) {
    const double dead_fraction = 0.10 + 0.10 * rng_.unit();
    const std::size_t n = params_.nodes;
    plans_.resize(n);
    state_.resize(n);
    extras_.resize(static_cast<std::size_t>(phases) + 1);
    IRDocument& doc = fixture_.document;
    doc.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      NodePlan& plan = plans_[i];
      plan.created_bucket = rng_.chance(0.15) ? -1 : static_cast<int>(rng_.below(params_.phases));
      plan.dies = rng_.chance(dead_fraction);
      const int last = phases - 1;
      if (plan.dies) {
        plan.death_bucket =
            plan.created_bucket + static_cast<int>(rng_.below(static_cast<std::size_t>(last - plan.created_bucket + 1)));
      }
      const int end = plan.dies ? plan.death_bucket : last;
      const std::size_t extra = rng_.geometric(params_.events_per_node);
      for (std::size_t e = 0; e < extra; ++e) {
        const int bucket =
            plan.created_bucket + static_cast<int>(rng_.below(static_cast<std::size_t>(end - plan.created_bucket + 1)));
        extras_[static_cast<std::size_t>(bucket + 1)].push_back(i);
      }

      IRNode& node = doc.nodes[i];
      char address[32];
      std::snprintf(address, sizeof address, "0x%llx",
                    static_cast<unsigned long long>(0x55d3a0000000ULL + i * 0x48ULL));
      node.address = address;
      const OpcodeInfo& op = kOpcodes[rng_.below(kOpcodes.size())];
      node.opcode = op.opcode;
      node.mnemonic = rng_.chance(0.1) ? "" : op.mnemonic;
      node.alive = !plan.dies;
    }
  }

  FunctionId pick_function(int bucket) {
    if (bucket < 0) return 10 * static_cast<FunctionId>(params_.phases) + 100 + static_cast<FunctionId>(rng_.below(2));
    return 10 * bucket + 1 + static_cast<FunctionId>(rng_.below(kReducers.size()));
  }

  InstrId next_instr() {
    instr_ += 1 + (rng_.chance(0.1) ? static_cast<InstrId>(rng_.below(3)) : 0);
    return instr_;
  }

  void touch(std::size_t node, InstrId instr, FunctionId func) {
    auto& accesses = fixture_.document.nodes[node].accesses;
    if (accesses.empty() || accesses.back().instr_id != instr) accesses.push_back({instr, func});
  }

  const std::string& address(std::size_t node) const { return fixture_.document.nodes[node].address; }

  // Uniform pick among live nodes satisfying `ok`; a few tries, then give up.
  template <typename Pred>
  std::optional<std::size_t> pick_live(Pred ok) {
    if (live_.empty()) return std::nullopt;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const std::size_t candidate = live_[rng_.below(live_.size())];
      if (ok(candidate)) return candidate;
    }
    return std::nullopt;
  }

  void add_edge(std::size_t src, std::size_t dst, InstrId instr, int bucket) {
    fixture_.document.nodes[src].edge_events.push_back({EdgeAction::kAdd, address(dst), std::nullopt, instr});
    ++state_[src].out[dst];
    ++state_[dst].in[src];
    ++truth(bucket).edge_adds;
  }

  void drop(std::size_t src, std::size_t dst) {
    if (--state_[src].out[dst] == 0) state_[src].out.erase(dst);
    if (--state_[dst].in[src] == 0) state_[dst].in.erase(src);
  }

  void remove_edge(std::size_t src, std::size_t dst, InstrId instr, int bucket) {
    fixture_.document.nodes[src].edge_events.push_back({EdgeAction::kRemove, address(dst), std::nullopt, instr});
    if (state_[src].out.contains(dst)) drop(src, dst);
    ++truth(bucket).edge_removes;
  }

  void replace_edge(std::size_t src, std::size_t old_dst, std::size_t dst, InstrId instr, int bucket) {
    fixture_.document.nodes[src].edge_events.push_back({EdgeAction::kReplace, address(dst), address(old_dst), instr});
    drop(src, old_dst);
    ++state_[src].out[dst];
    ++state_[dst].in[src];
    ++truth(bucket).edge_replaces;
  }

  void set_value(std::size_t node, InstrId instr, int bucket) {
    fixture_.document.nodes[node].value_updates.push_back({kValues[rng_.below(kValues.size())], instr});
    ++truth(bucket).value_updates;
  }

  void set_opcode(std::size_t node, InstrId instr, int bucket) {
    fixture_.document.nodes[node].opcode_updates.push_back({kOpcodes[rng_.below(kOpcodes.size())].opcode, instr});
    ++truth(bucket).opcode_updates;
  }

  void create(std::size_t node, int bucket) {
    const InstrId instr = next_instr();
    touch(node, instr, pick_function(bucket));
    state_[node].created = true;
    ++truth(bucket).generated;
    if (rng_.chance(0.5)) set_value(node, instr, bucket);
    const std::size_t inputs = rng_.below(3);
    for (std::size_t k = 0; k < inputs; ++k) {
      auto target = pick_live([&](std::size_t c) { return c != node; });
      if (!target) break;
      add_edge(node, *target, instr, bucket);
      if (rng_.chance(0.1)) add_edge(node, *target, instr, bucket);
    }
    live_.push_back(node);
  }

  void random_event(std::size_t node, int bucket) {
    const InstrId instr = next_instr();
    touch(node, instr, pick_function(bucket));
    NodeState& s = state_[node];
    const double roll = rng_.unit();
    auto other = [&](std::size_t c) { return c != node; };

    if (roll < 0.25) {
      set_opcode(node, instr, bucket);
      if (rng_.chance(0.15)) set_value(node, instr, bucket);
      return;
    }
    if (roll < 0.50) {
      set_value(node, instr, bucket);
      return;
    }
    if (roll < 0.68) {
      if (auto target = pick_live(other)) {
        add_edge(node, *target, instr, bucket);
        if (rng_.chance(0.08)) add_edge(node, *target, instr, bucket);
      } else {
        set_value(node, instr, bucket);
      }
      return;
    }
    if (roll < 0.80) {
      if (!s.out.empty()) {
        auto it = std::next(s.out.begin(), static_cast<long>(rng_.below(s.out.size())));
        remove_edge(node, it->first, instr, bucket);
      } else if (auto target = pick_live(other); target && rng_.chance(0.3)) {
        remove_edge(node, *target, instr, bucket);  // absent edge: exercises the anomaly path
      } else {
        set_value(node, instr, bucket);
      }
      return;
    }
    if (roll < 0.94) {
      if (!s.out.empty()) {
        const std::size_t old_dst =
            std::next(s.out.begin(), static_cast<long>(rng_.below(s.out.size())))->first;
        if (auto target = pick_live([&](std::size_t c) { return c != node && c != old_dst; })) {
          replace_edge(node, old_dst, *target, instr, bucket);
          return;
        }
      }
      set_value(node, instr, bucket);
      return;
    }
    // read-only access
  }

  void kill(std::size_t node, int bucket) {
    const auto survives = [&](std::size_t c) {
      return c != node && !(plans_[c].dies && plans_[c].death_bucket == bucket);
    };
    const auto incoming = state_[node].in;
    for (const auto& [src, count] : incoming) {
      for (int k = 0; k < count; ++k) {
        const InstrId instr = next_instr();
        touch(src, instr, pick_function(bucket));
        auto target = rng_.chance(0.5)
                          ? pick_live([&](std::size_t c) { return survives(c) && c != src; })
                          : std::nullopt;
        if (target) replace_edge(src, node, *target, instr, bucket);
        else remove_edge(src, node, instr, bucket);
      }
    }
    const InstrId instr = next_instr();
    touch(node, instr, pick_function(bucket));
    const auto outgoing = state_[node].out;
    for (const auto& [dst, count] : outgoing) {
      for (int k = 0; k < count; ++k) remove_edge(node, dst, instr, bucket);
    }
    state_[node].dead = true;
    live_.erase(std::find(live_.begin(), live_.end(), node));
    ++truth(bucket).removed;
  }

  void run_bucket(int bucket) {
    std::vector<std::size_t> creations;
    std::vector<std::size_t> deaths;
    for (std::size_t i = 0; i < plans_.size(); ++i) {
      if (plans_[i].created_bucket == bucket) creations.push_back(i);
      if (plans_[i].dies && plans_[i].death_bucket == bucket) deaths.push_back(i);
    }
    rng_.shuffle(creations);
    for (std::size_t node : creations) create(node, bucket);

    std::vector<std::size_t>& extras = extras_[static_cast<std::size_t>(bucket + 1)];
    rng_.shuffle(extras);
    for (std::size_t node : extras) random_event(node, bucket);

    rng_.shuffle(deaths);
    for (std::size_t node : deaths) kill(node, bucket);
  }

  const FixtureParams& params_;
  Rng& rng_;
  GeneratedFixture fixture_;
  std::vector<NodePlan> plans_;
  std::vector<NodeState> state_;
  std::vector<std::vector<std::size_t>> extras_;
  std::vector<std::size_t> live_;
  InstrId instr_ = 0;
};

}  // namespace

GeneratedFixture generate_fixture(const FixtureParams& params) {
  if (params.phases == 0) throw Error("E_BAD_ARGS", "at least one phase is required");
  if (params.phases > 100000) throw Error("E_BAD_ARGS", "too many phases");
  Rng rng(params.seed);
  return Builder(params, rng).build();
}

std::string truth_json(const GeneratedFixture& fixture, const FixtureParams& params) {
  views::Json out;
  out["generator"] = {{"nodes", params.nodes},
                      {"phases", params.phases},
                      {"events_per_node", params.events_per_node},
                      {"seed", params.seed}};
  views::Json summaries = views::Json::array();
  for (const PhaseSummary& s : fixture.truth) {
    const std::string_view name =
        s.phase.is_unassigned()
            ? kUnassignedPhaseName
            : std::string_view(fixture.document.phases[static_cast<std::size_t>(s.phase.ordinal())].name);
    summaries.push_back(views::summary(s, name));
  }
  out["summaries"] = std::move(summaries);
  return out.dump(2) + "\n";
}

}  // namespace jitscope

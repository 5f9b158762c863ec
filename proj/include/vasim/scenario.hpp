#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vasim/acoustics.hpp"
#include "vasim/attacker.hpp"
#include "vasim/config.hpp"
#include "vasim/core.hpp"
#include "vasim/defenses.hpp"
#include "vasim/household.hpp"
#include "vasim/sim/engine.hpp"
#include "vasim/ssml.hpp"
#include "vasim/vma.hpp"
#include "vasim/world.hpp"

namespace vasim::scenario {

inline constexpr int kSpecVersion = 1;

/// Device state at simulation start, applied silently before the first event.
struct DeviceSpec {
    int volume = 5;
    std::string wakeword = "aria";
    bool bluetooth_enabled = false;
    std::vector<std::string> bt_pre_paired;
};

/// Masquerading-skill block; present in the file means the skill is installed.
struct MaskSkillSpec {
    bool enabled = false;
    vma::MockAssistantBackend backend;
    vma::TamperPolicy tamper;
};

/// Everything one run needs, parsed from a versioned scenario file. Parsing
/// is strict: unknown keys anywhere are rejected with the full field path,
/// the horizon must be non-negative, and payload command ids must name a
/// command the catalog knows.
struct ScenarioSpec {
    int spec_version = kSpecVersion;
    std::string name;
    std::uint64_t seed = 1;
    Millis horizon_ms = 0;
    acoustics::Placement placement = acoustics::Placement::Small;
    ssml::RenderMode render_mode = ssml::RenderMode::Vulnerable;
    std::string tables_path = "tables/paper-defaults.json";
    DeviceSpec device;
    SimConfig config;
    household::Household household;
    MaskSkillSpec mask;
    attacker::AttackPlan attack;
    std::vector<defenses::DefenseConfig> defenses;

    static ScenarioSpec from_json(const Json& j);
    static ScenarioSpec load_file(const std::string& path);
};

/// A scenario assembled and ready to go: engine, world, and attacker built as
/// one unit, so interactive sessions can drive it event by event and batch
/// runs can finish it in one call.
class LiveRun {
public:
    LiveRun(const ScenarioSpec& spec, const acoustics::Tables& tables,
            std::optional<defenses::DefenseConfig> defense, std::string config_name);

    sim::Simulation& sim() { return sim_; }
    world::World& world() { return world_; }
    Millis horizon_ms() const { return horizon_; }
    const std::string& config_name() const { return config_name_; }

    /// Run to the horizon and fold end-of-run state into the metrics.
    void finish();

    /// This run's slice of the report: config name, metrics, intercepted
    /// utterances when the masquerading skill was installed.
    Json report() const;

private:
    std::string config_name_;
    Millis horizon_ = 0;
    sim::Simulation sim_;
    world::World world_;
    std::optional<attacker::Attacker> attacker_;
};

/// Execute the scenario once per defense config — or once with no defense
/// when the list is empty — every run on the same seed. Runs stay alive for
/// inspection.
std::vector<std::unique_ptr<LiveRun>> run(const ScenarioSpec& spec,
                                          const acoustics::Tables& tables);

/// The full report: scenario header plus one entry per executed config.
Json report(const ScenarioSpec& spec, const std::vector<std::unique_ptr<LiveRun>>& runs);

/// Write one event log per config plus the report under `out_dir`, creating
/// it if needed. Returns the paths written, logs first.
std::vector<std::string> write_outputs(const ScenarioSpec& spec,
                                       const std::vector<std::unique_ptr<LiveRun>>& runs,
                                       const std::string& out_dir);

} // namespace vasim::scenario

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vasim/acoustics.hpp"
#include "vasim/config.hpp"
#include "vasim/core.hpp"
#include "vasim/defenses.hpp"
#include "vasim/device.hpp"
#include "vasim/household.hpp"
#include "vasim/sim/engine.hpp"
#include "vasim/skill.hpp"
#include "vasim/ssml.hpp"
#include "vasim/vma.hpp"

namespace vasim::world {

/// How one spoken command maps onto the device's surface: the measured-table
/// key (when a measurement exists), the canonical text, the builtin it runs,
/// and the spoken reply for query-style commands.
struct CommandSpec {
    std::string command_id;  // recognition-table key; empty for unmeasured commands
    std::string text;        // canonical normalized form
    std::optional<device::BuiltinCommand> action;
    std::string reply;       // spoken when the command is a plain query
};

class CommandCatalog {
public:
    static CommandCatalog defaults();

    void add(CommandSpec spec);

    /// Resolve normalized text to a command. "open <name>" falls back to a
    /// synthesized skill-launch command when no exact entry matches.
    std::optional<CommandSpec> match(const std::string& normalized) const;

    const CommandSpec* by_id(const std::string& command_id) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<CommandSpec> entries_;
};

/// Counters accumulated over one run; serialized into the metrics report.
struct Metrics {
    std::map<std::string, int> self_issue_attempts;   // per command_id
    std::map<std::string, int> self_issue_recognized; // per command_id
    std::map<std::string, int> impact_executed;       // per impact kind
    std::map<std::string, int> arbitration;           // outcome name -> count
    int suppressed_commands = 0;
    int false_suppressions = 0;
    int human_commands = 0;
    int payload_overhears = 0;   // member heard a self-issued payload
    int detection_events = 0;    // member noticed or reacted to something
    int device_restarts = 0;
    Millis mask_session_open_ms = 0;
    int utterances_intercepted = 0;  // records in the masquerading skill store
    Json human_outcomes = Json::array();  // one entry per human command, in order

    Json to_json() const;
};

/// What happened to one utterance on its way through the pipeline.
struct UtteranceOutcome {
    bool captured = false;           // microphone was live
    bool wakeword_accepted = false;  // passed gating and the defense stack
    bool recognized = false;         // survived the recognition draw (humans always do)
    bool executed = false;           // reached a builtin or an open session
    std::string note;                // reason it stopped, when it did

    Json to_json() const;
};

/// The assembled ecosystem: one device, its skill runtime, the household
/// around it, and the defense stack. Owns the pipeline an utterance travels
/// from speaker or mouth to executed command, and every cross-module wire.
class World {
public:
    struct Options {
        acoustics::Placement placement = acoustics::Placement::Small;
        ssml::RenderMode render_mode = ssml::RenderMode::Vulnerable;
    };

    World(sim::Simulation& sim, const SimConfig& cfg, acoustics::Tables tables, Options opts);

    World(const World&) = delete;
    World& operator=(const World&) = delete;

    device::Device& dev() { return dev_; }
    skill::SkillRuntime& runtime() { return runtime_; }
    CommandCatalog& catalog() { return catalog_; }
    Metrics& metrics() { return metrics_; }
    const Metrics& metrics() const { return metrics_; }
    acoustics::Placement placement() const { return opts_.placement; }
    const SimConfig& config() const { return cfg_; }
    sim::Simulation& engine() { return sim_; }

    /// Install the defense stack for this run; call before any utterance.
    void set_defense(defenses::DefenseConfig defense);
    const std::optional<defenses::DefenseConfig>& defense() const { return defense_; }

    /// Register the voice-masquerading skill and keep a handle for storage
    /// queries and persistence-span accounting.
    void install_mask_skill(vma::MockAssistantBackend backend, vma::TamperPolicy policy);
    std::shared_ptr<vma::MaskAttackSkill> mask() const { return mask_; }

    /// Drive one symbolic utterance through audibility, capture, gating, the
    /// defense stack, recognition, and routing. Never throws for a muted mic;
    /// the outcome reports it instead.
    UtteranceOutcome emit_utterance(const acoustics::Utterance& u);

    /// Validate the household and schedule all of its scripted actions.
    void attach_household(household::Household hh);
    const household::Household& home() const { return household_; }

    /// A member speaks; wakeword presence is read off the text itself.
    UtteranceOutcome say(const std::string& member_id, const std::string& text);

    void restart_device();

    /// Radio-skill availability: flipped by the scripted social-engineering
    /// action, checked when the radio vector is established.
    bool radio_skill_open() const { return radio_skill_open_; }
    void set_radio_skill_open(bool open) { radio_skill_open_ = open; }

    /// Fold end-of-run state into the metrics: a still-open masquerading
    /// session and the store size.
    void finalize();

    const defenses::OutputFingerprint& fingerprint() const { return fingerprint_; }

private:
    void wire_hooks();
    void device_emission(sim::Simulation& sim, const std::string& text);  // fingerprint + blink
    void household_overhear(const acoustics::Utterance& u);
    void sight_check(household::Stimulus stimulus);
    bool defense_blocks(const acoustics::MicCapture& cap);
    bool recognition_roll(const acoustics::Utterance& u);
    void dispatch_text(const std::string& text, UtteranceOutcome& out);
    void apply_scripted(const household::ScriptedAction& action);
    void apply_reaction(const household::ReactionEvent& event);
    void record_arbitration(device::UserRequest request, bool vma_open);
    void record_human_outcome(const acoustics::Utterance& u, const UtteranceOutcome& out);

    sim::Simulation& sim_;
    SimConfig cfg_;
    acoustics::Tables tables_;
    Options opts_;

    device::Device dev_;
    skill::SkillRuntime runtime_;
    CommandCatalog catalog_;
    household::Household household_;
    acoustics::CooldownTracker cooldown_;
    defenses::OutputFingerprint fingerprint_;
    std::optional<defenses::DefenseConfig> defense_;
    std::shared_ptr<vma::MaskAttackSkill> mask_;
    Metrics metrics_;

    bool radio_skill_open_ = false;
    std::optional<Millis> mask_open_since_;
};

} // namespace vasim::world

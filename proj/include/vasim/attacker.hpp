#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vasim/core.hpp"
#include "vasim/world.hpp"

namespace vasim::attacker {

enum class VectorKind { RadioStation, Bluetooth };

/// The trade-off sheet between the two viable delivery channels.
struct VectorProperties {
    bool remote = false;                 // works without attacker presence
    bool multiple_devices = false;       // one channel, many targets
    bool fvv_capable = false;            // can arm forced full volume
    bool worldwide = false;              // available in any region
    bool no_social_engineering = false;  // starts without tricking the user
    bool can_restart = false;            // reconnects without redoing setup
};

VectorProperties properties(VectorKind k);
const char* to_string(VectorKind k);
VectorKind vector_from_string(const std::string& s);

/// A pre-rendered voice sample the attacker can stream. `variant` bumps model
/// a pitch edit of the same text, which resets replay wear.
struct Payload {
    std::string payload_id;
    std::string command_id;  // recognition-table key; empty for free-form text
    std::string text;        // spoken command, wakeword excluded
    std::string profile_id = "profile-A";
    bool with_wakeword = true;
};

struct PlanStep {
    enum class Kind {
        EstablishVector,
        SelfIssue,
        ArmFvv,
        OpenMask,
        GoOn,
        QuitToActive,
        ImpactAction,
        RestartStream,
    };
    Kind kind = Kind::SelfIssue;
    Millis at_ms = 0;
    VectorKind vector = VectorKind::Bluetooth;  // EstablishVector only
    std::string payload_id;                     // SelfIssue / ImpactAction
    Millis every_ms = 0;                        // GoOn repeat period
};

const char* to_string(PlanStep::Kind k);
PlanStep::Kind step_kind_from_string(const std::string& s);

struct AttackPlan {
    bool bt_in_range = false;  // proximity for the initial pairing
    std::string bt_device_id = "attacker-phone";
    std::vector<PlanStep> steps;
    std::map<std::string, Payload> payloads;

    /// Structural checks: steps in time order, session steps after OpenMask,
    /// vector-dependent steps after EstablishVector, payload refs resolve.
    void validate() const;
};

enum class AttackerState { Active, Passive };
const char* to_string(AttackerState s);

/// Drives an attack plan through the world: establishes the delivery vector,
/// streams payloads, keeps the masquerading session alive, and follows
/// confirmed impact commands with a timely "yes".
class Attacker {
public:
    Attacker(world::World& w, AttackPlan plan);

    /// Queue every plan step on the simulation clock. Call once.
    void schedule();

    /// Passive exactly while the masquerading skill holds the session;
    /// Active otherwise.
    AttackerState state() const;

    std::optional<VectorKind> vector() const { return vector_; }
    int vector_stream_id() const { return vector_stream_id_; }
    const AttackPlan& plan() const { return plan_; }

    // Step primitives, usable directly in tests.
    void establish_vector(VectorKind kind);
    world::UtteranceOutcome self_issue(const Payload& payload, int variant = 0);
    void arm_fvv();
    void restart_vector_stream();

private:
    void run_step(const PlanStep& step);
    void issue_with_retries(const Payload& payload, int attempt, bool confirm_after);
    void require_vector_stream() const;  // throws VectorUnavailable

    world::World& world_;
    AttackPlan plan_;
    std::optional<VectorKind> vector_;
    int vector_stream_id_ = 0;
};

} // namespace vasim::attacker

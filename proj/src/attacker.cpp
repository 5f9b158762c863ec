#include "vasim/attacker.hpp"

#include <algorithm>

namespace vasim::attacker {

using device::Owner;
using device::StreamKind;
using device::StreamState;

VectorProperties properties(VectorKind k) {
    VectorProperties p;
    if (k == VectorKind::RadioStation) {
        p.remote = true;
        p.multiple_devices = true;
    } else {
        p.fvv_capable = true;
        p.worldwide = true;
        p.no_social_engineering = true;
        p.can_restart = true;
    }
    return p;
}

const char* to_string(VectorKind k) {
    return k == VectorKind::RadioStation ? "RadioStation" : "Bluetooth";
}

VectorKind vector_from_string(const std::string& s) {
    if (s == "RadioStation") return VectorKind::RadioStation;
    if (s == "Bluetooth") return VectorKind::Bluetooth;
    throw SimError(ErrorCode::ValidationError, "unknown attack vector '" + s + "'");
}

const char* to_string(PlanStep::Kind k) {
    switch (k) {
    case PlanStep::Kind::EstablishVector: return "EstablishVector";
    case PlanStep::Kind::SelfIssue: return "SelfIssue";
    case PlanStep::Kind::ArmFvv: return "ArmFvv";
    case PlanStep::Kind::OpenMask: return "OpenMask";
    case PlanStep::Kind::GoOn: return "GoOn";
    case PlanStep::Kind::QuitToActive: return "QuitToActive";
    case PlanStep::Kind::ImpactAction: return "ImpactAction";
    case PlanStep::Kind::RestartStream: return "RestartStream";
    }
    return "unknown";
}

PlanStep::Kind step_kind_from_string(const std::string& s) {
    static const std::map<std::string, PlanStep::Kind> kKinds = {
        {"EstablishVector", PlanStep::Kind::EstablishVector},
        {"SelfIssue", PlanStep::Kind::SelfIssue},
        {"ArmFvv", PlanStep::Kind::ArmFvv},
        {"OpenMask", PlanStep::Kind::OpenMask},
        {"GoOn", PlanStep::Kind::GoOn},
        {"QuitToActive", PlanStep::Kind::QuitToActive},
        {"ImpactAction", PlanStep::Kind::ImpactAction},
        {"RestartStream", PlanStep::Kind::RestartStream},
    };
    auto it = kKinds.find(s);
    if (it == kKinds.end()) {
        throw SimError(ErrorCode::ValidationError, "unknown plan step kind '" + s + "'");
    }
    return it->second;
}

const char* to_string(AttackerState s) {
    return s == AttackerState::Passive ? "Passive" : "Active";
}

void AttackPlan::validate() const {
    bool vector_seen = false;
    bool mask_seen = false;
    Millis last_at = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const PlanStep& step = steps[i];
        if (step.at_ms < last_at) {
            throw SimError(ErrorCode::PlanOrderError,
                           "step " + std::to_string(i) + " (" + to_string(step.kind) +
                               ") is scheduled before the step preceding it");
        }
        last_at = step.at_ms;
        switch (step.kind) {
        case PlanStep::Kind::EstablishVector:
            vector_seen = true;
            break;
        case PlanStep::Kind::OpenMask:
            if (!vector_seen) {
                throw SimError(ErrorCode::PlanOrderError,
                               "OpenMask requires an earlier EstablishVector");
            }
            mask_seen = true;
            break;
        case PlanStep::Kind::GoOn:
        case PlanStep::Kind::QuitToActive:
            if (!mask_seen) {
                throw SimError(ErrorCode::PlanOrderError,
                               std::string(to_string(step.kind)) +
                                   " requires an earlier OpenMask");
            }
            if (step.kind == PlanStep::Kind::GoOn && step.every_ms <= 0) {
                throw SimError(ErrorCode::ValidationError, "GoOn needs every_ms > 0");
            }
            break;
        case PlanStep::Kind::SelfIssue:
        case PlanStep::Kind::ArmFvv:
        case PlanStep::Kind::ImpactAction:
        case PlanStep::Kind::RestartStream:
            if (!vector_seen) {
                throw SimError(ErrorCode::PlanOrderError,
                               std::string(to_string(step.kind)) +
                                   " requires an earlier EstablishVector");
            }
            break;
        }
        const bool needs_payload = step.kind == PlanStep::Kind::SelfIssue ||
                                   step.kind == PlanStep::Kind::ImpactAction;
        if (needs_payload && step.payload_id.empty()) {
            throw SimError(ErrorCode::ValidationError,
                           std::string(to_string(step.kind)) + " needs a payload_id");
        }
        if (!step.payload_id.empty() && !payloads.count(step.payload_id)) {
            throw SimError(ErrorCode::ValidationError,
                           "step references unknown payload '" + step.payload_id + "'");
        }
    }
}

Attacker::Attacker(world::World& w, AttackPlan plan) : world_(w), plan_(std::move(plan)) {
    plan_.validate();
}

AttackerState Attacker::state() const {
    const auto& session = world_.runtime().session();
    const bool masked = session && session->skill_id == vma::MaskAttackSkill::kSkillId;
    return masked ? AttackerState::Passive : AttackerState::Active;
}

void Attacker::schedule() {
    sim::Simulation& sim = world_.engine();
    for (const PlanStep& step : plan_.steps) {
        sim.schedule(step.at_ms, "attack-step",
                     {{"kind", to_string(step.kind)}, {"payload_id", step.payload_id}},
                     [this, step](sim::Simulation& s) {
                         try {
                             run_step(step);
                         } catch (const SimError& e) {
                             s.log("attack-step-failed", {{"kind", to_string(step.kind)},
                                                          {"error", to_string(e.code())},
                                                          {"detail", e.what()}});
                         }
                     });
    }
}

void Attacker::establish_vector(VectorKind kind) {
    sim::Simulation& sim = world_.engine();
    device::Device& dev = world_.dev();
    if (kind == VectorKind::RadioStation) {
        if (!world_.radio_skill_open()) {
            throw SimError(ErrorCode::VectorUnavailable,
                           "the radio skill was never opened on the device");
        }
        vector_ = kind;
        vector_stream_id_ = dev.start_stream(sim, StreamKind::RadioSkill, Owner::Attacker);
        sim.log("vector-established",
                {{"vector", to_string(kind)}, {"stream_id", vector_stream_id_}});
        return;
    }
    const bool paired = dev.bt_paired().count(plan_.bt_device_id) > 0;
    if (!paired && !plan_.bt_in_range) {
        throw SimError(ErrorCode::VectorUnavailable,
                       "bluetooth needs either a past pairing or physical proximity");
    }
    if (!dev.bluetooth_enabled()) dev.enable_bluetooth(sim);
    dev.pair_bluetooth(sim, plan_.bt_device_id);
    vector_ = kind;
    if (dev.bt_connected() && *dev.bt_connected() == plan_.bt_device_id) {
        vector_stream_id_ = dev.start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);
        sim.log("vector-established",
                {{"vector", to_string(kind)}, {"stream_id", vector_stream_id_}});
    } else {
        // Fresh pairing: audio starts the moment the handshake completes.
        const std::string device_id = plan_.bt_device_id;
        sim.schedule(sim.now() + world_.config().pairing_duration_ms, "vector-audio",
                     {{"device_id", device_id}}, [this, device_id](sim::Simulation& s) {
                         device::Device& d = world_.dev();
                         if (!d.bt_connected() || *d.bt_connected() != device_id) return;
                         vector_stream_id_ =
                             d.start_stream(s, StreamKind::BluetoothAudio, Owner::Attacker);
                         s.log("vector-established", {{"vector", to_string(VectorKind::Bluetooth)},
                                                      {"stream_id", vector_stream_id_}});
                     });
    }
}

void Attacker::require_vector_stream() const {
    if (!vector_) {
        throw SimError(ErrorCode::VectorUnavailable, "no attack vector established");
    }
    const auto& stream = world_.dev().attacker_stream();
    const StreamKind expected = *vector_ == VectorKind::RadioStation
                                    ? StreamKind::RadioSkill
                                    : StreamKind::BluetoothAudio;
    if (!stream || stream->kind != expected || stream->state == StreamState::Stopped) {
        throw SimError(ErrorCode::VectorUnavailable,
                       "the attack vector stream is gone; nothing left to play payloads on");
    }
}

world::UtteranceOutcome Attacker::self_issue(const Payload& payload, int variant) {
    require_vector_stream();
    device::Device& dev = world_.dev();
    acoustics::Utterance u;
    u.text = payload.with_wakeword ? dev.wakeword() + " " + payload.text : payload.text;
    u.has_wakeword = payload.with_wakeword;
    u.source = *vector_ == VectorKind::RadioStation ? acoustics::Source::RadioStream
                                                    : acoustics::Source::BluetoothStream;
    u.loudness = dev.volume();
    u.voice_profile = payload.profile_id;
    u.command_id = payload.command_id;
    u.variant = variant;
    world::UtteranceOutcome outcome = world_.emit_utterance(u);
    if (outcome.note == "mic-muted") {
        throw SimError(ErrorCode::MicMuted, "the payload played to a dead microphone");
    }
    return outcome;
}

void Attacker::arm_fvv() {
    if (vector_ && *vector_ == VectorKind::RadioStation) {
        throw SimError(ErrorCode::FvvNotCapable,
                       "forced full volume needs a bluetooth stream; the radio skill "
                       "stops on turn-off instead");
    }
    Payload turn_off;
    turn_off.payload_id = "arm-fvv";
    turn_off.text = "turn off";
    self_issue(turn_off);
    world_.engine().log("fvv-arm-attempt", {{"armed", world_.dev().fvv_active()}});
}

void Attacker::restart_vector_stream() {
    require_vector_stream();
    vector_stream_id_ = world_.dev().restart_stream(world_.engine(), vector_stream_id_);
}

void Attacker::issue_with_retries(const Payload& payload, int attempt, bool confirm_after) {
    sim::Simulation& sim = world_.engine();
    const world::UtteranceOutcome outcome = self_issue(payload, attempt);
    if (outcome.executed) {
        if (confirm_after) {
            const world::CommandSpec* spec = world_.catalog().by_id(payload.command_id);
            if (spec && spec->action && spec->action->confirm != device::Confirm::Never) {
                // The device is about to ask for a yes; oblige it shortly.
                sim.schedule(sim.now() + world_.config().confirm_delay_ms, "attack-confirm",
                             {{"payload_id", payload.payload_id}}, [this](sim::Simulation&) {
                                 Payload yes;
                                 yes.payload_id = "confirm-yes";
                                 yes.text = "yes";
                                 yes.with_wakeword = false;
                                 self_issue(yes);
                             });
            }
        }
        return;
    }
    if (attempt >= world_.config().max_retries) {
        sim.log("attack-step-abandoned",
                {{"payload_id", payload.payload_id}, {"attempts", attempt + 1}});
        return;
    }
    sim.log("self-issue-retry", {{"payload_id", payload.payload_id},
                                 {"next_variant", attempt + 1}});
    sim.schedule(sim.now() + world_.config().retry_delay_ms, "attack-retry",
                 {{"payload_id", payload.payload_id}},
                 [this, payload, attempt, confirm_after](sim::Simulation& s) {
                     try {
                         issue_with_retries(payload, attempt + 1, confirm_after);
                     } catch (const SimError& e) {
                         s.log("attack-step-failed", {{"kind", "retry"},
                                                      {"error", to_string(e.code())},
                                                      {"detail", e.what()}});
                     }
                 });
}

void Attacker::run_step(const PlanStep& step) {
    sim::Simulation& sim = world_.engine();
    switch (step.kind) {
    case PlanStep::Kind::EstablishVector:
        establish_vector(step.vector);
        break;
    case PlanStep::Kind::SelfIssue:
        issue_with_retries(plan_.payloads.at(step.payload_id), 0, false);
        break;
    case PlanStep::Kind::ArmFvv:
        arm_fvv();
        break;
    case PlanStep::Kind::OpenMask: {
        if (!step.payload_id.empty()) {
            issue_with_retries(plan_.payloads.at(step.payload_id), 0, false);
            break;
        }
        Payload open;
        open.payload_id = "open-mask";
        open.command_id = "open-mask-attack";
        open.text = "open mask attack";
        issue_with_retries(open, 0, false);
        break;
    }
    case PlanStep::Kind::GoOn: {
        if (state() == AttackerState::Passive) {
            Payload go_on;
            go_on.payload_id = "go-on";
            go_on.text = "go on";
            self_issue(go_on);
        } else {
            sim.log("go-on-skipped", {{"reason", "no masquerading session"}});
        }
        const PlanStep next{PlanStep::Kind::GoOn, sim.now() + step.every_ms, step.vector,
                            step.payload_id, step.every_ms};
        sim.schedule(next.at_ms, "attack-step", {{"kind", "GoOn"}},
                     [this, next](sim::Simulation& s) {
                         try {
                             run_step(next);
                         } catch (const SimError& e) {
                             s.log("attack-step-failed", {{"kind", "GoOn"},
                                                          {"error", to_string(e.code())},
                                                          {"detail", e.what()}});
                         }
                     });
        break;
    }
    case PlanStep::Kind::QuitToActive: {
        Payload quit;
        quit.payload_id = "quit";
        quit.text = "quit";
        self_issue(quit);
        break;
    }
    case PlanStep::Kind::ImpactAction:
        issue_with_retries(plan_.payloads.at(step.payload_id), 0, true);
        break;
    case PlanStep::Kind::RestartStream:
        restart_vector_stream();
        break;
    }
}

} // namespace vasim::attacker

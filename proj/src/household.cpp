#include "vasim/household.hpp"

#include <algorithm>

namespace vasim::household {

namespace {

void check_probability(double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw SimError(ErrorCode::ValidationError,
                       std::string(field) + " must lie in [0,1], got " + std::to_string(p));
    }
}

} // namespace

void ReactionProfile::validate() const {
    check_probability(p_perceive_malicious_on_hear, "p_perceive_malicious_on_hear");
    check_probability(p_notice_blink, "p_notice_blink");
    check_probability(p_notice_green, "p_notice_green");
    check_probability(p_restart_on_suspicion, "p_restart_on_suspicion");
    check_probability(p_say_stop, "p_say_stop");
}

acoustics::ListenerClass HouseholdMember::position_at(Millis t) const {
    acoustics::ListenerClass current = acoustics::ListenerClass::NonAdjacent;
    for (const PositionSpan& span : timeline) {
        if (span.from_ms > t) break;
        current = span.listener;
    }
    return current;
}

void HouseholdMember::validate() const {
    if (member_id.empty()) {
        throw SimError(ErrorCode::ValidationError, "household member needs a member_id");
    }
    profile.validate();
    if (timeline.empty()) {
        throw SimError(ErrorCode::ValidationError,
                       "member '" + member_id + "' has an empty position timeline");
    }
    if (timeline.front().from_ms != 0) {
        throw SimError(ErrorCode::ValidationError,
                       "member '" + member_id + "' timeline must start at 0ms");
    }
    for (std::size_t i = 1; i < timeline.size(); ++i) {
        if (timeline[i].from_ms <= timeline[i - 1].from_ms) {
            throw SimError(ErrorCode::ValidationError,
                           "member '" + member_id + "' timeline must be strictly ascending");
        }
    }
}

const char* to_string(ReactionEvent::Kind k) {
    switch (k) {
    case ReactionEvent::Kind::HeardPayload: return "heard-payload";
    case ReactionEvent::Kind::NoticedBlink: return "noticed-blink";
    case ReactionEvent::Kind::NoticedGreen: return "noticed-green";
    case ReactionEvent::Kind::SaidStop: return "said-stop";
    case ReactionEvent::Kind::RestartedDevice: return "restarted-device";
    case ReactionEvent::Kind::MutedMic: return "muted-mic";
    case ReactionEvent::Kind::Ignored: return "ignored";
    }
    return "unknown";
}

const char* to_string(Stimulus s) {
    switch (s) {
    case Stimulus::PayloadHeard: return "payload-heard";
    case Stimulus::BlinkInSight: return "blink-in-sight";
    case Stimulus::GreenInSight: return "green-in-sight";
    }
    return "unknown";
}

const char* to_string(ScriptedAction::Kind k) {
    switch (k) {
    case ScriptedAction::Kind::OpenRadioSkill: return "open-radio-skill";
    case ScriptedAction::Kind::PlayMusicVoice: return "play-music-voice";
    case ScriptedAction::Kind::ConnectOwnBt: return "connect-own-bt";
    case ScriptedAction::Kind::DisconnectOwnBt: return "disconnect-own-bt";
    case ScriptedAction::Kind::PressMicMute: return "press-mic-mute";
    case ScriptedAction::Kind::PressVolume: return "press-volume";
    case ScriptedAction::Kind::Say: return "say";
    }
    return "unknown";
}

ReactionEvent perceive(const HouseholdMember& member, Stimulus stimulus, Millis now,
                       sim::RandomStream& rng) {
    member.profile.validate();
    ReactionEvent event;
    event.member_id = member.member_id;
    event.at_ms = now;
    event.kind = ReactionEvent::Kind::Ignored;

    const ReactionProfile& p = member.profile;
    switch (stimulus) {
    case Stimulus::PayloadHeard:
        if (rng.bernoulli(p.p_perceive_malicious_on_hear)) {
            // A member convinced something is wrong always does *something*:
            // power-cycling is the instinctive fix, saying "stop" the polite
            // one, and muting the microphone the fallback.
            if (rng.bernoulli(p.p_restart_on_suspicion)) {
                event.kind = ReactionEvent::Kind::RestartedDevice;
            } else if (rng.bernoulli(p.p_say_stop)) {
                event.kind = ReactionEvent::Kind::SaidStop;
            } else {
                event.kind = ReactionEvent::Kind::MutedMic;
            }
        }
        break;
    case Stimulus::BlinkInSight:
        if (rng.bernoulli(p.p_notice_blink)) {
            event.kind = ReactionEvent::Kind::NoticedBlink;
        }
        break;
    case Stimulus::GreenInSight:
        if (rng.bernoulli(p.p_notice_green)) {
            event.kind = ReactionEvent::Kind::NoticedGreen;
        }
        break;
    }
    return event;
}

const HouseholdMember* Household::member(const std::string& id) const {
    auto it = std::find_if(members.begin(), members.end(),
                           [&](const HouseholdMember& m) { return m.member_id == id; });
    return it == members.end() ? nullptr : &*it;
}

void Household::validate() const {
    for (const HouseholdMember& m : members) {
        m.validate();
    }
    for (const ScriptedAction& a : actions) {
        if (!a.member_id.empty() && member(a.member_id) == nullptr) {
            throw SimError(ErrorCode::ValidationError,
                           "scripted action references unknown member '" + a.member_id + "'");
        }
        if (a.kind == ScriptedAction::Kind::Say && a.text.empty()) {
            throw SimError(ErrorCode::ValidationError, "say action needs text");
        }
        if (a.kind == ScriptedAction::Kind::ConnectOwnBt && a.bt_device_id.empty()) {
            throw SimError(ErrorCode::ValidationError, "connect-own-bt action needs bt_device_id");
        }
    }
}

} // namespace vasim::household

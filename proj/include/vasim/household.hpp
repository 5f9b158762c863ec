#pragma once

#include <string>
#include <vector>

#include "vasim/acoustics.hpp"
#include "vasim/core.hpp"
#include "vasim/sim/random.hpp"

namespace vasim::household {

/// Per-member reaction likelihoods, calibrated to the shipped field-study
/// observations. They are inputs, not quantities the simulator re-derives.
struct ReactionProfile {
    double p_perceive_malicious_on_hear = 0.16;
    double p_notice_blink = 0.16;
    double p_notice_green = 0.27;
    double p_restart_on_suspicion = 1.0;
    double p_say_stop = 0.0;

    void validate() const;  // every probability in [0,1]
};

struct PositionSpan {
    Millis from_ms = 0;
    acoustics::ListenerClass listener = acoustics::ListenerClass::SameRoom;
};

struct HouseholdMember {
    std::string member_id;
    std::vector<PositionSpan> timeline;  // ascending from_ms, first span at 0
    ReactionProfile profile;

    acoustics::ListenerClass position_at(Millis t) const;
    void validate() const;
};

/// What a member just perceived the raw form of; the audibility or
/// visibility draw happened upstream.
enum class Stimulus { PayloadHeard, BlinkInSight, GreenInSight };

struct ReactionEvent {
    enum class Kind {
        HeardPayload,
        NoticedBlink,
        NoticedGreen,
        SaidStop,
        RestartedDevice,
        MutedMic,
        Ignored,
    };
    std::string member_id;
    Millis at_ms = 0;
    Kind kind = Kind::Ignored;
};

const char* to_string(ReactionEvent::Kind k);
const char* to_string(Stimulus s);

/// Sample the member's follow-up to a stimulus. A heard payload escalates
/// through suspicion; a light-ring sighting either registers or slides by.
ReactionEvent perceive(const HouseholdMember& member, Stimulus stimulus, Millis now,
                       sim::RandomStream& rng);

/// A scripted thing a member does at a fixed time: voice requests that feed
/// stream arbitration, physical-button presses, and free-form speech.
struct ScriptedAction {
    enum class Kind {
        OpenRadioSkill,
        PlayMusicVoice,
        ConnectOwnBt,
        DisconnectOwnBt,
        PressMicMute,
        PressVolume,
        Say,
    };
    Kind kind = Kind::Say;
    std::string member_id;
    Millis at_ms = 0;
    int volume = 0;            // PressVolume
    std::string text;          // Say
    std::string bt_device_id;  // ConnectOwnBt
};

const char* to_string(ScriptedAction::Kind k);

struct Household {
    std::vector<HouseholdMember> members;
    std::vector<ScriptedAction> actions;

    const HouseholdMember* member(const std::string& id) const;
    void validate() const;
};

} // namespace vasim::household

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vasim/core.hpp"

namespace vasim::acoustics {

enum class Placement { Open, Wall, Small };
enum class Source { Human, SelfSpeaker, BluetoothStream, RadioStream };
enum class ListenerClass { SameRoom, AdjacentWall, AdjacentWallDoor, NonAdjacent };

const char* to_string(Placement p);
const char* to_string(Source s);
const char* to_string(ListenerClass c);
Placement placement_from_string(const std::string& s);
Source source_from_string(const std::string& s);
ListenerClass listener_from_string(const std::string& s);

inline bool is_device_emitted(Source s) { return s != Source::Human; }

/// A symbolic audio event: no waveform, just the facts the model needs.
struct Utterance {
    std::string text;
    bool has_wakeword = false;
    Source source = Source::Human;
    std::string room_id;        // Human sources only
    int loudness = 5;           // device-volume scale 0..10
    std::string voice_profile;  // e.g. "profile-A"; empty for live humans
    std::string command_id;     // catalog key; empty for free-form speech
    int variant = 0;            // payload variant; bumping it models a pitch edit
};

struct AudibilityRule {
    ListenerClass listener;
    int min_volume = 0;
    double heard_probability = 0.0;
};

/// Maps a listener's position class and the playback volume to the chance
/// they hear the audio at all. First matching rule wins.
struct AudibilityModel {
    std::vector<AudibilityRule> rules;

    static AudibilityModel defaults();
    static AudibilityModel from_json(const Json& j);

    double probability(ListenerClass cls, int volume) const;
};

/// Measured reliability scores for self-issued commands, keyed by command,
/// voice profile, device placement, volume bucket, and whether the playback
/// ran at forced full volume. Scores are 0-10; fractional values carry
/// measured percentages that whole deciles cannot.
class RecognitionTable {
public:
    static RecognitionTable from_json(const Json& j);
    static RecognitionTable load_file(const std::string& path);

    /// Raw score lookup with volume bucketing and single-column fallback
    /// (a key measured in only one full-volume column borrows the other).
    double score(const std::string& command, const std::string& profile, Placement placement,
                 int volume, bool fvv) const;

    /// Score mapped to a probability: 0 -> 0.0, 10 -> score10_probability,
    /// anything else -> score/10.
    double probability(const std::string& command, const std::string& profile,
                       Placement placement, int volume, bool fvv) const;

    bool has_command(const std::string& command) const;
    std::size_t size() const { return entries_.size(); }

    /// Keys where the full-volume score undercuts the normal-volume score.
    /// The shipped dataset has none; validation re-checks loaded ones.
    std::vector<std::string> dominance_violations() const;

    void set_score10_probability(double p) { score10_probability_ = p; }
    double score10_probability() const { return score10_probability_; }

private:
    struct Key {
        std::string command;
        std::string profile;
        Placement placement;
        int volume;
        bool fvv;
        auto operator<=>(const Key&) const = default;
    };

    std::map<Key, double> entries_;
    std::set<std::string> commands_;
    double score10_probability_ = 0.99;

    std::optional<double> lookup(const Key& key) const;
};

/// Replay wear: the same rendered sample stops working after too many
/// consecutive uses, until a pitch edit (variant change) or enough idle time
/// resets it. A reset restores the original probability exactly.
class CooldownTracker {
public:
    CooldownTracker(int cooldown_after, Millis idle_reset_ms)
        : after_(cooldown_after), idle_reset_ms_(idle_reset_ms) {}

    /// Record one use at `now`; returns true when this use is past the limit
    /// and recognition must fail.
    bool use(const std::string& command, const std::string& profile, int variant, Millis now);

    /// Models relocation or any other out-of-band reset.
    void reset_all() { state_.clear(); }

private:
    struct State {
        int consecutive = 0;
        int variant = 0;
        Millis last_use = 0;
    };

    int after_;
    Millis idle_reset_ms_;
    std::map<std::pair<std::string, std::string>, State> state_;
};

/// Both measurement tables from one JSON file.
struct Tables {
    RecognitionTable recognition;
    AudibilityModel audibility;
};
Tables load_tables(const std::string& path);

/// Recognition chance for one utterance. Ducked playback without forced full
/// volume is what the normal-volume column already measures, so the ducked
/// flag simply pins the column choice.
double recognition_probability(const RecognitionTable& table, const std::string& command_id,
                               const std::string& profile_id, Placement placement, int volume,
                               bool fvv_active, bool ducked);

/// What the device state exposes to the capture model.
struct DeviceStateView {
    bool mic_muted = false;
    bool stream_paused = false;   // SSML audio-tag pause semantics
    bool ducking_active = false;
    int duck_attenuation = 3;
    std::string wakeword;
};

struct MicCapture {
    std::string heard_text;
    int effective_loudness = 0;
    Source source = Source::Human;
    bool wakeword_only = false;
};

/// What the microphone actually hears. Device-emitted audio over a paused
/// stream degrades to the bare wakeword fragment; ducking lowers the heard
/// loudness but never blanks the text. Throws MicMuted when the hardware
/// switch is off.
MicCapture capture(const Utterance& u, const DeviceStateView& view);

/// Shared helper: does `text` start with the wakeword token?
bool starts_with_wakeword(const std::string& text, const std::string& wakeword);

/// Text with the leading wakeword token (and following separators) removed.
std::string strip_wakeword(const std::string& text, const std::string& wakeword);

} // namespace vasim::acoustics

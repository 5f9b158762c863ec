#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "vasim/config.hpp"
#include "vasim/core.hpp"
#include "vasim/sim/engine.hpp"

namespace vasim::device {

enum class StreamKind { RadioSkill, BluetoothAudio, MusicSkill, SsmlAudioTag };
enum class Owner { Attacker, User };
enum class StreamState { Playing, Paused, Stopped };
enum class LightRing { Off, SpeakingBlink, Green };
enum class ArbitrationOutcome { Stop, Pause, Play };
enum class UserRequest { VoicePlayMusic, ConnectBluetooth };

const char* to_string(StreamKind k);
const char* to_string(Owner o);
const char* to_string(StreamState s);
const char* to_string(LightRing l);
const char* to_string(ArbitrationOutcome a);

struct AudioStream {
    int id = 0;
    StreamKind kind = StreamKind::MusicSkill;
    Owner owner = Owner::User;
    StreamState state = StreamState::Playing;
    Millis started_at = 0;
    bool muted = false;  // audible to nobody, but still technically playing
};

enum class Confirm { Never, Sometimes, Always };

struct BuiltinCommand {
    enum class Kind {
        SetVolume,
        BluetoothOn,
        MicMuteToggle,  // physical button only, never voice
        TurnOff,
        Stop,
        Quit,
        Call,
        SmartHome,
        Buy,
        Calendar,
        OpenSkill,
        PlayMusic,
        Yes,
    };
    Kind kind = Kind::Stop;
    int number = 0;    // SetVolume
    std::string arg;   // Call target, SmartHome action, Buy item, Calendar entry, OpenSkill name
    Confirm confirm = Confirm::Never;
};

/// The session-side operations the device needs when reserved words arrive.
/// Implemented by the skill runtime.
struct SessionPort {
    virtual ~SessionPort() = default;
    virtual bool session_open() const = 0;
    virtual void close_session(sim::Simulation& sim, const std::string& reason) = 0;
};

/// The smart-speaker state machine. All transitions are driven from event
/// dispatch; anything audible or observable lands in the simulation log.
class Device {
public:
    Device() = default;
    explicit Device(const SimConfig& cfg) : cfg_(cfg) {}

    void attach_session_port(SessionPort* port) { session_port_ = port; }

    // ------------------------------------------------------------ plain state
    int volume() const { return volume_; }
    void set_volume(sim::Simulation& sim, int v);
    bool mic_muted() const { return mic_muted_; }
    void toggle_mic_mute(sim::Simulation& sim);  // physical switch
    bool ducking_active() const { return ducking_active_; }
    void clear_ducking() { ducking_active_ = false; }
    bool fvv_active() const { return fvv_active_; }
    const std::string& wakeword() const { return wakeword_; }
    void set_wakeword(std::string w) { wakeword_ = std::move(w); }
    bool call_open() const { return call_open_; }
    void end_call(sim::Simulation& sim);

    LightRing light_ring(Millis now) const;

    // --------------------------------------------------------------- streams
    const std::optional<AudioStream>& attacker_stream() const { return attacker_stream_; }
    const std::optional<AudioStream>& user_stream() const { return user_stream_; }

    /// Begin a stream in the owner's slot, replacing whatever was there.
    /// Returns the new stream id.
    int start_stream(sim::Simulation& sim, StreamKind kind, Owner owner);

    /// Stop the stream with this id, if it is still around. Clears the full
    /// volume flag when it was bound to that stream.
    void end_stream(sim::Simulation& sim, int id, const std::string& reason);

    /// Stop-and-replay: the stream gets a fresh id and start time, so the
    /// full volume flag bound to the old id clears.
    int restart_stream(sim::Simulation& sim, int id);

    void pause_stream(sim::Simulation& sim, int id);
    void resume_stream(sim::Simulation& sim, int id);

    /// Resume a paused attacker stream if nothing else claims the speaker.
    void resume_paused_vector(sim::Simulation& sim);

    // ------------------------------------------------------ response playback
    /// The device (or the active skill) starts speaking for this long; the
    /// light ring blinks for the whole window, silence included.
    void begin_speech(sim::Simulation& sim, Millis duration_ms);
    /// Playback was cut short; the ring stops blinking now.
    void end_speech(sim::Simulation& sim);
    bool speaking(Millis now) const { return now < speaking_until_; }
    Millis speaking_until() const { return speaking_until_; }

    // --------------------------------------------------------------- wakeword
    /// Volume reaction to a detected wakeword: audio-tag streams pause, all
    /// other playback ducks — unless forced full volume is armed.
    void on_wakeword(sim::Simulation& sim);

    /// Pull the plug and put it back: every stream and session dies, ducking
    /// and forced full volume reset, connections drop — but the paired-device
    /// list lives in flash and survives.
    void power_cycle(sim::Simulation& sim);

    // --------------------------------------------------------------- builtins
    void execute_builtin(sim::Simulation& sim, const BuiltinCommand& cmd);

    /// The behavior matrix for a user request landing on an active attacker
    /// stream: what happens to that stream.
    ArbitrationOutcome arbitrate(UserRequest request, bool vma_session_open) const;

    // -------------------------------------------------------------- bluetooth
    bool bluetooth_enabled() const { return bt_enabled_; }
    void enable_bluetooth(sim::Simulation& sim);
    void pair_bluetooth(sim::Simulation& sim, const std::string& device_id);
    /// State carried in from before the simulation window: bluetooth already
    /// switched on, devices already in the paired list. Silent — no events.
    void preseed_bluetooth(bool enabled, std::set<std::string> paired) {
        bt_enabled_ = enabled || !paired.empty();
        bt_paired_ = std::move(paired);
    }
    const std::set<std::string>& bt_paired() const { return bt_paired_; }
    const std::optional<std::string>& bt_connected() const { return bt_connected_; }
    void disconnect_bluetooth(sim::Simulation& sim);

    // ----------------------------------------------------------- confirmation
    bool has_pending_confirmation(Millis now) const;

    /// Audible device output (pairing chime, confirmation prompts, command
    /// replies). The world routes it to the household.
    std::function<void(sim::Simulation&, const std::string&)> on_announce;
    /// Skill launch requests leaving the device ("open <name>").
    std::function<void(sim::Simulation&, const std::string&)> on_open_skill;
    /// A user music request that survived arbitration starts a music stream.
    std::function<void(sim::Simulation&)> on_play_music;
    /// An impact action (call, purchase, smart-home, calendar) just ran.
    std::function<void(sim::Simulation&, const BuiltinCommand&)> on_impact;

    const SimConfig& config() const { return cfg_; }

private:
    void announce(sim::Simulation& sim, const std::string& text);
    void execute_impact(sim::Simulation& sim, const BuiltinCommand& cmd);
    void maybe_confirm(sim::Simulation& sim, const BuiltinCommand& cmd);
    AudioStream* stream_by_id(int id);
    std::optional<AudioStream>& slot(Owner owner);

    SimConfig cfg_;
    SessionPort* session_port_ = nullptr;

    int volume_ = 5;
    bool mic_muted_ = false;
    bool ducking_active_ = false;
    bool fvv_active_ = false;
    int fvv_stream_id_ = 0;
    std::string wakeword_ = "aria";
    bool call_open_ = false;
    Millis speaking_until_ = 0;

    bool bt_enabled_ = false;
    std::set<std::string> bt_paired_;
    std::optional<std::string> bt_connected_;

    std::optional<AudioStream> attacker_stream_;
    std::optional<AudioStream> user_stream_;
    int next_stream_id_ = 1;

    struct PendingConfirmation {
        BuiltinCommand action;
        Millis expires_at = 0;
    };
    std::optional<PendingConfirmation> pending_confirmation_;
};

} // namespace vasim::device

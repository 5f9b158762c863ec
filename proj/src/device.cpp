#include "vasim/device.hpp"

#include <algorithm>

namespace vasim::device {

const char* to_string(StreamKind k) {
    switch (k) {
    case StreamKind::RadioSkill: return "RadioSkill";
    case StreamKind::BluetoothAudio: return "BluetoothAudio";
    case StreamKind::MusicSkill: return "MusicSkill";
    case StreamKind::SsmlAudioTag: return "SsmlAudioTag";
    }
    return "?";
}

const char* to_string(Owner o) { return o == Owner::Attacker ? "Attacker" : "User"; }

const char* to_string(StreamState s) {
    switch (s) {
    case StreamState::Playing: return "Playing";
    case StreamState::Paused: return "Paused";
    case StreamState::Stopped: return "Stopped";
    }
    return "?";
}

const char* to_string(LightRing l) {
    switch (l) {
    case LightRing::Off: return "Off";
    case LightRing::SpeakingBlink: return "SpeakingBlink";
    case LightRing::Green: return "Green";
    }
    return "?";
}

const char* to_string(ArbitrationOutcome a) {
    switch (a) {
    case ArbitrationOutcome::Stop: return "Stop";
    case ArbitrationOutcome::Pause: return "Pause";
    case ArbitrationOutcome::Play: return "Play";
    }
    return "?";
}

namespace {

Json stream_json(const AudioStream& s) {
    return {{"stream_id", s.id}, {"kind", to_string(s.kind)}, {"owner", to_string(s.owner)},
            {"state", to_string(s.state)}};
}

bool simultaneous_pair(StreamKind a, StreamKind b) {
    // The one sanctioned double-play: Bluetooth audio alongside the music player.
    return (a == StreamKind::BluetoothAudio && b == StreamKind::MusicSkill) ||
           (a == StreamKind::MusicSkill && b == StreamKind::BluetoothAudio);
}

} // namespace

void Device::set_volume(sim::Simulation& sim, int v) {
    volume_ = std::clamp(v, 0, 10);
    sim.log("volume-set", {{"volume", volume_}});
}

void Device::toggle_mic_mute(sim::Simulation& sim) {
    mic_muted_ = !mic_muted_;
    sim.log("mic-mute-toggled", {{"muted", mic_muted_}});
}

void Device::end_call(sim::Simulation& sim) {
    if (!call_open_) return;
    call_open_ = false;
    sim.log("call-ended");
}

LightRing Device::light_ring(Millis now) const {
    if (call_open_) return LightRing::Green;
    if (speaking(now)) return LightRing::SpeakingBlink;
    return LightRing::Off;
}

std::optional<AudioStream>& Device::slot(Owner owner) {
    return owner == Owner::Attacker ? attacker_stream_ : user_stream_;
}

AudioStream* Device::stream_by_id(int id) {
    if (attacker_stream_ && attacker_stream_->id == id) return &*attacker_stream_;
    if (user_stream_ && user_stream_->id == id) return &*user_stream_;
    return nullptr;
}

int Device::start_stream(sim::Simulation& sim, StreamKind kind, Owner owner) {
    std::optional<AudioStream>& mine = slot(owner);
    if (mine) end_stream(sim, mine->id, "replaced by a new stream");
    AudioStream s;
    s.id = next_stream_id_++;
    s.kind = kind;
    s.owner = owner;
    s.state = StreamState::Playing;
    s.started_at = sim.now();
    mine = s;
    sim.log("stream-started", stream_json(s));

    // Single-playback rule: anything else playing stops, unless this is the
    // documented Bluetooth+music double-play.
    std::optional<AudioStream>& other = slot(owner == Owner::Attacker ? Owner::User : Owner::Attacker);
    if (other && other->state == StreamState::Playing && !simultaneous_pair(kind, other->kind)) {
        end_stream(sim, other->id, "displaced by new playback");
    }
    return s.id;
}

void Device::end_stream(sim::Simulation& sim, int id, const std::string& reason) {
    AudioStream* s = stream_by_id(id);
    if (!s) return;
    const Owner owner = s->owner;
    s->state = StreamState::Stopped;
    sim.log("stream-ended", {{"stream_id", id}, {"kind", to_string(s->kind)},
                             {"owner", to_string(owner)}, {"reason", reason}});
    if (fvv_active_ && fvv_stream_id_ == id) {
        fvv_active_ = false;
        sim.log("fvv-cleared", {{"reason", "stream ended"}});
    }
    slot(owner).reset();
    if (owner == Owner::User) resume_paused_vector(sim);
}

int Device::restart_stream(sim::Simulation& sim, int id) {
    AudioStream* s = stream_by_id(id);
    if (!s) {
        throw SimError(ErrorCode::NoAttackerStream,
                       "no stream with id " + std::to_string(id) + " to restart");
    }
    const int old_id = s->id;
    s->id = next_stream_id_++;
    s->started_at = sim.now();
    s->state = StreamState::Playing;
    sim.log("stream-restarted", {{"old_stream_id", old_id}, {"stream_id", s->id},
                                 {"kind", to_string(s->kind)}, {"owner", to_string(s->owner)}});
    if (fvv_active_ && fvv_stream_id_ == old_id) {
        fvv_active_ = false;
        sim.log("fvv-cleared", {{"reason", "stream restarted"}});
    }
    // Replayed Bluetooth audio takes priority over a simultaneous music
    // stream, which goes quiet for the user.
    if (s->kind == StreamKind::BluetoothAudio && s->owner == Owner::Attacker && user_stream_ &&
        user_stream_->kind == StreamKind::MusicSkill &&
        user_stream_->state == StreamState::Playing && !user_stream_->muted) {
        user_stream_->muted = true;
        sim.log("user-stream-muted", {{"stream_id", user_stream_->id}});
    }
    return s->id;
}

void Device::pause_stream(sim::Simulation& sim, int id) {
    AudioStream* s = stream_by_id(id);
    if (!s || s->state != StreamState::Playing) return;
    s->state = StreamState::Paused;
    sim.log("stream-paused", stream_json(*s));
}

void Device::resume_stream(sim::Simulation& sim, int id) {
    AudioStream* s = stream_by_id(id);
    if (!s || s->state != StreamState::Paused) return;
    s->state = StreamState::Playing;
    sim.log("stream-resumed", stream_json(*s));
}

void Device::resume_paused_vector(sim::Simulation& sim) {
    if (!attacker_stream_ || attacker_stream_->state != StreamState::Paused) return;
    if (user_stream_ && user_stream_->state == StreamState::Playing) return;
    resume_stream(sim, attacker_stream_->id);
}

void Device::begin_speech(sim::Simulation& sim, Millis duration_ms) {
    speaking_until_ = std::max(speaking_until_, sim.now() + duration_ms);
    sim.log("speech-started", {{"until", speaking_until_}});
}

void Device::power_cycle(sim::Simulation& sim) {
    sim.log("device-restarting");
    if (session_port_ && session_port_->session_open()) {
        session_port_->close_session(sim, "device restarted");
    }
    for (std::optional<AudioStream>* streams : {&attacker_stream_, &user_stream_}) {
        if (*streams && (*streams)->state != StreamState::Stopped) {
            end_stream(sim, (*streams)->id, "device restarted");
        }
    }
    if (bt_connected_) disconnect_bluetooth(sim);
    ducking_active_ = false;
    fvv_active_ = false;
    pending_confirmation_.reset();
    end_call(sim);
    speaking_until_ = sim.now();
    sim.log("device-restarted");
}

void Device::end_speech(sim::Simulation& sim) {
    if (speaking_until_ <= sim.now()) return;
    speaking_until_ = sim.now();
    sim.log("speech-ended-early");
}

void Device::on_wakeword(sim::Simulation& sim) {
    if (fvv_active_) {
        sim.log("wakeword-at-full-volume", {{"stream_id", fvv_stream_id_}});
        return;
    }
    bool ducked = false;
    for (std::optional<AudioStream>* streams : {&attacker_stream_, &user_stream_}) {
        std::optional<AudioStream>& s = *streams;
        if (!s || s->state != StreamState::Playing) continue;
        if (s->kind == StreamKind::SsmlAudioTag) {
            pause_stream(sim, s->id);
        } else {
            ducked = true;
        }
    }
    if (ducked) {
        ducking_active_ = true;
        sim.log("ducking-engaged", {{"volume", volume_}, {"attenuation", cfg_.duck_attenuation}});
    }
}

void Device::announce(sim::Simulation& sim, const std::string& text) {
    sim.log("device-announcement", {{"text", text}});
    if (on_announce) on_announce(sim, text);
}

void Device::execute_impact(sim::Simulation& sim, const BuiltinCommand& cmd) {
    switch (cmd.kind) {
    case BuiltinCommand::Kind::Call:
        call_open_ = true;
        sim.log("call-started", {{"target", cmd.arg}});
        announce(sim, "calling " + cmd.arg);
        break;
    case BuiltinCommand::Kind::SmartHome:
        sim.log("smart-home-action", {{"action", cmd.arg}});
        announce(sim, "ok");
        break;
    case BuiltinCommand::Kind::Buy:
        sim.log("purchase-made", {{"item", cmd.arg}});
        announce(sim, "order placed for " + cmd.arg);
        break;
    case BuiltinCommand::Kind::Calendar:
        sim.log("calendar-entry-added", {{"entry", cmd.arg}});
        announce(sim, "event added to your calendar");
        break;
    default:
        throw SimError(ErrorCode::ValidationError, "not an impact command");
    }
    if (on_impact) on_impact(sim, cmd);
}

void Device::maybe_confirm(sim::Simulation& sim, const BuiltinCommand& cmd) {
    bool needed = cmd.confirm == Confirm::Always;
    if (cmd.confirm == Confirm::Sometimes) {
        needed = sim.rng("device-confirm").bernoulli(cfg_.sometimes_confirm_p);
    }
    if (!needed) {
        execute_impact(sim, cmd);
        return;
    }
    pending_confirmation_ = {cmd, sim.now() + cfg_.confirm_window_ms};
    sim.log("confirmation-requested",
            {{"action", cmd.arg}, {"expires_at", pending_confirmation_->expires_at}});
    announce(sim, "should I go ahead with " + cmd.arg + "? say yes to confirm");
}

bool Device::has_pending_confirmation(Millis now) const {
    return pending_confirmation_ && now <= pending_confirmation_->expires_at;
}

void Device::execute_builtin(sim::Simulation& sim, const BuiltinCommand& cmd) {
    switch (cmd.kind) {
    case BuiltinCommand::Kind::SetVolume:
        set_volume(sim, cmd.number);
        break;
    case BuiltinCommand::Kind::BluetoothOn:
        enable_bluetooth(sim);
        break;
    case BuiltinCommand::Kind::MicMuteToggle:
        toggle_mic_mute(sim);
        break;
    case BuiltinCommand::Kind::TurnOff: {
        AudioStream* bt = nullptr;
        for (std::optional<AudioStream>* streams : {&attacker_stream_, &user_stream_}) {
            if (*streams && (*streams)->kind == StreamKind::BluetoothAudio &&
                (*streams)->state == StreamState::Playing) {
                bt = &**streams;
                break;
            }
        }
        if (bt) {
            // The stream should stop here, but it does not — and volume
            // control over it is lost for the rest of its life.
            clear_ducking();
            fvv_active_ = true;
            fvv_stream_id_ = bt->id;
            sim.log("fvv-armed", {{"stream_id", bt->id}});
        } else {
            for (const std::optional<AudioStream>& s : {attacker_stream_, user_stream_}) {
                if (s && s->state != StreamState::Stopped) {
                    end_stream(sim, s->id, "turn-off command");
                }
            }
        }
        break;
    }
    case BuiltinCommand::Kind::Stop:
    case BuiltinCommand::Kind::Quit: {
        if (session_port_ && session_port_->session_open()) {
            // Reserved words always close the skill first; streams survive,
            // so stopping everything takes the command twice.
            session_port_->close_session(sim, cmd.kind == BuiltinCommand::Kind::Stop ? "stop" : "quit");
            break;
        }
        if (cmd.kind == BuiltinCommand::Kind::Quit) {
            sim.log("quit-without-session");
            break;
        }
        for (const std::optional<AudioStream>& s : {attacker_stream_, user_stream_}) {
            if (!s || s->state == StreamState::Stopped) continue;
            if (s->kind == StreamKind::BluetoothAudio) {
                sim.log("stop-ignored-for-bluetooth", {{"stream_id", s->id}});
            } else {
                if (s->kind == StreamKind::RadioSkill) {
                    sim.log("radio-vector-disconnected", {{"stream_id", s->id}});
                }
                end_stream(sim, s->id, "stop command");
            }
        }
        break;
    }
    case BuiltinCommand::Kind::Call:
    case BuiltinCommand::Kind::SmartHome:
    case BuiltinCommand::Kind::Buy:
    case BuiltinCommand::Kind::Calendar:
        maybe_confirm(sim, cmd);
        break;
    case BuiltinCommand::Kind::OpenSkill:
        if (on_open_skill) {
            on_open_skill(sim, cmd.arg);
        } else {
            sim.log("skill-open-unhandled", {{"skill", cmd.arg}});
        }
        break;
    case BuiltinCommand::Kind::PlayMusic:
        if (on_play_music) {
            on_play_music(sim);
        } else {
            start_stream(sim, StreamKind::MusicSkill, Owner::User);
        }
        break;
    case BuiltinCommand::Kind::Yes:
        if (pending_confirmation_ && sim.now() <= pending_confirmation_->expires_at) {
            const BuiltinCommand action = pending_confirmation_->action;
            pending_confirmation_.reset();
            sim.log("confirmation-accepted", {{"action", action.arg}});
            execute_impact(sim, action);
        } else {
            pending_confirmation_.reset();
            sim.log("yes-without-pending-confirmation");
        }
        break;
    }
}

ArbitrationOutcome Device::arbitrate(UserRequest request, bool vma_session_open) const {
    if (!attacker_stream_ || attacker_stream_->state == StreamState::Stopped ||
        (attacker_stream_->kind != StreamKind::RadioSkill &&
         attacker_stream_->kind != StreamKind::BluetoothAudio)) {
        throw SimError(ErrorCode::NoAttackerStream,
                       "arbitration requires an active attacker radio or bluetooth stream");
    }
    const bool radio = attacker_stream_->kind == StreamKind::RadioSkill;
    if (request == UserRequest::ConnectBluetooth) {
        return radio ? ArbitrationOutcome::Pause : ArbitrationOutcome::Stop;
    }
    if (radio) {
        return vma_session_open ? ArbitrationOutcome::Play : ArbitrationOutcome::Stop;
    }
    return ArbitrationOutcome::Play;
}

void Device::enable_bluetooth(sim::Simulation& sim) {
    if (bt_enabled_) {
        sim.log("bluetooth-already-enabled");
        return;
    }
    bt_enabled_ = true;
    sim.log("bluetooth-enabled");
    announce(sim, "bluetooth is on and discoverable");
}

void Device::pair_bluetooth(sim::Simulation& sim, const std::string& device_id) {
    if (!bt_enabled_) {
        throw SimError(ErrorCode::ValidationError,
                       "bluetooth pairing requires bluetooth to be enabled first");
    }
    if (bt_paired_.count(device_id)) {
        // No PIN, no pairing delay — a known device reconnects on the spot.
        if (bt_connected_ && *bt_connected_ != device_id) disconnect_bluetooth(sim);
        bt_connected_ = device_id;
        sim.log("bt-connected", {{"device_id", device_id}, {"reconnect", true}});
        return;
    }
    sim.log("bt-pairing-started", {{"device_id", device_id}});
    sim.schedule(sim.now() + cfg_.pairing_duration_ms, "bt-pairing-complete",
                 {{"device_id", device_id}}, [this, device_id](sim::Simulation& s) {
                     bt_paired_.insert(device_id);
                     if (bt_connected_ && *bt_connected_ != device_id) disconnect_bluetooth(s);
                     bt_connected_ = device_id;
                     s.log("bt-connected", {{"device_id", device_id}, {"reconnect", false}});
                     announce(s, "connected to " + device_id);
                 });
}

void Device::disconnect_bluetooth(sim::Simulation& sim) {
    if (!bt_connected_) return;
    const std::string old = *bt_connected_;
    bt_connected_.reset();
    sim.log("bt-disconnected", {{"device_id", old}});
    // A dropped connection takes its audio with it.
    for (const std::optional<AudioStream>& s : {attacker_stream_, user_stream_}) {
        if (s && s->kind == StreamKind::BluetoothAudio && s->state != StreamState::Stopped) {
            end_stream(sim, s->id, "bluetooth connection dropped");
        }
    }
}

} // namespace vasim::device

#include <doctest.h>

#include "vasim/device.hpp"
#include "vasim/sim/engine.hpp"

#include "helpers.hpp"

using namespace vasim;
using device::ArbitrationOutcome;
using device::BuiltinCommand;
using device::Device;
using device::LightRing;
using device::Owner;
using device::StreamKind;
using device::StreamState;
using device::UserRequest;

namespace {

int count_kind(const sim::Simulation& sim, const std::string& kind) {
    int n = 0;
    for (const auto& line : sim.log_lines()) {
        if (Json::parse(line).at("kind") == kind) ++n;
    }
    return n;
}

Json last_payload(const sim::Simulation& sim, const std::string& kind) {
    Json found;
    for (const auto& line : sim.log_lines()) {
        Json j = Json::parse(line);
        if (j.at("kind") == kind) found = j.at("payload");
    }
    return found;
}

BuiltinCommand cmd(BuiltinCommand::Kind k, int number = 0, std::string arg = "",
                   device::Confirm confirm = device::Confirm::Never) {
    BuiltinCommand c;
    c.kind = k;
    c.number = number;
    c.arg = std::move(arg);
    c.confirm = confirm;
    return c;
}

struct StubPort : device::SessionPort {
    bool open = false;
    int closes = 0;
    std::string last_reason;

    bool session_open() const override { return open; }
    void close_session(sim::Simulation&, const std::string& reason) override {
        open = false;
        ++closes;
        last_reason = reason;
    }
};

} // namespace

TEST_CASE("arbitration matrix is total over vector, request, and session state") {
    // request x vector x session-open: all eight cells, pinned.
    struct Cell {
        StreamKind vector;
        UserRequest request;
        bool vma_open;
        ArbitrationOutcome expect;
    };
    const Cell cells[] = {
        {StreamKind::RadioSkill, UserRequest::ConnectBluetooth, false, ArbitrationOutcome::Pause},
        {StreamKind::RadioSkill, UserRequest::ConnectBluetooth, true, ArbitrationOutcome::Pause},
        {StreamKind::RadioSkill, UserRequest::VoicePlayMusic, false, ArbitrationOutcome::Stop},
        {StreamKind::RadioSkill, UserRequest::VoicePlayMusic, true, ArbitrationOutcome::Play},
        {StreamKind::BluetoothAudio, UserRequest::ConnectBluetooth, false, ArbitrationOutcome::Stop},
        {StreamKind::BluetoothAudio, UserRequest::ConnectBluetooth, true, ArbitrationOutcome::Stop},
        {StreamKind::BluetoothAudio, UserRequest::VoicePlayMusic, false, ArbitrationOutcome::Play},
        {StreamKind::BluetoothAudio, UserRequest::VoicePlayMusic, true, ArbitrationOutcome::Play},
    };
    for (const Cell& cell : cells) {
        CAPTURE(static_cast<int>(cell.vector));
        CAPTURE(static_cast<int>(cell.request));
        CAPTURE(cell.vma_open);
        sim::Simulation sim(1);
        Device dev;
        dev.start_stream(sim, cell.vector, Owner::Attacker);
        CHECK(dev.arbitrate(cell.request, cell.vma_open) == cell.expect);
    }
}

TEST_CASE("arbitration without an attacker vector fails loudly") {
    sim::Simulation sim(1);
    Device dev;
    CHECK_THROWS_AS(dev.arbitrate(UserRequest::VoicePlayMusic, false), SimError);
    // A user-owned music stream is not an attack vector either.
    dev.start_stream(sim, StreamKind::MusicSkill, Owner::User);
    CHECK_THROWS_AS(dev.arbitrate(UserRequest::ConnectBluetooth, false), SimError);
}

TEST_CASE("turn-off over playing bluetooth audio arms full volume instead of stopping") {
    sim::Simulation sim(7);
    Device dev;
    const int id = dev.start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);

    // Duck first so we can see turn-off clear it.
    dev.on_wakeword(sim);
    CHECK(dev.ducking_active());

    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::TurnOff));
    CHECK(dev.fvv_active());
    CHECK_FALSE(dev.ducking_active());
    CHECK(dev.attacker_stream()->state == StreamState::Playing);
    CHECK(count_kind(sim, "fvv-armed") == 1);
    CHECK(last_payload(sim, "fvv-armed").at("stream_id") == id);

    // Once armed, the wakeword no longer ducks anything.
    dev.on_wakeword(sim);
    CHECK_FALSE(dev.ducking_active());
    CHECK(count_kind(sim, "wakeword-at-full-volume") == 1);
}

TEST_CASE("full volume dies with its stream") {
    sim::Simulation sim(7);
    Device dev;
    const int id = dev.start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::TurnOff));
    REQUIRE(dev.fvv_active());

    dev.end_stream(sim, id, "test");
    CHECK_FALSE(dev.fvv_active());
    CHECK(last_payload(sim, "fvv-cleared").at("reason") == "stream ended");
}

TEST_CASE("restarting the stream re-keys it and disarms full volume") {
    sim::Simulation sim(7);
    Device dev;
    const int id = dev.start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::TurnOff));
    REQUIRE(dev.fvv_active());

    const int fresh = dev.restart_stream(sim, id);
    CHECK(fresh != id);
    CHECK_FALSE(dev.fvv_active());
    CHECK(dev.attacker_stream()->id == fresh);
    CHECK(dev.attacker_stream()->state == StreamState::Playing);
    CHECK(last_payload(sim, "fvv-cleared").at("reason") == "stream restarted");

    // Re-arming against the fresh id works again.
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::TurnOff));
    CHECK(dev.fvv_active());
    CHECK(last_payload(sim, "fvv-armed").at("stream_id") == fresh);
}

TEST_CASE("turn-off with no bluetooth playing stops everything") {
    sim::Simulation sim(7);
    Device dev;
    dev.start_stream(sim, StreamKind::RadioSkill, Owner::Attacker);
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::TurnOff));
    CHECK_FALSE(dev.fvv_active());
    CHECK_FALSE(dev.attacker_stream().has_value());
    CHECK(last_payload(sim, "stream-ended").at("reason") == "turn-off command");
}

TEST_CASE("reserved words hit the session first; streams need a second pass") {
    sim::Simulation sim(3);
    Device dev;
    StubPort port;
    dev.attach_session_port(&port);
    dev.start_stream(sim, StreamKind::RadioSkill, Owner::Attacker);
    port.open = true;

    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Stop));
    CHECK(port.closes == 1);
    CHECK(port.last_reason == "stop");
    CHECK(dev.attacker_stream()->state == StreamState::Playing);

    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Stop));
    CHECK(port.closes == 1);
    CHECK_FALSE(dev.attacker_stream().has_value());
    CHECK(count_kind(sim, "radio-vector-disconnected") == 1);
}

TEST_CASE("stop never touches a bluetooth stream") {
    sim::Simulation sim(3);
    Device dev;
    dev.start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Stop));
    CHECK(dev.attacker_stream()->state == StreamState::Playing);
    CHECK(count_kind(sim, "stop-ignored-for-bluetooth") == 1);

    // Quit without a session is just a shrug.
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Quit));
    CHECK(dev.attacker_stream()->state == StreamState::Playing);
    CHECK(count_kind(sim, "quit-without-session") == 1);
}

TEST_CASE("bluetooth pairing takes its time; reconnection is instant") {
    sim::Simulation sim(9);
    Device dev;
    CHECK_THROWS_AS(dev.pair_bluetooth(sim, "attacker-phone"), SimError);

    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::BluetoothOn));
    CHECK(dev.bluetooth_enabled());

    dev.pair_bluetooth(sim, "attacker-phone");
    CHECK_FALSE(dev.bt_connected().has_value());
    sim.run_until(24999);
    CHECK_FALSE(dev.bt_connected().has_value());
    sim.run_until(25000);
    REQUIRE(dev.bt_connected().has_value());
    CHECK(*dev.bt_connected() == "attacker-phone");
    CHECK(dev.bt_paired().count("attacker-phone") == 1);
    // The completed pairing is audible.
    CHECK(last_payload(sim, "device-announcement").at("text") == "connected to attacker-phone");

    // Drop and come back: a known device reconnects silently with no delay.
    dev.disconnect_bluetooth(sim);
    CHECK_FALSE(dev.bt_connected().has_value());
    const auto announcements = count_kind(sim, "device-announcement");
    dev.pair_bluetooth(sim, "attacker-phone");
    REQUIRE(dev.bt_connected().has_value());
    CHECK(last_payload(sim, "bt-connected").at("reconnect") == true);
    CHECK(count_kind(sim, "device-announcement") == announcements);
}

TEST_CASE("connecting a new bluetooth device swaps out the old one and its audio") {
    sim::Simulation sim(9);
    Device dev;
    dev.enable_bluetooth(sim);
    dev.pair_bluetooth(sim, "phone-a");
    sim.run_until(25000);
    REQUIRE(dev.bt_connected().has_value());

    dev.start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);
    REQUIRE(dev.attacker_stream().has_value());

    dev.pair_bluetooth(sim, "phone-b");
    sim.run_until(50000);
    REQUIRE(dev.bt_connected().has_value());
    CHECK(*dev.bt_connected() == "phone-b");
    // phone-a's stream died with its connection.
    CHECK_FALSE(dev.attacker_stream().has_value());
    CHECK(last_payload(sim, "stream-ended").at("reason") == "bluetooth connection dropped");
}

TEST_CASE("new playback displaces what was playing, except bluetooth beside music") {
    sim::Simulation sim(5);
    Device dev;

    SUBCASE("music over radio kills the radio") {
        dev.start_stream(sim, StreamKind::RadioSkill, Owner::Attacker);
        dev.start_stream(sim, StreamKind::MusicSkill, Owner::User);
        CHECK_FALSE(dev.attacker_stream().has_value());
        CHECK(dev.user_stream()->state == StreamState::Playing);
        CHECK(last_payload(sim, "stream-ended").at("reason") == "displaced by new playback");
    }
    SUBCASE("music beside bluetooth leaves both playing") {
        dev.start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);
        dev.start_stream(sim, StreamKind::MusicSkill, Owner::User);
        CHECK(dev.attacker_stream()->state == StreamState::Playing);
        CHECK(dev.user_stream()->state == StreamState::Playing);
        CHECK(count_kind(sim, "stream-ended") == 0);
    }
    SUBCASE("a paused stream is not displaced") {
        const int radio = dev.start_stream(sim, StreamKind::RadioSkill, Owner::Attacker);
        dev.pause_stream(sim, radio);
        dev.start_stream(sim, StreamKind::MusicSkill, Owner::User);
        CHECK(dev.attacker_stream()->state == StreamState::Paused);
    }
    SUBCASE("same slot always replaces") {
        dev.start_stream(sim, StreamKind::RadioSkill, Owner::Attacker);
        dev.start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);
        CHECK(dev.attacker_stream()->kind == StreamKind::BluetoothAudio);
        CHECK(last_payload(sim, "stream-ended").at("reason") == "replaced by a new stream");
    }
}

TEST_CASE("a replayed bluetooth stream silences simultaneous user music") {
    sim::Simulation sim(5);
    Device dev;
    const int bt = dev.start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);
    dev.start_stream(sim, StreamKind::MusicSkill, Owner::User);
    REQUIRE(dev.user_stream()->state == StreamState::Playing);
    CHECK_FALSE(dev.user_stream()->muted);

    dev.restart_stream(sim, bt);
    CHECK(dev.user_stream()->state == StreamState::Playing);
    CHECK(dev.user_stream()->muted);
    CHECK(count_kind(sim, "user-stream-muted") == 1);
}

TEST_CASE("paused attacker vector resumes when user playback ends") {
    sim::Simulation sim(5);
    Device dev;
    const int radio = dev.start_stream(sim, StreamKind::RadioSkill, Owner::Attacker);
    dev.pause_stream(sim, radio);
    const int music = dev.start_stream(sim, StreamKind::MusicSkill, Owner::User);

    dev.end_stream(sim, music, "user got bored");
    REQUIRE(dev.attacker_stream().has_value());
    CHECK(dev.attacker_stream()->state == StreamState::Playing);
    CHECK(count_kind(sim, "stream-resumed") == 1);
}

TEST_CASE("wakeword pauses audio-tag playback but only ducks real streams") {
    sim::Simulation sim(5);
    Device dev;

    SUBCASE("audio tag pauses") {
        dev.start_stream(sim, StreamKind::SsmlAudioTag, Owner::Attacker);
        dev.on_wakeword(sim);
        CHECK(dev.attacker_stream()->state == StreamState::Paused);
        CHECK_FALSE(dev.ducking_active());
    }
    SUBCASE("radio ducks and keeps playing") {
        dev.start_stream(sim, StreamKind::RadioSkill, Owner::Attacker);
        dev.on_wakeword(sim);
        CHECK(dev.attacker_stream()->state == StreamState::Playing);
        CHECK(dev.ducking_active());
        dev.clear_ducking();
        CHECK_FALSE(dev.ducking_active());
    }
    SUBCASE("nothing playing, nothing to duck") {
        dev.on_wakeword(sim);
        CHECK_FALSE(dev.ducking_active());
    }
}

TEST_CASE("light ring: green call beats blinking speech beats off") {
    sim::Simulation sim(5);
    Device dev(SimConfig{});
    CHECK(dev.light_ring(sim.now()) == LightRing::Off);

    dev.begin_speech(sim, 3000);
    CHECK(dev.light_ring(sim.now()) == LightRing::SpeakingBlink);
    CHECK(dev.speaking(2999));
    CHECK_FALSE(dev.speaking(3000));

    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Call, 0, "mom"));
    CHECK(dev.call_open());
    CHECK(dev.light_ring(sim.now()) == LightRing::Green);

    sim.run_until(5000);
    CHECK(dev.light_ring(sim.now()) == LightRing::Green);
    dev.end_call(sim);
    CHECK(dev.light_ring(sim.now()) == LightRing::Off);
}

TEST_CASE("confirmation gates impact actions through a closing window") {
    SimConfig cfg;
    sim::Simulation sim(11);
    Device dev(cfg);

    const BuiltinCommand buy = cmd(BuiltinCommand::Kind::Buy, 0, "a trinket",
                                   device::Confirm::Always);
    dev.execute_builtin(sim, buy);
    CHECK(count_kind(sim, "purchase-made") == 0);
    CHECK(dev.has_pending_confirmation(sim.now()));
    CHECK(last_payload(sim, "confirmation-requested").at("expires_at") == cfg.confirm_window_ms);

    SUBCASE("yes inside the window executes") {
        sim.run_until(9000);
        dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Yes));
        CHECK(count_kind(sim, "confirmation-accepted") == 1);
        CHECK(count_kind(sim, "purchase-made") == 1);
        CHECK_FALSE(dev.has_pending_confirmation(sim.now()));
    }
    SUBCASE("yes at the deadline still executes") {
        sim.run_until(cfg.confirm_window_ms);
        dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Yes));
        CHECK(count_kind(sim, "purchase-made") == 1);
    }
    SUBCASE("yes after the window is a no-op") {
        sim.run_until(cfg.confirm_window_ms + 1);
        dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Yes));
        CHECK(count_kind(sim, "purchase-made") == 0);
        CHECK(count_kind(sim, "yes-without-pending-confirmation") == 1);
    }
    SUBCASE("a stray yes with nothing pending is logged") {
        sim.run_until(20000);
        dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Yes));
        dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::Yes));
        CHECK(count_kind(sim, "yes-without-pending-confirmation") == 2);
    }
}

TEST_CASE("sometimes-confirm follows its own random stream") {
    // Forced endpoints make both paths deterministic.
    SimConfig always;
    always.sometimes_confirm_p = 1.0;
    sim::Simulation sim_a(13);
    Device dev_a(always);
    dev_a.execute_builtin(sim_a, cmd(BuiltinCommand::Kind::SmartHome, 0, "unlock door", device::Confirm::Sometimes));
    CHECK(count_kind(sim_a, "confirmation-requested") == 1);
    CHECK(count_kind(sim_a, "smart-home-action") == 0);

    SimConfig never;
    never.sometimes_confirm_p = 0.0;
    sim::Simulation sim_n(13);
    Device dev_n(never);
    dev_n.execute_builtin(sim_n, cmd(BuiltinCommand::Kind::SmartHome, 0, "unlock door", device::Confirm::Sometimes));
    CHECK(count_kind(sim_n, "confirmation-requested") == 0);
    CHECK(count_kind(sim_n, "smart-home-action") == 1);

    // Never-confirm impact commands execute immediately.
    sim::Simulation sim_c(13);
    Device dev_c{SimConfig{}};
    dev_c.execute_builtin(sim_c, cmd(BuiltinCommand::Kind::Calendar, 0, "fake meeting", device::Confirm::Never));
    CHECK(count_kind(sim_c, "calendar-entry-added") == 1);
}

TEST_CASE("volume is clamped to the dial") {
    sim::Simulation sim(1);
    Device dev;
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::SetVolume, 15));
    CHECK(dev.volume() == 10);
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::SetVolume, -3));
    CHECK(dev.volume() == 0);
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::SetVolume, 7));
    CHECK(dev.volume() == 7);
}

TEST_CASE("mic mute is a physical toggle") {
    sim::Simulation sim(1);
    Device dev;
    CHECK_FALSE(dev.mic_muted());
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::MicMuteToggle));
    CHECK(dev.mic_muted());
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::MicMuteToggle));
    CHECK_FALSE(dev.mic_muted());
}

TEST_CASE("play-music without a world hook starts a user music stream") {
    sim::Simulation sim(1);
    Device dev;
    dev.execute_builtin(sim, cmd(BuiltinCommand::Kind::PlayMusic));
    REQUIRE(dev.user_stream().has_value());
    CHECK(dev.user_stream()->kind == StreamKind::MusicSkill);
}

#include "vasim/world.hpp"

#include <algorithm>

namespace vasim::world {

using acoustics::ListenerClass;
using acoustics::Source;
using device::BuiltinCommand;
using device::Owner;
using device::StreamKind;
using device::StreamState;

// --------------------------------------------------------------- catalog

namespace {

CommandSpec make_spec(std::string command_id, std::string text,
                      std::optional<BuiltinCommand> action, std::string reply = "") {
    CommandSpec spec;
    spec.command_id = std::move(command_id);
    spec.text = std::move(text);
    spec.action = std::move(action);
    spec.reply = std::move(reply);
    return spec;
}

BuiltinCommand builtin(BuiltinCommand::Kind kind, std::string arg = "",
                       device::Confirm confirm = device::Confirm::Never, int number = 0) {
    BuiltinCommand cmd;
    cmd.kind = kind;
    cmd.arg = std::move(arg);
    cmd.confirm = confirm;
    cmd.number = number;
    return cmd;
}

} // namespace

CommandCatalog CommandCatalog::defaults() {
    CommandCatalog c;
    c.add(make_spec("hello", "hello", std::nullopt, "hi there"));
    c.add(make_spec("what-time", "what time is it", std::nullopt, "it is half past three"));
    c.add(make_spec("turn-off-light", "turn off the light",
                    builtin(BuiltinCommand::Kind::SmartHome, "turning off the light",
                            device::Confirm::Sometimes)));
    c.add(make_spec("call-mom", "call mom",
                    builtin(BuiltinCommand::Kind::Call, "mom", device::Confirm::Always)));
    c.add(make_spec("call-number", "call 555 0123",
                    builtin(BuiltinCommand::Kind::Call, "555 0123", device::Confirm::Always)));
    c.add(make_spec("call-attacker-number", "call 555 6666",
                    builtin(BuiltinCommand::Kind::Call, "555 6666", device::Confirm::Always)));
    c.add(make_spec("buy-item", "buy a trinket",
                    builtin(BuiltinCommand::Kind::Buy, "a trinket", device::Confirm::Always)));
    c.add(make_spec("calendar-edit", "add a meeting to my calendar",
                    builtin(BuiltinCommand::Kind::Calendar, "a meeting",
                            device::Confirm::Sometimes)));
    c.add(make_spec("open-mask-attack", "open mask attack",
                    builtin(BuiltinCommand::Kind::OpenSkill, "mask attack")));
    c.add(make_spec("", "stop", builtin(BuiltinCommand::Kind::Stop)));
    c.add(make_spec("", "quit", builtin(BuiltinCommand::Kind::Quit)));
    c.add(make_spec("", "turn off", builtin(BuiltinCommand::Kind::TurnOff)));
    c.add(make_spec("", "yes", builtin(BuiltinCommand::Kind::Yes)));
    c.add(make_spec("", "play music", builtin(BuiltinCommand::Kind::PlayMusic)));
    c.add(make_spec("", "play some music", builtin(BuiltinCommand::Kind::PlayMusic)));
    c.add(make_spec("", "turn on bluetooth", builtin(BuiltinCommand::Kind::BluetoothOn)));
    return c;
}

void CommandCatalog::add(CommandSpec spec) { entries_.push_back(std::move(spec)); }

std::optional<CommandSpec> CommandCatalog::match(const std::string& normalized) const {
    for (const CommandSpec& spec : entries_) {
        if (spec.text == normalized) return spec;
    }
    constexpr std::string_view kOpenPrefix = "open ";
    if (normalized.size() > kOpenPrefix.size() &&
        normalized.compare(0, kOpenPrefix.size(), kOpenPrefix) == 0) {
        return make_spec("", normalized,
                         builtin(BuiltinCommand::Kind::OpenSkill,
                                 normalized.substr(kOpenPrefix.size())));
    }
    constexpr std::string_view kVolumePrefix = "set volume to ";
    if (normalized.size() > kVolumePrefix.size() &&
        normalized.compare(0, kVolumePrefix.size(), kVolumePrefix) == 0) {
        const std::string tail = normalized.substr(kVolumePrefix.size());
        if (!tail.empty() && std::all_of(tail.begin(), tail.end(),
                                         [](char ch) { return ch >= '0' && ch <= '9'; })) {
            return make_spec("", normalized,
                             builtin(BuiltinCommand::Kind::SetVolume, "", device::Confirm::Never,
                                     std::stoi(tail)));
        }
    }
    return std::nullopt;
}

const CommandSpec* CommandCatalog::by_id(const std::string& command_id) const {
    if (command_id.empty()) return nullptr;
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const CommandSpec& s) { return s.command_id == command_id; });
    return it == entries_.end() ? nullptr : &*it;
}

// --------------------------------------------------------------- metrics

namespace {

Json counts_to_json(const std::map<std::string, int>& counts) {
    Json j = Json::object();
    for (const auto& [key, value] : counts) j[key] = value;
    return j;
}

} // namespace

Json Metrics::to_json() const {
    Json j;
    j["self_issue_attempts"] = counts_to_json(self_issue_attempts);
    j["self_issue_recognized"] = counts_to_json(self_issue_recognized);
    j["impact_executed"] = counts_to_json(impact_executed);
    j["arbitration"] = counts_to_json(arbitration);
    j["suppressed_commands"] = suppressed_commands;
    j["false_suppressions"] = false_suppressions;
    j["human_commands"] = human_commands;
    j["payload_overhears"] = payload_overhears;
    j["detection_events"] = detection_events;
    j["device_restarts"] = device_restarts;
    j["mask_session_open_ms"] = mask_session_open_ms;
    j["utterances_intercepted"] = utterances_intercepted;
    j["human_outcomes"] = human_outcomes;
    return j;
}

Json UtteranceOutcome::to_json() const {
    Json j;
    j["captured"] = captured;
    j["wakeword_accepted"] = wakeword_accepted;
    j["recognized"] = recognized;
    j["executed"] = executed;
    j["note"] = note;
    return j;
}

// ----------------------------------------------------------------- world

World::World(sim::Simulation& sim, const SimConfig& cfg, acoustics::Tables tables, Options opts)
    : sim_(sim),
      cfg_(cfg),
      tables_(std::move(tables)),
      opts_(opts),
      dev_(cfg),
      runtime_(cfg, opts.render_mode),
      catalog_(CommandCatalog::defaults()),
      cooldown_(cfg.cooldown_after, cfg.cooldown_idle_reset_ms),
      fingerprint_(cfg.fingerprint_window_ms) {
    tables_.recognition.set_score10_probability(cfg_.score10_probability);
    dev_.attach_session_port(&runtime_);
    wire_hooks();
}

void World::wire_hooks() {
    dev_.on_announce = [this](sim::Simulation& s, const std::string& text) {
        device_emission(s, text);
    };
    dev_.on_open_skill = [this](sim::Simulation& s, const std::string& invocation) {
        const skill::SkillDef* def = runtime_.find_by_invocation(invocation);
        if (!def) {
            s.log("skill-not-found", {{"invocation", invocation}});
            return;
        }
        runtime_.launch(s, def->id);
        if (mask_ && def->id == vma::MaskAttackSkill::kSkillId && !mask_open_since_) {
            mask_open_since_ = s.now();
        }
    };
    dev_.on_play_music = [this](sim::Simulation& s) {
        const auto& attacker = dev_.attacker_stream();
        if (attacker && attacker->state != StreamState::Stopped &&
            (attacker->kind == StreamKind::RadioSkill ||
             attacker->kind == StreamKind::BluetoothAudio)) {
            record_arbitration(device::UserRequest::VoicePlayMusic, false);
        }
        dev_.start_stream(s, StreamKind::MusicSkill, Owner::User);
    };
    dev_.on_impact = [this](sim::Simulation&, const BuiltinCommand& cmd) {
        const char* kind = "other";
        switch (cmd.kind) {
        case BuiltinCommand::Kind::Call: kind = "call"; break;
        case BuiltinCommand::Kind::SmartHome: kind = "smart-home"; break;
        case BuiltinCommand::Kind::Buy: kind = "buy"; break;
        case BuiltinCommand::Kind::Calendar: kind = "calendar"; break;
        default: break;
        }
        metrics_.impact_executed[kind]++;
        if (cmd.kind == BuiltinCommand::Kind::Call) {
            sight_check(household::Stimulus::GreenInSight);
        }
    };
    runtime_.on_play = [this](sim::Simulation& s, const ssml::PlaybackPlan& plan,
                              const std::string& markup) {
        (void)markup;
        dev_.begin_speech(s, plan.total_ms);
        for (const ssml::Segment& seg : plan.segments) {
            if (seg.kind == ssml::Segment::Kind::Speech) fingerprint_.record(seg.text, s.now());
        }
        sight_check(household::Stimulus::BlinkInSight);
    };
    runtime_.on_interrupt = [this](sim::Simulation& s) { dev_.end_speech(s); };
    runtime_.on_closed = [this](sim::Simulation& s) {
        if (mask_open_since_) {
            metrics_.mask_session_open_ms += s.now() - *mask_open_since_;
            mask_open_since_.reset();
        }
        dev_.end_speech(s);
    };
}

void World::set_defense(defenses::DefenseConfig defense) {
    defense.validate();
    sim_.log("defense-installed", defense.to_json());
    defense_ = std::move(defense);
}

void World::install_mask_skill(vma::MockAssistantBackend backend, vma::TamperPolicy policy) {
    mask_ = std::make_shared<vma::MaskAttackSkill>(cfg_, std::move(backend), std::move(policy));
    runtime_.register_skill(vma::MaskAttackSkill::definition(), mask_);
}

void World::device_emission(sim::Simulation& sim, const std::string& text) {
    fingerprint_.record(text, sim.now());
    dev_.begin_speech(sim, static_cast<Millis>(ssml::count_words(text)) * cfg_.per_word_ms);
}

void World::household_overhear(const acoustics::Utterance& u) {
    sim::RandomStream& rng = sim_.rng("household-reaction");
    for (const household::HouseholdMember& member : household_.members) {
        const ListenerClass cls = member.position_at(sim_.now());
        const double p = tables_.audibility.probability(cls, u.loudness);
        if (!rng.bernoulli(p)) continue;
        metrics_.payload_overhears++;
        sim_.log("reaction-event",
                 {{"member", member.member_id},
                  {"kind", to_string(household::ReactionEvent::Kind::HeardPayload)},
                  {"listener", acoustics::to_string(cls)}});
        const household::ReactionEvent follow =
            household::perceive(member, household::Stimulus::PayloadHeard, sim_.now(), rng);
        if (follow.kind == household::ReactionEvent::Kind::Ignored) continue;
        metrics_.detection_events++;
        sim_.schedule(sim_.now() + cfg_.reaction_delay_ms, "household-reaction",
                      {{"member", follow.member_id}, {"kind", to_string(follow.kind)}},
                      [this, follow](sim::Simulation&) { apply_reaction(follow); });
    }
}

void World::sight_check(household::Stimulus stimulus) {
    sim::RandomStream& rng = sim_.rng("household-reaction");
    for (const household::HouseholdMember& member : household_.members) {
        // The light ring is only visible from inside the room.
        if (member.position_at(sim_.now()) != ListenerClass::SameRoom) continue;
        const household::ReactionEvent event =
            household::perceive(member, stimulus, sim_.now(), rng);
        if (event.kind == household::ReactionEvent::Kind::Ignored) continue;
        metrics_.detection_events++;
        sim_.log("reaction-event",
                 {{"member", event.member_id}, {"kind", to_string(event.kind)}});
    }
}

bool World::defense_blocks(const acoustics::MicCapture& cap) {
    if (!defense_) return false;
    const bool self = acoustics::is_device_emitted(cap.source);
    if (defense_->suppression_enabled &&
        defenses::suppress_check(fingerprint_, cap, dev_.wakeword(), sim_.now()) ==
            defenses::SuppressDecision::Suppress) {
        sim_.log("wakeword-suppressed", {{"defense", "output-fingerprint"},
                                         {"source", acoustics::to_string(cap.source)}});
        metrics_.suppressed_commands++;
        return true;
    }
    if (defense_->direction_check_enabled &&
        defenses::direction_check(cap, opts_.placement, cfg_.open_self_direction_multi) ==
            defenses::Direction::MultiDirection) {
        sim_.log("wakeword-suppressed", {{"defense", "direction-check"},
                                         {"source", acoustics::to_string(cap.source)}});
        metrics_.suppressed_commands++;
        return true;
    }
    if (defense_->classifier) {
        const double p = self ? defense_->classifier->true_positive_rate
                              : defense_->classifier->false_positive_rate;
        if (sim_.rng("defense-classifier").bernoulli(p)) {
            sim_.log("wakeword-suppressed", {{"defense", "liveness-classifier"},
                                             {"source", acoustics::to_string(cap.source)}});
            metrics_.suppressed_commands++;
            if (!self) metrics_.false_suppressions++;
            return true;
        }
    }
    return false;
}

bool World::recognition_roll(const acoustics::Utterance& u) {
    if (u.command_id.empty()) {
        // Free-form speech has no measured reliability entry; the draw only
        // applies to cataloged commands.
        return true;
    }
    metrics_.self_issue_attempts[u.command_id]++;
    if (cooldown_.use(u.command_id, u.voice_profile, u.variant, sim_.now())) {
        sim_.log("self-issue-misrecognized",
                 {{"command_id", u.command_id}, {"reason", "sample worn out"}});
        return false;
    }
    const double p = acoustics::recognition_probability(
        tables_.recognition, u.command_id, u.voice_profile, opts_.placement, u.loudness,
        dev_.fvv_active(), dev_.ducking_active());
    const bool ok = sim_.rng("recognition").bernoulli(p);
    sim_.log(ok ? "self-issue-recognized" : "self-issue-misrecognized",
             {{"command_id", u.command_id}, {"probability", p}, {"variant", u.variant}});
    if (ok) metrics_.self_issue_recognized[u.command_id]++;
    return ok;
}

void World::record_arbitration(device::UserRequest request, bool vma_open) {
    const device::ArbitrationOutcome outcome = dev_.arbitrate(request, vma_open);
    metrics_.arbitration[to_string(outcome)]++;
    sim_.log("arbitration",
             {{"request", request == device::UserRequest::VoicePlayMusic ? "voice-play-music"
                                                                         : "connect-bluetooth"},
              {"vma_open", vma_open},
              {"outcome", to_string(outcome)}});
}

void World::record_human_outcome(const acoustics::Utterance& u, const UtteranceOutcome& out) {
    if (!u.has_wakeword && out.note == "no-wakeword") return;  // idle chatter, not a command
    Json entry;
    entry["text"] = u.text;
    entry["executed"] = out.executed;
    entry["note"] = out.note;
    metrics_.human_outcomes.push_back(std::move(entry));
}

void World::dispatch_text(const std::string& text, UtteranceOutcome& out) {
    const std::string normalized = skill::normalize_utterance(text);
    if (runtime_.session_open()) {
        const auto& attacker = dev_.attacker_stream();
        const auto spec = catalog_.match(normalized);
        if (spec && spec->action && spec->action->kind == BuiltinCommand::Kind::PlayMusic &&
            attacker && attacker->state != StreamState::Stopped &&
            (attacker->kind == StreamKind::RadioSkill ||
             attacker->kind == StreamKind::BluetoothAudio)) {
            record_arbitration(device::UserRequest::VoicePlayMusic, true);
        }
        runtime_.handle_text(sim_, text);
        out.executed = true;
        return;
    }
    const auto spec = catalog_.match(normalized);
    if (!spec) {
        sim_.log("command-not-understood", {{"text", text}});
        out.note = "unknown-command";
        return;
    }
    out.executed = true;
    sim_.log("command-dispatched", {{"command_id", spec->command_id}, {"text", spec->text}});
    if (spec->action) dev_.execute_builtin(sim_, *spec->action);
    if (!spec->reply.empty()) {
        sim_.log("device-reply", {{"text", spec->reply}});
        device_emission(sim_, spec->reply);
    }
}

UtteranceOutcome World::emit_utterance(const acoustics::Utterance& u) {
    UtteranceOutcome out;
    sim_.log("utterance", {{"text", u.text},
                           {"source", acoustics::to_string(u.source)},
                           {"has_wakeword", u.has_wakeword},
                           {"loudness", u.loudness},
                           {"voice_profile", u.voice_profile},
                           {"command_id", u.command_id},
                           {"variant", u.variant}});

    const bool self = acoustics::is_device_emitted(u.source);
    if (self) {
        // The speaker's own output is knowable to the device byte-for-byte;
        // the fingerprint sees it the instant it plays.
        fingerprint_.record(u.text, sim_.now());
        if (!u.command_id.empty()) household_overhear(u);
    } else if (u.has_wakeword) {
        metrics_.human_commands++;
    }

    acoustics::DeviceStateView view;
    view.mic_muted = dev_.mic_muted();
    view.ducking_active = dev_.ducking_active();
    view.duck_attenuation = cfg_.duck_attenuation;
    view.wakeword = dev_.wakeword();
    if (u.source == Source::RadioStream || u.source == Source::BluetoothStream) {
        const auto& attacker = dev_.attacker_stream();
        view.stream_paused = attacker && attacker->state == StreamState::Paused;
    } else if (u.source == Source::SelfSpeaker) {
        // An audio tag pauses itself the moment its own wakeword is heard,
        // cutting off whatever followed — unless full volume is forced.
        view.stream_paused = u.has_wakeword && !dev_.fvv_active();
    }

    acoustics::MicCapture cap;
    try {
        cap = acoustics::capture(u, view);
    } catch (const SimError& e) {
        if (e.code() != ErrorCode::MicMuted) throw;
        sim_.log("capture-muted", {{"text", u.text}});
        out.note = "mic-muted";
        if (u.source == Source::Human) record_human_outcome(u, out);
        return out;
    }
    out.captured = true;

    if (cap.heard_text.empty()) {
        sim_.log("capture-empty", {{"source", acoustics::to_string(cap.source)}});
        out.note = "inaudible";
        if (u.source == Source::Human) record_human_outcome(u, out);
        return out;
    }

    const bool has_wakeword = acoustics::starts_with_wakeword(cap.heard_text, dev_.wakeword());
    if (!has_wakeword) {
        const auto& session = runtime_.session();
        if (session && session->state == skill::Session::State::Listening) {
            // Follow-up inside the reprompt window; no wakeword needed.
            if (!self || recognition_roll(u)) {
                out.recognized = true;
                dispatch_text(cap.heard_text, out);
            } else {
                out.note = "not-recognized";
            }
        } else if (dev_.has_pending_confirmation(sim_.now())) {
            // The device just asked a yes/no question and is listening.
            if (!self || recognition_roll(u)) {
                out.recognized = true;
                dispatch_text(cap.heard_text, out);
            } else {
                out.note = "not-recognized";
            }
        } else {
            sim_.log("not-addressed", {{"text", cap.heard_text}});
            out.note = "no-wakeword";
        }
        if (u.source == Source::Human) record_human_outcome(u, out);
        return out;
    }

    // Defense stack runs before the wakeword has any side effect.
    if (defense_blocks(cap)) {
        out.note = "suppressed";
        if (u.source == Source::Human) record_human_outcome(u, out);
        return out;
    }
    out.wakeword_accepted = true;
    dev_.on_wakeword(sim_);

    const std::string rest =
        cap.wakeword_only ? "" : acoustics::strip_wakeword(cap.heard_text, dev_.wakeword());
    if (rest.empty()) {
        if (runtime_.session_open()) {
            runtime_.on_bare_wakeword(sim_);
        } else {
            sim_.log("wakeword-only", {{"source", acoustics::to_string(cap.source)}});
        }
        out.note = "wakeword-only";
        dev_.clear_ducking();
        if (u.source == Source::Human) record_human_outcome(u, out);
        return out;
    }

    if (self && !recognition_roll(u)) {
        out.note = "not-recognized";
        dev_.clear_ducking();
        return out;
    }
    out.recognized = true;
    dispatch_text(rest, out);
    dev_.clear_ducking();
    if (u.source == Source::Human) record_human_outcome(u, out);
    return out;
}

void World::attach_household(household::Household hh) {
    hh.validate();
    household_ = std::move(hh);
    for (const household::ScriptedAction& action : household_.actions) {
        sim_.schedule(action.at_ms, "household-action",
                      {{"member", action.member_id}, {"action", to_string(action.kind)}},
                      [this, action](sim::Simulation&) { apply_scripted(action); });
    }
}

UtteranceOutcome World::say(const std::string& member_id, const std::string& text) {
    acoustics::Utterance u;
    u.text = text;
    u.has_wakeword = acoustics::starts_with_wakeword(text, dev_.wakeword());
    u.source = Source::Human;
    if (const household::HouseholdMember* m = household_.member(member_id)) {
        u.room_id = acoustics::to_string(m->position_at(sim_.now()));
    }
    u.loudness = 5;
    return emit_utterance(u);
}

void World::apply_scripted(const household::ScriptedAction& action) {
    using Kind = household::ScriptedAction::Kind;
    switch (action.kind) {
    case Kind::OpenRadioSkill:
        radio_skill_open_ = true;
        sim_.log("radio-skill-opened", {{"member", action.member_id}});
        break;
    case Kind::PlayMusicVoice:
        say(action.member_id, dev_.wakeword() + " play music");
        break;
    case Kind::ConnectOwnBt: {
        const auto& attacker = dev_.attacker_stream();
        const bool attacker_active =
            attacker && attacker->state != StreamState::Stopped &&
            (attacker->kind == StreamKind::RadioSkill ||
             attacker->kind == StreamKind::BluetoothAudio);
        const bool radio = attacker_active && attacker->kind == StreamKind::RadioSkill;
        if (attacker_active) {
            const bool vma_open =
                runtime_.session_open() &&
                runtime_.session()->skill_id == vma::MaskAttackSkill::kSkillId;
            record_arbitration(device::UserRequest::ConnectBluetooth, vma_open);
        }
        if (!dev_.bluetooth_enabled()) dev_.enable_bluetooth(sim_);
        if (radio && attacker->state == StreamState::Playing) {
            // The incoming connection claims the speaker; the radio yields
            // but stays resumable.
            dev_.pause_stream(sim_, attacker->id);
        }
        const std::string device_id = action.bt_device_id;
        dev_.pair_bluetooth(sim_, device_id);
        if (dev_.bt_connected() && *dev_.bt_connected() == device_id) {
            dev_.start_stream(sim_, StreamKind::BluetoothAudio, Owner::User);
        } else {
            sim_.schedule(sim_.now() + cfg_.pairing_duration_ms, "own-bt-audio",
                          {{"device_id", device_id}}, [this, device_id](sim::Simulation& s) {
                              if (dev_.bt_connected() && *dev_.bt_connected() == device_id) {
                                  dev_.start_stream(s, StreamKind::BluetoothAudio, Owner::User);
                              }
                          });
        }
        break;
    }
    case Kind::DisconnectOwnBt:
        dev_.disconnect_bluetooth(sim_);
        break;
    case Kind::PressMicMute:
        dev_.toggle_mic_mute(sim_);
        break;
    case Kind::PressVolume:
        dev_.set_volume(sim_, action.volume);
        break;
    case Kind::Say:
        say(action.member_id, action.text);
        break;
    }
}

void World::apply_reaction(const household::ReactionEvent& event) {
    sim_.log("household-reaction-applied",
             {{"member", event.member_id}, {"kind", to_string(event.kind)}});
    switch (event.kind) {
    case household::ReactionEvent::Kind::RestartedDevice:
        restart_device();
        break;
    case household::ReactionEvent::Kind::MutedMic:
        if (!dev_.mic_muted()) dev_.toggle_mic_mute(sim_);
        break;
    case household::ReactionEvent::Kind::SaidStop:
        say(event.member_id, dev_.wakeword() + " stop");
        break;
    default:
        break;  // sightings have no device-side effect
    }
}

void World::restart_device() {
    metrics_.device_restarts++;
    dev_.power_cycle(sim_);
}

void World::finalize() {
    if (mask_open_since_) {
        metrics_.mask_session_open_ms += sim_.now() - *mask_open_since_;
        mask_open_since_.reset();
    }
    if (mask_) {
        metrics_.utterances_intercepted = static_cast<int>(mask_->store().size());
    }
}

} // namespace vasim::world

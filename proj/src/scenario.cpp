#include "vasim/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <utility>

namespace vasim::scenario {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw SimError(ErrorCode::ValidationError, path + ": " + msg);
}

std::string sub(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string idx(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

void expect_object(const Json& j, const std::string& path) {
    if (!j.is_object()) fail(path.empty() ? "scenario" : path, "expected an object");
}

void reject_unknown(const Json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) fail(sub(path, key), "unknown key");
    }
}

const Json& require(const Json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(sub(path, key), "missing required key");
    return j.at(key);
}

std::int64_t as_int(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
}

std::uint64_t as_uint(const Json& v, const std::string& path) {
    if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

std::string as_string(const Json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

bool as_bool(const Json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected a boolean");
    return v.get<bool>();
}

const Json& as_array(const Json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
}

/// Run a sub-parser whose own errors lack position context and pin them to
/// the field path, preserving the error code.
template <typename F>
auto at_path(const std::string& path, F&& f) {
    try {
        return std::forward<F>(f)();
    } catch (const SimError& e) {
        throw SimError(e.code(), path + ": " + e.what());
    } catch (const Json::exception& e) {
        throw SimError(ErrorCode::ValidationError, path + ": " + std::string(e.what()));
    }
}

SimConfig parse_config(const Json& j, const std::string& path) {
    expect_object(j, path);
    SimConfig cfg;
    for (const auto& [key, value] : j.items()) {
        const std::string p = sub(path, key);
        if (key == "cooldown_after") cfg.cooldown_after = int(as_int(value, p));
        else if (key == "cooldown_idle_reset_ms") cfg.cooldown_idle_reset_ms = as_int(value, p);
        else if (key == "score10_probability") cfg.score10_probability = as_number(value, p);
        else if (key == "break_policy_limit_ms") cfg.break_policy_limit_ms = as_int(value, p);
        else if (key == "output_speech_limit") cfg.output_speech_limit = int(as_int(value, p));
        else if (key == "per_word_ms") cfg.per_word_ms = as_int(value, p);
        else if (key == "audio_segment_ms") cfg.audio_segment_ms = as_int(value, p);
        else if (key == "pairing_duration_ms") cfg.pairing_duration_ms = as_int(value, p);
        else if (key == "confirm_window_ms") cfg.confirm_window_ms = as_int(value, p);
        else if (key == "duck_attenuation") cfg.duck_attenuation = int(as_int(value, p));
        else if (key == "sometimes_confirm_p") cfg.sometimes_confirm_p = as_number(value, p);
        else if (key == "reprompt_window_ms") cfg.reprompt_window_ms = as_int(value, p);
        else if (key == "oracle_latency_ms") cfg.oracle_latency_ms = as_int(value, p);
        else if (key == "reply_window_ms") cfg.reply_window_ms = as_int(value, p);
        else if (key == "reply_truncate_chars") cfg.reply_truncate_chars = std::size_t(as_uint(value, p));
        else if (key == "transcription_noise_p") cfg.transcription_noise_p = as_number(value, p);
        else if (key == "filler_reply") cfg.filler_reply = as_string(value, p);
        else if (key == "confirm_delay_ms") cfg.confirm_delay_ms = as_int(value, p);
        else if (key == "max_retries") cfg.max_retries = int(as_int(value, p));
        else if (key == "retry_delay_ms") cfg.retry_delay_ms = as_int(value, p);
        else if (key == "reaction_delay_ms") cfg.reaction_delay_ms = as_int(value, p);
        else if (key == "fingerprint_window_ms") cfg.fingerprint_window_ms = as_int(value, p);
        else if (key == "open_self_direction_multi") cfg.open_self_direction_multi = as_bool(value, p);
        else fail(p, "unknown key");
    }
    return cfg;
}

DeviceSpec parse_device(const Json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"volume", "wakeword", "bluetooth_enabled", "bt_pre_paired"});
    DeviceSpec dev;
    if (j.contains("volume")) dev.volume = int(as_int(j.at("volume"), sub(path, "volume")));
    if (dev.volume < 0 || dev.volume > 10) fail(sub(path, "volume"), "must be between 0 and 10");
    if (j.contains("wakeword")) dev.wakeword = as_string(j.at("wakeword"), sub(path, "wakeword"));
    if (dev.wakeword.empty()) fail(sub(path, "wakeword"), "must not be empty");
    if (j.contains("bluetooth_enabled")) {
        dev.bluetooth_enabled = as_bool(j.at("bluetooth_enabled"), sub(path, "bluetooth_enabled"));
    }
    if (j.contains("bt_pre_paired")) {
        const std::string p = sub(path, "bt_pre_paired");
        for (std::size_t i = 0; i < as_array(j.at("bt_pre_paired"), p).size(); ++i) {
            dev.bt_pre_paired.push_back(as_string(j.at("bt_pre_paired")[i], idx(p, i)));
        }
    }
    return dev;
}

household::ReactionProfile parse_profile(const Json& j, const std::string& path) {
    expect_object(j, path);
    household::ReactionProfile prof;
    for (const auto& [key, value] : j.items()) {
        const std::string p = sub(path, key);
        if (key == "p_perceive_malicious_on_hear") prof.p_perceive_malicious_on_hear = as_number(value, p);
        else if (key == "p_notice_blink") prof.p_notice_blink = as_number(value, p);
        else if (key == "p_notice_green") prof.p_notice_green = as_number(value, p);
        else if (key == "p_restart_on_suspicion") prof.p_restart_on_suspicion = as_number(value, p);
        else if (key == "p_say_stop") prof.p_say_stop = as_number(value, p);
        else fail(p, "unknown key");
    }
    return prof;
}

household::HouseholdMember parse_member(const Json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"member_id", "timeline", "profile"});
    household::HouseholdMember m;
    m.member_id = as_string(require(j, path, "member_id"), sub(path, "member_id"));
    const std::string tpath = sub(path, "timeline");
    for (std::size_t i = 0; i < as_array(require(j, path, "timeline"), tpath).size(); ++i) {
        const Json& row = j.at("timeline")[i];
        const std::string rpath = idx(tpath, i);
        expect_object(row, rpath);
        reject_unknown(row, rpath, {"from_ms", "listener"});
        household::PositionSpan span;
        span.from_ms = as_int(require(row, rpath, "from_ms"), sub(rpath, "from_ms"));
        const std::string lpath = sub(rpath, "listener");
        span.listener = at_path(lpath, [&] {
            return acoustics::listener_from_string(as_string(require(row, rpath, "listener"), lpath));
        });
        m.timeline.push_back(span);
    }
    if (j.contains("profile")) m.profile = parse_profile(j.at("profile"), sub(path, "profile"));
    return m;
}

household::ScriptedAction::Kind action_kind_from_string(const std::string& s,
                                                        const std::string& path) {
    using Kind = household::ScriptedAction::Kind;
    static constexpr Kind kAll[] = {
        Kind::OpenRadioSkill, Kind::PlayMusicVoice, Kind::ConnectOwnBt, Kind::DisconnectOwnBt,
        Kind::PressMicMute,   Kind::PressVolume,    Kind::Say,
    };
    for (Kind k : kAll) {
        if (s == household::to_string(k)) return k;
    }
    fail(path, "unknown action kind '" + s + "'");
}

household::ScriptedAction parse_action(const Json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"kind", "member_id", "at_ms", "volume", "text", "bt_device_id"});
    household::ScriptedAction a;
    a.kind = action_kind_from_string(as_string(require(j, path, "kind"), sub(path, "kind")),
                                     sub(path, "kind"));
    a.member_id = as_string(require(j, path, "member_id"), sub(path, "member_id"));
    a.at_ms = as_int(require(j, path, "at_ms"), sub(path, "at_ms"));
    if (a.at_ms < 0) fail(sub(path, "at_ms"), "must be non-negative");
    if (j.contains("volume")) a.volume = int(as_int(j.at("volume"), sub(path, "volume")));
    if (j.contains("text")) a.text = as_string(j.at("text"), sub(path, "text"));
    if (j.contains("bt_device_id")) {
        a.bt_device_id = as_string(j.at("bt_device_id"), sub(path, "bt_device_id"));
    }
    return a;
}

household::Household parse_household(const Json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"members", "actions"});
    household::Household hh;
    if (j.contains("members")) {
        const std::string mpath = sub(path, "members");
        for (std::size_t i = 0; i < as_array(j.at("members"), mpath).size(); ++i) {
            hh.members.push_back(parse_member(j.at("members")[i], idx(mpath, i)));
        }
    }
    if (j.contains("actions")) {
        const std::string apath = sub(path, "actions");
        for (std::size_t i = 0; i < as_array(j.at("actions"), apath).size(); ++i) {
            hh.actions.push_back(parse_action(j.at("actions")[i], idx(apath, i)));
        }
    }
    at_path(path, [&] { hh.validate(); return 0; });
    return hh;
}

MaskSkillSpec parse_mask(const Json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"backend", "qa_table", "tamper_rules"});
    MaskSkillSpec mask;
    mask.enabled = true;
    if (j.contains("backend") && j.contains("qa_table")) {
        fail(path, "give either an inline backend or a qa_table path, not both");
    }
    if (j.contains("backend")) {
        mask.backend = at_path(sub(path, "backend"), [&] {
            return vma::MockAssistantBackend::from_json(j.at("backend"));
        });
    } else if (j.contains("qa_table")) {
        const std::string file = as_string(j.at("qa_table"), sub(path, "qa_table"));
        mask.backend = at_path(sub(path, "qa_table"), [&] {
            return vma::MockAssistantBackend::load_file(file);
        });
    }
    if (j.contains("tamper_rules")) {
        const std::string tpath = sub(path, "tamper_rules");
        mask.tamper = at_path(tpath, [&] {
            return vma::TamperPolicy::from_json(as_array(j.at("tamper_rules"), tpath));
        });
    }
    return mask;
}

attacker::Payload parse_payload(const Json& j, const std::string& path,
                                const world::CommandCatalog& catalog) {
    expect_object(j, path);
    reject_unknown(j, path, {"payload_id", "command_id", "text", "profile_id", "with_wakeword"});
    attacker::Payload p;
    p.payload_id = as_string(require(j, path, "payload_id"), sub(path, "payload_id"));
    if (p.payload_id.empty()) fail(sub(path, "payload_id"), "must not be empty");
    p.text = as_string(require(j, path, "text"), sub(path, "text"));
    if (j.contains("command_id")) {
        p.command_id = as_string(j.at("command_id"), sub(path, "command_id"));
        if (!p.command_id.empty() && catalog.by_id(p.command_id) == nullptr) {
            throw SimError(ErrorCode::UnknownCommand, sub(path, "command_id") +
                                                          ": unknown command '" + p.command_id + "'");
        }
    }
    if (j.contains("profile_id")) {
        p.profile_id = as_string(j.at("profile_id"), sub(path, "profile_id"));
    }
    if (j.contains("with_wakeword")) {
        p.with_wakeword = as_bool(j.at("with_wakeword"), sub(path, "with_wakeword"));
    }
    return p;
}

attacker::PlanStep parse_step(const Json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"kind", "at_ms", "vector", "payload_id", "every_ms"});
    attacker::PlanStep s;
    const std::string kpath = sub(path, "kind");
    s.kind = at_path(kpath, [&] {
        return attacker::step_kind_from_string(as_string(require(j, path, "kind"), kpath));
    });
    s.at_ms = as_int(require(j, path, "at_ms"), sub(path, "at_ms"));
    if (s.at_ms < 0) fail(sub(path, "at_ms"), "must be non-negative");
    if (j.contains("vector")) {
        const std::string vpath = sub(path, "vector");
        s.vector = at_path(vpath, [&] {
            return attacker::vector_from_string(as_string(j.at("vector"), vpath));
        });
    }
    if (j.contains("payload_id")) {
        s.payload_id = as_string(j.at("payload_id"), sub(path, "payload_id"));
    }
    if (j.contains("every_ms")) s.every_ms = as_int(j.at("every_ms"), sub(path, "every_ms"));
    return s;
}

attacker::AttackPlan parse_attack(const Json& j, const std::string& path,
                                  const world::CommandCatalog& catalog) {
    expect_object(j, path);
    reject_unknown(j, path, {"bt_in_range", "bt_device_id", "payloads", "steps"});
    attacker::AttackPlan plan;
    if (j.contains("bt_in_range")) {
        plan.bt_in_range = as_bool(j.at("bt_in_range"), sub(path, "bt_in_range"));
    }
    if (j.contains("bt_device_id")) {
        plan.bt_device_id = as_string(j.at("bt_device_id"), sub(path, "bt_device_id"));
    }
    if (j.contains("payloads")) {
        const std::string ppath = sub(path, "payloads");
        for (std::size_t i = 0; i < as_array(j.at("payloads"), ppath).size(); ++i) {
            attacker::Payload p = parse_payload(j.at("payloads")[i], idx(ppath, i), catalog);
            if (plan.payloads.count(p.payload_id)) {
                fail(sub(idx(ppath, i), "payload_id"),
                     "duplicate payload id '" + p.payload_id + "'");
            }
            plan.payloads[p.payload_id] = std::move(p);
        }
    }
    if (j.contains("steps")) {
        const std::string spath = sub(path, "steps");
        for (std::size_t i = 0; i < as_array(j.at("steps"), spath).size(); ++i) {
            plan.steps.push_back(parse_step(j.at("steps")[i], idx(spath, i)));
        }
    }
    at_path(path, [&] { plan.validate(); return 0; });
    return plan;
}

} // namespace

ScenarioSpec ScenarioSpec::from_json(const Json& j) {
    expect_object(j, "");
    reject_unknown(j, "",
                   {"spec_version", "name", "seed", "horizon_ms", "placement", "render_mode",
                    "tables", "device", "config", "household", "mask_attack", "attack", "defenses"});
    ScenarioSpec spec;
    spec.spec_version = int(as_int(require(j, "", "spec_version"), "spec_version"));
    if (spec.spec_version != kSpecVersion) {
        fail("spec_version", "unsupported version " + std::to_string(spec.spec_version) +
                                 " (this build reads version " + std::to_string(kSpecVersion) + ")");
    }
    spec.name = as_string(require(j, "", "name"), "name");
    if (spec.name.empty() || spec.name.find('/') != std::string::npos) {
        fail("name", "must be a non-empty filename-safe token");
    }
    spec.seed = as_uint(require(j, "", "seed"), "seed");
    spec.horizon_ms = as_int(require(j, "", "horizon_ms"), "horizon_ms");
    if (spec.horizon_ms < 0) fail("horizon_ms", "must be non-negative");
    if (j.contains("placement")) {
        spec.placement = at_path("placement", [&] {
            return acoustics::placement_from_string(as_string(j.at("placement"), "placement"));
        });
    }
    if (j.contains("render_mode")) {
        spec.render_mode = at_path("render_mode", [&] {
            return ssml::render_mode_from_string(as_string(j.at("render_mode"), "render_mode"));
        });
    }
    if (j.contains("tables")) spec.tables_path = as_string(j.at("tables"), "tables");
    if (j.contains("device")) spec.device = parse_device(j.at("device"), "device");
    if (j.contains("config")) spec.config = parse_config(j.at("config"), "config");
    if (j.contains("household")) spec.household = parse_household(j.at("household"), "household");
    if (j.contains("mask_attack")) spec.mask = parse_mask(j.at("mask_attack"), "mask_attack");
    const world::CommandCatalog catalog = world::CommandCatalog::defaults();
    if (j.contains("attack")) spec.attack = parse_attack(j.at("attack"), "attack", catalog);
    if (j.contains("defenses")) {
        for (std::size_t i = 0; i < as_array(j.at("defenses"), "defenses").size(); ++i) {
            const std::string dpath = idx("defenses", i);
            spec.defenses.push_back(at_path(dpath, [&] {
                return defenses::DefenseConfig::from_json(j.at("defenses")[i]);
            }));
        }
    }
    return spec;
}

ScenarioSpec ScenarioSpec::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw SimError(ErrorCode::IoError, "cannot open scenario file: " + path);
    Json j;
    try {
        j = Json::parse(is);
    } catch (const Json::exception& e) {
        throw SimError(ErrorCode::ParseError, path + ": " + std::string(e.what()));
    }
    return from_json(j);
}

LiveRun::LiveRun(const ScenarioSpec& spec, const acoustics::Tables& tables,
                 std::optional<defenses::DefenseConfig> defense, std::string config_name)
    : config_name_(std::move(config_name)),
      horizon_(spec.horizon_ms),
      sim_(spec.seed),
      world_(sim_, spec.config, tables, {spec.placement, spec.render_mode}) {
    device::Device& dev = world_.dev();
    dev.set_wakeword(spec.device.wakeword);
    dev.preseed_bluetooth(spec.device.bluetooth_enabled,
                          {spec.device.bt_pre_paired.begin(), spec.device.bt_pre_paired.end()});
    if (spec.device.volume != dev.volume()) dev.set_volume(sim_, spec.device.volume);
    if (defense) world_.set_defense(std::move(*defense));
    if (spec.mask.enabled) world_.install_mask_skill(spec.mask.backend, spec.mask.tamper);
    world_.attach_household(spec.household);
    if (!spec.attack.steps.empty()) {
        attacker_.emplace(world_, spec.attack);
        attacker_->schedule();
    }
}

void LiveRun::finish() {
    sim_.run_until(horizon_);
    world_.finalize();
}

Json LiveRun::report() const {
    Json j;
    j["config"] = config_name_;
    j["events"] = sim_.log_lines().size();
    j["metrics"] = world_.metrics().to_json();
    if (world_.mask()) {
        Json records = Json::array();
        for (const auto& r : world_.mask()->store()) records.push_back(r.to_json());
        j["intercepted"] = std::move(records);
    }
    return j;
}

std::vector<std::unique_ptr<LiveRun>> run(const ScenarioSpec& spec,
                                          const acoustics::Tables& tables) {
    std::vector<std::unique_ptr<LiveRun>> runs;
    if (spec.defenses.empty()) {
        runs.push_back(std::make_unique<LiveRun>(spec, tables, std::nullopt, "baseline"));
    } else {
        for (const auto& d : spec.defenses) {
            runs.push_back(std::make_unique<LiveRun>(spec, tables, d, d.name));
        }
    }
    for (auto& r : runs) r->finish();
    return runs;
}

Json report(const ScenarioSpec& spec, const std::vector<std::unique_ptr<LiveRun>>& runs) {
    Json j;
    j["scenario"] = spec.name;
    j["spec_version"] = spec.spec_version;
    j["seed"] = spec.seed;
    j["horizon_ms"] = spec.horizon_ms;
    j["placement"] = acoustics::to_string(spec.placement);
    j["render_mode"] = ssml::to_string(spec.render_mode);
    Json entries = Json::array();
    for (const auto& r : runs) entries.push_back(r->report());
    j["runs"] = std::move(entries);
    return j;
}

std::vector<std::string> write_outputs(const ScenarioSpec& spec,
                                       const std::vector<std::unique_ptr<LiveRun>>& runs,
                                       const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw SimError(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());

    std::vector<std::string> written;
    for (const auto& r : runs) {
        const fs::path log_path =
            fs::path(out_dir) / (spec.name + "-" + r->config_name() + ".jsonl");
        std::ofstream os(log_path);
        if (!os) throw SimError(ErrorCode::IoError, "cannot write " + log_path.string());
        r->sim().dump_log(os);
        written.push_back(log_path.string());
    }
    const fs::path report_path = fs::path(out_dir) / (spec.name + "-report.json");
    std::ofstream os(report_path);
    if (!os) throw SimError(ErrorCode::IoError, "cannot write " + report_path.string());
    os << report(spec, runs).dump(2) << '\n';
    written.push_back(report_path.string());
    return written;
}

} // namespace vasim::scenario

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vasim/scenario.hpp"
#include "helpers.hpp"

using namespace vasim;
using scenario::ScenarioSpec;

namespace {

Json base_doc() {
    Json j;
    j["spec_version"] = 1;
    j["name"] = "probe";
    j["seed"] = 7;
    j["horizon_ms"] = 60000;
    Json payload;
    payload["payload_id"] = "probe";
    payload["command_id"] = "what-time";
    payload["text"] = "what time is it";
    Json establish;
    establish["kind"] = "EstablishVector";
    establish["at_ms"] = 0;
    establish["vector"] = "Bluetooth";
    Json issue;
    issue["kind"] = "SelfIssue";
    issue["at_ms"] = 30000;
    issue["vector"] = "Bluetooth";
    issue["payload_id"] = "probe";
    j["attack"]["bt_in_range"] = true;
    j["attack"]["payloads"] = Json::array({payload});
    j["attack"]["steps"] = Json::array({establish, issue});
    return j;
}

acoustics::Tables test_tables() {
    static acoustics::Tables t = acoustics::load_tables(repo_path("tables/paper-defaults.json"));
    return t;
}

void expect_error(const Json& doc, ErrorCode code, const std::string& needle) {
    try {
        ScenarioSpec::from_json(doc);
        FAIL("expected an error mentioning '" << needle << "'");
    } catch (const SimError& e) {
        CHECK(e.code() == code);
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
}

} // namespace

TEST_CASE("minimal scenario parses with defaults applied") {
    const ScenarioSpec spec = ScenarioSpec::from_json(base_doc());
    CHECK(spec.name == "probe");
    CHECK(spec.seed == 7);
    CHECK(spec.horizon_ms == 60000);
    CHECK(spec.placement == acoustics::Placement::Small);
    CHECK(spec.render_mode == ssml::RenderMode::Vulnerable);
    CHECK(spec.device.volume == 5);
    CHECK(spec.device.wakeword == "aria");
    CHECK_FALSE(spec.mask.enabled);
    CHECK(spec.defenses.empty());
    CHECK(spec.attack.steps.size() == 2);
    CHECK(spec.attack.payloads.count("probe") == 1);
}

TEST_CASE("full scenario round-trips every optional block") {
    Json j = base_doc();
    j["placement"] = "Open";
    j["render_mode"] = "Compliant";
    j["device"]["volume"] = 8;
    j["device"]["wakeword"] = "echo";
    j["device"]["bluetooth_enabled"] = true;
    j["device"]["bt_pre_paired"] = Json::array({"old-phone"});
    j["config"]["max_retries"] = 1;
    j["config"]["oracle_latency_ms"] = 2500;
    Json member;
    member["member_id"] = "pat";
    Json span;
    span["from_ms"] = 0;
    span["listener"] = "AdjacentWallDoor";
    member["timeline"] = Json::array({span});
    member["profile"]["p_notice_blink"] = 0.5;
    Json act;
    act["kind"] = "press-volume";
    act["member_id"] = "pat";
    act["at_ms"] = 1000;
    act["volume"] = 2;
    j["household"]["members"] = Json::array({member});
    j["household"]["actions"] = Json::array({act});
    Json entry;
    entry["text"] = "ping";
    entry["reply"] = "pong";
    entry["latency_ms"] = 9000;
    j["mask_attack"]["backend"]["entries"] = Json::array({entry});
    Json rule;
    rule["match"] = "pong";
    rule["action"] = "append-pin-request";
    j["mask_attack"]["tamper_rules"] = Json::array({rule});
    Json defense;
    defense["name"] = "fingerprint";
    defense["suppression_enabled"] = true;
    j["defenses"] = Json::array({defense});

    const ScenarioSpec spec = ScenarioSpec::from_json(j);
    CHECK(spec.placement == acoustics::Placement::Open);
    CHECK(spec.render_mode == ssml::RenderMode::Compliant);
    CHECK(spec.device.volume == 8);
    CHECK(spec.device.wakeword == "echo");
    CHECK(spec.device.bluetooth_enabled);
    CHECK(spec.device.bt_pre_paired == std::vector<std::string>{"old-phone"});
    CHECK(spec.config.max_retries == 1);
    CHECK(spec.config.oracle_latency_ms == 2500);
    CHECK(spec.household.members.size() == 1);
    CHECK(spec.household.members[0].profile.p_notice_blink == 0.5);
    CHECK(spec.household.actions[0].kind == household::ScriptedAction::Kind::PressVolume);
    CHECK(spec.household.actions[0].volume == 2);
    CHECK(spec.mask.enabled);
    CHECK(spec.mask.backend.qa_table.at("ping") == "pong");
    CHECK(spec.mask.backend.latency_overrides.at("ping") == 9000);
    CHECK(spec.mask.tamper.rules.size() == 1);
    CHECK(spec.defenses.size() == 1);
    CHECK(spec.defenses[0].suppression_enabled);
}

TEST_CASE("validation errors name the offending field") {
    Json j = base_doc();
    j["horizon_ms"] = -5;
    expect_error(j, ErrorCode::ValidationError, "horizon_ms: must be non-negative");

    j = base_doc();
    j["attack"]["payloads"][0]["command_id"] = "frobnicate";
    expect_error(j, ErrorCode::UnknownCommand,
                 "attack.payloads[0].command_id: unknown command 'frobnicate'");

    j = base_doc();
    j["surprise"] = true;
    expect_error(j, ErrorCode::ValidationError, "surprise: unknown key");

    j = base_doc();
    j["spec_version"] = 2;
    expect_error(j, ErrorCode::ValidationError, "unsupported version 2");

    j = base_doc();
    j.erase("name");
    expect_error(j, ErrorCode::ValidationError, "name: missing required key");

    j = base_doc();
    j["name"] = "a/b";
    expect_error(j, ErrorCode::ValidationError, "name");

    j = base_doc();
    j["seed"] = -3;
    expect_error(j, ErrorCode::ValidationError, "seed");

    j = base_doc();
    j["seed"] = "lucky";
    expect_error(j, ErrorCode::ValidationError, "seed");

    j = base_doc();
    j["device"]["volume"] = 11;
    expect_error(j, ErrorCode::ValidationError, "device.volume");

    j = base_doc();
    j["attack"]["steps"][1]["kind"] = "Sabotage";
    expect_error(j, ErrorCode::ValidationError, "attack.steps[1].kind");

    j = base_doc();
    j["attack"]["payloads"].push_back(j["attack"]["payloads"][0]);
    expect_error(j, ErrorCode::ValidationError, "duplicate payload id");

    j = base_doc();
    Json member;
    member["member_id"] = "pat";
    Json span;
    span["from_ms"] = 0;
    span["listener"] = "UpsideDown";
    member["timeline"] = Json::array({span});
    j["household"]["members"] = Json::array({member});
    expect_error(j, ErrorCode::ValidationError,
                 "household.members[0].timeline[0].listener");

    j = base_doc();
    j["household"]["actions"] = Json::array();
    Json act;
    act["kind"] = "moonwalk";
    act["member_id"] = "pat";
    act["at_ms"] = 0;
    j["household"]["actions"].push_back(act);
    expect_error(j, ErrorCode::ValidationError, "household.actions[0].kind");

    j = base_doc();
    j["mask_attack"]["backend"]["entries"] = Json::array();
    j["mask_attack"]["qa_table"] = "somewhere.json";
    expect_error(j, ErrorCode::ValidationError, "either an inline backend or a qa_table");
}

TEST_CASE("out-of-order attack steps are rejected through the same path") {
    Json j = base_doc();
    j["attack"]["steps"][0]["at_ms"] = 50000;  // now after the self-issue
    try {
        ScenarioSpec::from_json(j);
        FAIL("expected a plan-order error");
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::PlanOrderError);
        CHECK(std::string(e.what()).find("attack") != std::string::npos);
    }
}

TEST_CASE("load_file distinguishes io errors from parse errors") {
    try {
        ScenarioSpec::load_file("/nonexistent/nowhere.json");
        FAIL("expected an io error");
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::IoError);
    }

    const std::filesystem::path bad = std::filesystem::temp_directory_path() / "vasim-bad.json";
    std::ofstream(bad) << "{ this is not json";
    try {
        ScenarioSpec::load_file(bad.string());
        FAIL("expected a parse error");
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK(std::string(e.what()).find("vasim-bad.json") != std::string::npos);
    }
    std::filesystem::remove(bad);
}

TEST_CASE("shipped scenario files all validate") {
    int seen = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(repo_path("scenarios"))) {
        if (entry.path().extension() != ".json") continue;
        const ScenarioSpec spec = ScenarioSpec::load_file(entry.path().string());
        CHECK(spec.name == entry.path().stem().string());
        ++seen;
    }
    CHECK(seen >= 7);
}

TEST_CASE("a run produces one live run per defense config") {
    ScenarioSpec spec = ScenarioSpec::from_json(base_doc());
    spec.horizon_ms = 40000;
    auto runs = scenario::run(spec, test_tables());
    REQUIRE(runs.size() == 1);
    CHECK(runs[0]->config_name() == "baseline");
    CHECK(runs[0]->sim().now() == 40000);

    defenses::DefenseConfig off;
    off.name = "no-defense";
    defenses::DefenseConfig on;
    on.name = "fingerprint";
    on.suppression_enabled = true;
    spec.defenses = {off, on};
    runs = scenario::run(spec, test_tables());
    REQUIRE(runs.size() == 2);
    CHECK(runs[0]->config_name() == "no-defense");
    CHECK(runs[1]->config_name() == "fingerprint");
    CHECK(runs[0]->sim().seed() == runs[1]->sim().seed());
}

TEST_CASE("the report carries the scenario header and one entry per run") {
    ScenarioSpec spec = ScenarioSpec::from_json(base_doc());
    spec.horizon_ms = 40000;
    auto runs = scenario::run(spec, test_tables());
    const Json report = scenario::report(spec, runs);
    CHECK(report.at("scenario") == "probe");
    CHECK(report.at("spec_version") == 1);
    CHECK(report.at("seed") == 7);
    CHECK(report.at("horizon_ms") == 40000);
    CHECK(report.at("placement") == "Small");
    CHECK(report.at("render_mode") == "Vulnerable");
    REQUIRE(report.at("runs").size() == 1);
    const Json& entry = report.at("runs")[0];
    CHECK(entry.at("config") == "baseline");
    CHECK(entry.at("events") == runs[0]->sim().log_lines().size());
    CHECK(entry.at("metrics").contains("self_issue_recognized"));
}

TEST_CASE("write_outputs emits one log per config plus the report") {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "vasim-scenario-out";
    std::filesystem::remove_all(dir);

    ScenarioSpec spec = ScenarioSpec::from_json(base_doc());
    spec.horizon_ms = 40000;
    auto runs = scenario::run(spec, test_tables());
    const auto paths = scenario::write_outputs(spec, runs, dir.string());
    REQUIRE(paths.size() == 2);
    CHECK(std::filesystem::exists(paths[0]));
    CHECK(std::filesystem::exists(paths[1]));

    std::ifstream log(paths[0]);
    std::size_t lines = 0;
    std::string line;
    std::vector<std::string> read_back;
    while (std::getline(log, line)) {
        read_back.push_back(line);
        ++lines;
    }
    CHECK(lines == runs[0]->sim().log_lines().size());
    CHECK(read_back == runs[0]->sim().log_lines());

    std::ifstream report_in(paths[1]);
    const Json report = Json::parse(report_in);
    CHECK(report.at("scenario") == "probe");

    std::filesystem::remove_all(dir);
}

TEST_CASE("identical specs replay to identical bytes") {
    const ScenarioSpec spec = ScenarioSpec::from_json(base_doc());
    auto a = scenario::run(spec, test_tables());
    auto b = scenario::run(spec, test_tables());
    CHECK(a[0]->sim().log_lines() == b[0]->sim().log_lines());
    CHECK(scenario::report(spec, a).dump() == scenario::report(spec, b).dump());
}

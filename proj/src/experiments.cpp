#include "vasim/experiments.hpp"

#include <cstdio>
#include <random>

#include "vasim/attacker.hpp"
#include "vasim/scenario.hpp"
#include "vasim/ssml.hpp"
#include "vasim/vma.hpp"
#include "vasim/world.hpp"

namespace vasim::experiments {

namespace {

using acoustics::Placement;
using acoustics::Source;
using attacker::AttackPlan;
using attacker::Attacker;
using attacker::Payload;
using attacker::PlanStep;
using attacker::VectorKind;
using device::Owner;
using device::StreamKind;
using device::StreamState;

// Break-chain arithmetic shared by several exact checks: a maximal silence
// chain under the response character limit.
constexpr std::int64_t kSpeakWrapper = 15;         // "<speak></speak>"
constexpr std::int64_t kTagChars = 18;
constexpr std::int64_t kTagMs = 10000;
constexpr std::int64_t kChainTags = (8000 - kSpeakWrapper) / kTagChars;  // 443
constexpr std::int64_t kChainSilenceMs = kChainTags * kTagMs;            // 4,430,000
constexpr Millis kDayMs = 86'400'000;

CheckResult check(int criterion, std::string name, bool pass, std::string expected,
                  std::string observed) {
    CheckResult r;
    r.criterion = criterion;
    r.name = std::move(name);
    r.pass = pass;
    r.expected = std::move(expected);
    r.observed = std::move(observed);
    return r;
}

CheckResult check_eq(int criterion, std::string name, std::string expected,
                     std::string observed) {
    const bool pass = expected == observed;
    return check(criterion, std::move(name), pass, std::move(expected), std::move(observed));
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

int count_kind(const sim::Simulation& sim, const std::string& kind) {
    int n = 0;
    for (const auto& line : sim.log_lines()) {
        if (Json::parse(line).at("kind") == kind) ++n;
    }
    return n;
}

/// Time of the nth (1-based) event of `kind`, or -1 when absent.
Millis event_time(const sim::Simulation& sim, const std::string& kind, int nth = 1) {
    for (const auto& line : sim.log_lines()) {
        const Json j = Json::parse(line);
        if (j.at("kind") == kind && --nth == 0) return j.at("t").get<Millis>();
    }
    return -1;
}

Json last_payload(const sim::Simulation& sim, const std::string& kind) {
    Json found;
    for (const auto& line : sim.log_lines()) {
        const Json j = Json::parse(line);
        if (j.at("kind") == kind) found = j.at("payload");
    }
    return found;
}

struct Bench {
    sim::Simulation sim;
    world::World w;

    Bench(std::uint64_t seed, const acoustics::Tables& tables, SimConfig cfg = SimConfig{},
          world::World::Options opts = {})
        : sim(seed), w(sim, cfg, tables, opts) {}
};

/// Certainty config: perfect reliability scores recognize every time, so
/// checks about event times and counts are exact rather than 99%-likely.
SimConfig exact_cfg() {
    SimConfig cfg;
    cfg.score10_probability = 1.0;
    return cfg;
}

household::HouseholdMember quiet_member(const std::string& id) {
    household::HouseholdMember m;
    m.member_id = id;
    household::PositionSpan span;
    span.from_ms = 0;
    span.listener = acoustics::ListenerClass::SameRoom;
    m.timeline.push_back(span);
    m.profile.p_perceive_malicious_on_hear = 0.0;
    m.profile.p_notice_blink = 0.0;
    m.profile.p_notice_green = 0.0;
    return m;
}

household::ScriptedAction action(household::ScriptedAction::Kind kind, const std::string& member,
                                 Millis at) {
    household::ScriptedAction a;
    a.kind = kind;
    a.member_id = member;
    a.at_ms = at;
    return a;
}

PlanStep step(PlanStep::Kind kind, Millis at, VectorKind vector = VectorKind::Bluetooth,
              std::string payload_id = "", Millis every = 0) {
    PlanStep s;
    s.kind = kind;
    s.at_ms = at;
    s.vector = vector;
    s.payload_id = std::move(payload_id);
    s.every_ms = every;
    return s;
}

std::string stream_brief(const std::optional<device::AudioStream>& s) {
    if (!s) return "none";
    std::string out = device::to_string(s->kind);
    out += "/";
    out += device::to_string(s->state);
    if (s->muted) out += "/muted";
    return out;
}

std::string arb_brief(const std::map<std::string, int>& m) {
    if (m.empty()) return "none";
    std::string out;
    for (const auto& [k, v] : m) {
        if (!out.empty()) out += ",";
        out += k + "x" + std::to_string(v);
    }
    return out;
}

std::string cell_brief(Bench& b) {
    return arb_brief(b.w.metrics().arbitration) + " attacker=" +
           stream_brief(b.w.dev().attacker_stream()) + " user=" +
           stream_brief(b.w.dev().user_stream());
}

// ---------------------------------------------------------------- criterion 1

CheckResult cell_radio_playmusic(const acoustics::Tables& tables, bool vma_open) {
    Bench b(101, tables);
    b.w.set_radio_skill_open(true);
    AttackPlan plan;
    Attacker att(b.w, plan);
    att.establish_vector(VectorKind::RadioStation);
    if (vma_open) {
        b.w.install_mask_skill(vma::MockAssistantBackend{}, vma::TamperPolicy{});
        b.w.say("", "aria open mask attack");
    }
    b.sim.run_until(5000);
    b.w.say("", "aria play music");
    const std::string expected = vma_open ? "Playx1 attacker=RadioSkill/Playing user=none"
                                          : "Stopx1 attacker=none user=MusicSkill/Playing";
    return check_eq(1, vma_open ? "radio-vma-play-music" : "radio-play-music", expected,
                    cell_brief(b));
}

std::pair<CheckResult, CheckResult> cell_radio_connect_bt(const acoustics::Tables& tables,
                                                          bool vma_open) {
    Bench b(102, tables);
    b.w.set_radio_skill_open(true);
    household::Household hh;
    hh.members.push_back(quiet_member("pat"));
    auto connect = action(household::ScriptedAction::Kind::ConnectOwnBt, "pat", 5000);
    connect.bt_device_id = "user-phone";
    hh.actions.push_back(connect);
    hh.actions.push_back(action(household::ScriptedAction::Kind::DisconnectOwnBt, "pat", 60000));
    b.w.attach_household(hh);
    AttackPlan plan;
    Attacker att(b.w, plan);
    att.establish_vector(VectorKind::RadioStation);
    if (vma_open) {
        b.w.install_mask_skill(vma::MockAssistantBackend{}, vma::TamperPolicy{});
        b.w.say("", "aria open mask attack");
    }
    b.sim.run_until(10000);  // after the connect, before the pairing completes
    CheckResult cell = check_eq(1, vma_open ? "radio-vma-connect-bt" : "radio-connect-bt",
                                "Pausex1 attacker=RadioSkill/Paused user=none", cell_brief(b));

    // Footnote behavior: once the user's own phone disconnects, the paused
    // radio vector comes back on its own.
    b.sim.run_until(70000);
    CheckResult resume = check_eq(
        1, vma_open ? "radio-vma-resume-after-pause" : "radio-resume-after-pause",
        "attacker=RadioSkill/Playing resumes=1",
        "attacker=" + stream_brief(b.w.dev().attacker_stream()) +
            " resumes=" + std::to_string(count_kind(b.sim, "stream-resumed")));
    return {cell, resume};
}

std::pair<CheckResult, CheckResult> cell_bt_playmusic(const acoustics::Tables& tables,
                                                      bool vma_open) {
    Bench b(103, tables);
    AttackPlan plan;
    plan.bt_in_range = true;
    Attacker att(b.w, plan);
    att.establish_vector(VectorKind::Bluetooth);
    b.sim.run_until(25000);
    if (vma_open) {
        b.w.install_mask_skill(vma::MockAssistantBackend{}, vma::TamperPolicy{});
        b.w.say("", "aria open mask attack");
    }
    b.sim.run_until(30000);
    b.w.say("", "aria play music");
    const std::string expected =
        vma_open ? "Playx1 attacker=BluetoothAudio/Playing user=none"
                 : "Playx1 attacker=BluetoothAudio/Playing user=MusicSkill/Playing";
    CheckResult cell = check_eq(1, vma_open ? "bt-vma-play-music" : "bt-play-music", expected,
                                cell_brief(b));

    // Footnote behavior: both tracks play at once, until a stop-and-replay by
    // the attacker silences the user's music.
    CheckResult muted = check(1, "bt-simultaneous-then-replay-mutes", true, "", "");
    if (!vma_open) {
        b.sim.run_until(40000);
        att.restart_vector_stream();
        muted = check_eq(1, "bt-simultaneous-then-replay-mutes",
                         "attacker=BluetoothAudio/Playing user=MusicSkill/Playing/muted",
                         "attacker=" + stream_brief(b.w.dev().attacker_stream()) +
                             " user=" + stream_brief(b.w.dev().user_stream()));
    }
    return {cell, muted};
}

CheckResult cell_bt_connect_bt(const acoustics::Tables& tables, bool vma_open) {
    Bench b(104, tables);
    household::Household hh;
    hh.members.push_back(quiet_member("pat"));
    auto connect = action(household::ScriptedAction::Kind::ConnectOwnBt, "pat", 30000);
    connect.bt_device_id = "user-phone";
    hh.actions.push_back(connect);
    b.w.attach_household(hh);
    AttackPlan plan;
    plan.bt_in_range = true;
    Attacker att(b.w, plan);
    att.establish_vector(VectorKind::Bluetooth);
    b.sim.run_until(25000);
    if (vma_open) {
        b.w.install_mask_skill(vma::MockAssistantBackend{}, vma::TamperPolicy{});
        b.w.say("", "aria open mask attack");
    }
    b.sim.run_until(60000);  // user pairing done at 55000; attacker kicked off
    return check_eq(1, vma_open ? "bt-vma-connect-bt" : "bt-connect-bt",
                    "Stopx1 attacker=none user=BluetoothAudio/Playing", cell_brief(b));
}

// ---------------------------------------------------------------- criterion 6

std::vector<CheckResult> reserved_word_checks(const acoustics::Tables& tables) {
    std::vector<CheckResult> out;
    {
        Bench b(106, tables);
        b.w.set_radio_skill_open(true);
        b.w.install_mask_skill(vma::MockAssistantBackend{}, vma::TamperPolicy{});
        AttackPlan plan;
        Attacker att(b.w, plan);
        att.establish_vector(VectorKind::RadioStation);
        b.w.say("", "aria open mask attack");
        b.sim.run_until(5000);

        b.w.say("", "aria stop");
        out.push_back(check_eq(6, "radio-first-stop-closes-only-skill",
                               "session=closed attacker=RadioSkill/Playing",
                               std::string("session=") +
                                   (b.w.runtime().session_open() ? "open" : "closed") +
                                   " attacker=" + stream_brief(b.w.dev().attacker_stream())));
        b.sim.run_until(6000);
        b.w.say("", "aria stop");
        out.push_back(check_eq(6, "radio-second-stop-stops-stream",
                               "attacker=none disconnects=1",
                               "attacker=" + stream_brief(b.w.dev().attacker_stream()) +
                                   " disconnects=" +
                                   std::to_string(count_kind(b.sim, "radio-vector-disconnected"))));
    }
    {
        Bench b(107, tables);
        b.w.install_mask_skill(vma::MockAssistantBackend{}, vma::TamperPolicy{});
        AttackPlan plan;
        plan.bt_in_range = true;
        Attacker att(b.w, plan);
        att.establish_vector(VectorKind::Bluetooth);
        b.sim.run_until(25000);
        b.w.say("", "aria open mask attack");
        b.sim.run_until(30000);

        b.w.say("", "aria stop");
        const std::string first = std::string("session=") +
                                  (b.w.runtime().session_open() ? "open" : "closed") +
                                  " attacker=" + stream_brief(b.w.dev().attacker_stream());
        b.sim.run_until(31000);
        b.w.say("", "aria stop");
        out.push_back(check_eq(6, "bt-stop-never-reaches-stream",
                               "first: session=closed attacker=BluetoothAudio/Playing | "
                               "second: attacker=BluetoothAudio/Playing ignored=1",
                               "first: " + first + " | second: attacker=" +
                                   stream_brief(b.w.dev().attacker_stream()) + " ignored=" +
                                   std::to_string(
                                       count_kind(b.sim, "stop-ignored-for-bluetooth"))));
    }
    return out;
}

// ---------------------------------------------------------------- criterion 5

struct McEntry {
    const char* command;
    Placement placement;
    bool fvv;
    double expected;
};

CheckResult monte_carlo_entry(const acoustics::Tables& tables, const McEntry& entry,
                              std::uint64_t seed_base) {
    const world::CommandCatalog catalog = world::CommandCatalog::defaults();
    const world::CommandSpec* spec = catalog.by_id(entry.command);
    constexpr int kTrials = 10000;
    int hits = 0;
    for (int t = 0; t < kTrials; ++t) {
        sim::Simulation sim(seed_base + std::uint64_t(t));
        world::World w(sim, SimConfig{}, tables,
                       {entry.placement, ssml::RenderMode::Vulnerable});
        if (entry.fvv) {
            w.dev().start_stream(sim, StreamKind::BluetoothAudio, Owner::Attacker);
            device::BuiltinCommand off;
            off.kind = device::BuiltinCommand::Kind::TurnOff;
            w.dev().execute_builtin(sim, off);
        }
        acoustics::Utterance u;
        u.text = "aria " + spec->text;
        u.has_wakeword = true;
        u.source = entry.fvv ? Source::BluetoothStream : Source::RadioStream;
        u.loudness = 5;
        u.voice_profile = "profile-A";
        u.command_id = entry.command;
        if (w.emit_utterance(u).recognized) ++hits;
    }
    const double rate = double(hits) / kTrials;
    const bool ok = rate >= entry.expected - 0.02 && rate <= entry.expected + 0.02;
    const std::string name = std::string(entry.command) + (entry.fvv ? "-fvv" : "") +
                             (entry.placement == Placement::Open ? "-open" : "");
    return check(5, name, ok, fmt(entry.expected) + " within 0.02",
                 fmt(rate) + " (" + std::to_string(hits) + "/10000)");
}

} // namespace

// ------------------------------------------------------------------- results

Json CheckResult::to_json() const {
    Json j;
    j["criterion"] = criterion;
    j["name"] = name;
    j["pass"] = pass;
    j["expected"] = expected;
    j["observed"] = observed;
    return j;
}

bool ExperimentResult::pass() const {
    for (const auto& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

Json ExperimentResult::to_json() const {
    Json j;
    j["experiment"] = experiment;
    j["pass"] = pass();
    Json rows = Json::array();
    for (const auto& c : checks) rows.push_back(c.to_json());
    j["checks"] = std::move(rows);
    return j;
}

// --------------------------------------------------------------- experiments

ExperimentResult arbitration(const acoustics::Tables& tables) {
    ExperimentResult r;
    r.experiment = "arbitration";

    r.checks.push_back(cell_radio_playmusic(tables, false));
    auto [radio_connect, radio_resume] = cell_radio_connect_bt(tables, false);
    r.checks.push_back(radio_connect);
    r.checks.push_back(cell_radio_playmusic(tables, true));
    auto [radio_vma_connect, radio_vma_resume] = cell_radio_connect_bt(tables, true);
    r.checks.push_back(radio_vma_connect);
    auto [bt_play, bt_muted] = cell_bt_playmusic(tables, false);
    r.checks.push_back(bt_play);
    r.checks.push_back(cell_bt_connect_bt(tables, false));
    auto [bt_vma_play, bt_vma_muted] = cell_bt_playmusic(tables, true);
    (void)bt_vma_muted;
    r.checks.push_back(bt_vma_play);
    r.checks.push_back(cell_bt_connect_bt(tables, true));

    r.checks.push_back(radio_resume);
    r.checks.push_back(radio_vma_resume);
    r.checks.push_back(bt_muted);

    for (auto& c : reserved_word_checks(tables)) r.checks.push_back(std::move(c));
    return r;
}

ExperimentResult break_chain() {
    ExperimentResult r;
    r.experiment = "break-chain";

    const std::string chain = ssml::build_break_chain(100'000'000, 8000);
    const ssml::Document doc = ssml::parse(chain);
    std::int64_t tags = 0;
    for (const auto& n : doc.nodes) {
        if (n.kind == ssml::Node::Kind::Break) ++tags;
    }
    const ssml::PlaybackPlan full = ssml::render(doc, ssml::RenderMode::Vulnerable);
    r.checks.push_back(check(2, "chain-fills-the-budget",
                             tags == kChainTags && std::int64_t(chain.size()) <= 8000,
                             std::to_string(kChainTags) + " tags within 8000 chars",
                             std::to_string(tags) + " tags, " + std::to_string(chain.size()) +
                                 " chars"));
    r.checks.push_back(check(2, "chain-beats-the-bar",
                             tags > 400 && full.silence_ms() > 3'600'000,
                             ">400 tags and >3600000 ms silence",
                             std::to_string(tags) + " tags, " +
                                 std::to_string(full.silence_ms()) + " ms"));

    const ssml::PolicyVerdict verdict = ssml::check_policy(doc, 8000, 10000);
    bool flagged_silence = false;
    for (const auto& v : verdict.violations) {
        if (v.kind == ssml::Violation::Kind::ExcessiveBreakSilence) flagged_silence = true;
    }
    const ssml::PlaybackPlan clamped = ssml::render(doc, ssml::RenderMode::Compliant);
    r.checks.push_back(check(2, "policy-flags-and-clamps",
                             flagged_silence && clamped.silence_ms() == kTagMs,
                             "excessive-silence flagged; compliant render clamps to 10000 ms",
                             std::string(flagged_silence ? "flagged" : "not flagged") +
                                 "; compliant silence " +
                                 std::to_string(clamped.silence_ms()) + " ms"));

    // Brute-force oracle: for random character budgets, the builder must emit
    // exactly the number of tags that a level-by-level fit reaches.
    std::mt19937 rng(0xC0FFEE);
    std::uniform_int_distribution<std::int64_t> budget_dist(34, 12000);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t budget = budget_dist(rng);
        std::int64_t fit = 0;
        while (kSpeakWrapper + (fit + 1) * kTagChars <= budget) ++fit;
        const std::string c = ssml::build_break_chain(100'000'000, std::size_t(budget));
        const ssml::Document d = ssml::parse(c);
        std::int64_t got = 0;
        for (const auto& n : d.nodes) {
            if (n.kind == ssml::Node::Kind::Break) ++got;
        }
        const ssml::PlaybackPlan p = ssml::render(d, ssml::RenderMode::Vulnerable);
        if (got != fit || std::int64_t(c.size()) > budget || p.silence_ms() != fit * kTagMs) {
            ++mismatches;
        }
    }
    r.checks.push_back(check(2, "brute-force-oracle-1000-budgets", mismatches == 0,
                             "0 mismatches over 1000 random budgets",
                             std::to_string(mismatches) + " mismatches"));
    return r;
}

ExperimentResult persistence(const acoustics::Tables& tables) {
    ExperimentResult r;
    r.experiment = "persistence";

    const auto persistence_bench = [&](bool with_go_on) {
        auto b = std::make_unique<Bench>(301, tables, exact_cfg());
        b->w.install_mask_skill(vma::MockAssistantBackend{}, vma::TamperPolicy{});
        AttackPlan plan;
        plan.bt_in_range = true;
        plan.steps.push_back(step(PlanStep::Kind::EstablishVector, 0));
        plan.steps.push_back(step(PlanStep::Kind::ArmFvv, 30000));
        plan.steps.push_back(step(PlanStep::Kind::OpenMask, 31000));
        if (with_go_on) {
            plan.steps.push_back(
                step(PlanStep::Kind::GoOn, 40000, VectorKind::Bluetooth, "", 3'599'000));
        }
        auto att = std::make_unique<Attacker>(b->w, plan);
        att->schedule();
        b->sim.run_until(kDayMs);
        return std::pair(std::move(b), std::move(att));
    };

    {
        auto [b, att] = persistence_bench(true);
        const bool open = b->w.runtime().session_open();
        r.checks.push_back(check(3, "session-survives-a-full-day-with-go-on",
                                 open && count_kind(b->sim, "session-closed") == 0,
                                 "session open at 86400000 ms, 0 closes",
                                 std::string("session ") + (open ? "open" : "closed") + ", " +
                                     std::to_string(count_kind(b->sim, "session-closed")) +
                                     " closes"));
    }
    {
        auto [b, att] = persistence_bench(false);
        const Millis expected_close = 31000 + kChainSilenceMs + 8000;
        const Millis closed_at = event_time(b->sim, "session-closed");
        const Json payload = last_payload(b->sim, "session-closed");
        const std::string reason = payload.is_null() ? "none" : payload.value("reason", "none");
        r.checks.push_back(check(3, "without-go-on-the-session-dies-on-schedule",
                                 closed_at == expected_close && reason == "timeout",
                                 "closed at " + std::to_string(expected_close) + " ms (timeout)",
                                 "closed at " + std::to_string(closed_at) + " ms (" + reason +
                                     ")"));
    }

    // Interception: a scripted stream of questions into the open session.
    {
        Bench b(302, tables, exact_cfg());
        Json entries = Json::array();
        for (int n = 1; n <= 41; ++n) {
            if (n == 22) continue;  // utterance 22 repeats question 21
            Json e;
            e["text"] = "test question " + std::to_string(n);
            e["reply"] = "answer " + std::to_string(n);
            if (n == 21) e["latency_ms"] = 7000;
            entries.push_back(std::move(e));
        }
        Json backend_json;
        backend_json["entries"] = std::move(entries);
        b.w.install_mask_skill(vma::MockAssistantBackend::from_json(backend_json),
                               vma::TamperPolicy{});
        b.w.say("", "aria open mask attack");

        for (int n = 1; n <= 41; ++n) {
            b.sim.run_until(Millis(n) * 10000);
            const int q = (n == 22) ? 21 : n;
            b.w.say("", "aria test question " + std::to_string(q));
        }
        b.sim.run_until(500000);

        const auto& store = b.w.mask()->store();
        int stale_count = 0;
        for (const auto& rec : store) {
            if (rec.served_stale) ++stale_count;
        }
        r.checks.push_back(check(7, "every-utterance-lands-in-the-store",
                                 store.size() == 41 &&
                                     count_kind(b.sim, "oracle-reply-served") == 41,
                                 "41 records, 41 served replies",
                                 std::to_string(store.size()) + " records, " +
                                     std::to_string(count_kind(b.sim, "oracle-reply-served")) +
                                     " served replies"));

        // Served texts, in utterance order, straight from the log.
        std::map<int, std::pair<bool, std::string>> served;
        for (const auto& line : b.sim.log_lines()) {
            const Json j = Json::parse(line);
            if (j.at("kind") != "oracle-reply-served") continue;
            const Json& p = j.at("payload");
            served[p.at("utterance_id").get<int>()] = {p.at("stale").get<bool>(),
                                                       p.at("reply").get<std::string>()};
        }
        const auto& slow = served[21];
        const auto& repeat = served[22];
        r.checks.push_back(check(7, "slow-oracle-serves-the-previous-reply-stale",
                                 slow.first && slow.second == "answer 20",
                                 "stale=true reply='answer 20'",
                                 std::string("stale=") + (slow.first ? "true" : "false") +
                                     " reply='" + slow.second + "'"));
        r.checks.push_back(check(7, "repeating-the-question-gets-the-right-answer",
                                 repeat.second == "answer 21" && stale_count == 2,
                                 "reply='answer 21'; 2 stale serves in total",
                                 "reply='" + repeat.second + "'; " +
                                     std::to_string(stale_count) + " stale serves in total"));
    }
    return r;
}

ExperimentResult fvv_dominance(const acoustics::Tables& tables) {
    ExperimentResult r;
    r.experiment = "fvv-dominance";

    Bench b(401, tables);
    AttackPlan plan;
    plan.bt_in_range = true;
    Attacker att(b.w, plan);
    att.establish_vector(VectorKind::Bluetooth);
    b.sim.run_until(25000);
    att.arm_fvv();  // its own wakeword ducks once, then turn-off lifts volume

    const int ducks_after_arming = count_kind(b.sim, "ducking-engaged");
    Payload chat;
    chat.payload_id = "chat";
    chat.text = "hello";
    for (int i = 0; i < 3; ++i) {
        b.sim.run_until(b.sim.now() + 1000);
        att.self_issue(chat);
    }
    const int ducks_now = count_kind(b.sim, "ducking-engaged");
    const int at_full = count_kind(b.sim, "wakeword-at-full-volume");
    r.checks.push_back(check(4, "no-wakeword-ducks-while-forced-full-volume",
                             b.w.dev().fvv_active() && ducks_now == ducks_after_arming &&
                                 at_full >= 3,
                             "flag on, 0 new ducks, 3+ wakewords at full volume",
                             std::string("flag ") + (b.w.dev().fvv_active() ? "on" : "off") +
                                 ", " + std::to_string(ducks_now - ducks_after_arming) +
                                 " new ducks, " + std::to_string(at_full) +
                                 " wakewords at full volume"));

    b.sim.run_until(b.sim.now() + 1000);
    att.restart_vector_stream();
    const bool cleared = !b.w.dev().fvv_active() && count_kind(b.sim, "fvv-cleared") == 1;
    b.sim.run_until(b.sim.now() + 1000);
    att.self_issue(chat);
    const int ducks_after_restart = count_kind(b.sim, "ducking-engaged");
    r.checks.push_back(check(4, "stream-restart-clears-the-flag",
                             cleared && ducks_after_restart == ducks_after_arming + 1,
                             "flag off after restart; the next wakeword ducks again",
                             std::string("flag ") + (b.w.dev().fvv_active() ? "on" : "off") +
                                 ", fvv-cleared=" +
                                 std::to_string(count_kind(b.sim, "fvv-cleared")) +
                                 ", ducks now " +
                                 std::to_string(ducks_after_restart - ducks_after_arming)));

    // Re-arm and push a measured command through: the logged probability must
    // come from the full-volume column, whose normal-volume sibling is zero.
    b.sim.run_until(b.sim.now() + 1000);
    att.arm_fvv();
    b.sim.run_until(b.sim.now() + 1000);
    Payload call;
    call.payload_id = "call";
    call.command_id = "call-number";
    call.text = "call 555 0123";
    att.self_issue(call);
    Json roll = last_payload(b.sim, "self-issue-recognized");
    if (roll.is_null()) roll = last_payload(b.sim, "self-issue-misrecognized");
    const double pipeline_p = roll.is_null() ? -1.0 : roll.value("probability", -1.0);
    const double normal_p = acoustics::recognition_probability(
        tables.recognition, "call-number", "profile-A", Placement::Small, 5, false, false);
    r.checks.push_back(check(4, "recognition-reads-the-full-volume-column",
                             pipeline_p == 0.99 && normal_p == 0.0,
                             "pipeline p=0.9900, normal column p=0.0000",
                             "pipeline p=" + fmt(pipeline_p) + ", normal column p=" +
                                 fmt(normal_p)));

    const auto violations = tables.recognition.dominance_violations();
    std::string sample = violations.empty() ? "" : (" e.g. " + violations.front());
    r.checks.push_back(check(4, "full-volume-never-scores-below-normal",
                             violations.empty(), "0 violations across the shipped table",
                             std::to_string(violations.size()) + " violations" + sample));
    return r;
}

ExperimentResult impact_rates(const acoustics::Tables& tables) {
    ExperimentResult r;
    r.experiment = "impact-rates";
    const McEntry entries[] = {
        {"what-time", Placement::Open, false, 0.99},
        {"call-number", Placement::Small, true, 0.99},
        {"turn-off-light", Placement::Small, true, 0.93},
        {"call-attacker-number", Placement::Small, true, 0.73},
        {"open-mask-attack", Placement::Small, false, 0.60},
        {"calendar-edit", Placement::Small, true, 0.88},
    };
    std::uint64_t seed_base = 5'000'000;
    for (const auto& e : entries) {
        r.checks.push_back(monte_carlo_entry(tables, e, seed_base));
        seed_base += 1'000'003;
    }
    return r;
}

ExperimentResult defense_compare(const acoustics::Tables& tables) {
    ExperimentResult r;
    r.experiment = "defense-compare";

    scenario::ScenarioSpec spec;
    spec.name = "defense-compare";
    spec.seed = 4242;
    spec.horizon_ms = 120000;
    spec.config.max_retries = 0;
    spec.household.members.push_back(quiet_member("pat"));
    spec.household.actions.push_back(
        action(household::ScriptedAction::Kind::OpenRadioSkill, "pat", 0));
    auto say = [&](Millis at, const std::string& text) {
        auto a = action(household::ScriptedAction::Kind::Say, "pat", at);
        a.text = text;
        spec.household.actions.push_back(a);
    };
    say(20000, "aria what time is it");
    say(40000, "aria hello");
    say(60000, "aria what time is it");
    Payload hello;
    hello.payload_id = "hello";
    hello.command_id = "hello";
    hello.text = "hello";
    spec.attack.payloads["hello"] = hello;
    spec.attack.steps.push_back(
        step(PlanStep::Kind::EstablishVector, 1000, VectorKind::RadioStation));
    spec.attack.steps.push_back(
        step(PlanStep::Kind::SelfIssue, 10000, VectorKind::RadioStation, "hello"));
    spec.attack.steps.push_back(
        step(PlanStep::Kind::SelfIssue, 30000, VectorKind::RadioStation, "hello"));
    spec.attack.steps.push_back(
        step(PlanStep::Kind::SelfIssue, 50000, VectorKind::RadioStation, "hello"));
    defenses::DefenseConfig off;
    off.name = "no-defense";
    defenses::DefenseConfig fingerprint;
    fingerprint.name = "output-fingerprint";
    fingerprint.suppression_enabled = true;
    spec.defenses = {off, fingerprint};

    auto runs = scenario::run(spec, tables);
    const world::Metrics& base = runs[0]->world().metrics();
    const world::Metrics& defended = runs[1]->world().metrics();

    int base_hits = 0;
    for (const auto& [cmd, n] : base.self_issue_recognized) base_hits += n;
    int defended_hits = 0;
    for (const auto& [cmd, n] : defended.self_issue_recognized) defended_hits += n;
    r.checks.push_back(check(8, "suppression-stops-every-self-issued-command",
                             defended_hits == 0 && defended.suppressed_commands == 3 &&
                                 base_hits > 0,
                             "0 recognized, 3 suppressed (baseline recognizes some)",
                             std::to_string(defended_hits) + " recognized, " +
                                 std::to_string(defended.suppressed_commands) +
                                 " suppressed (baseline recognized " +
                                 std::to_string(base_hits) + ")"));

    const bool same_human = base.human_outcomes == defended.human_outcomes;
    r.checks.push_back(check(8, "humans-cannot-tell-the-defense-is-on",
                             same_human && defended.false_suppressions == 0 &&
                                 base.human_outcomes.size() == 3,
                             "3 human commands, outcomes identical, 0 false suppressions",
                             std::to_string(defended.human_outcomes.size()) +
                                 " human commands, outcomes " +
                                 (same_human ? "identical" : "diverged") + ", " +
                                 std::to_string(defended.false_suppressions) +
                                 " false suppressions"));

    // Same spec, fresh engines: the reports and logs must not drift a byte.
    auto rerun = scenario::run(spec, tables);
    const bool report_same = scenario::report(spec, runs).dump(2) ==
                             scenario::report(spec, rerun).dump(2);
    bool logs_same = true;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i]->sim().log_lines() != rerun[i]->sim().log_lines()) logs_same = false;
    }
    r.checks.push_back(check(9, "identical-specs-produce-identical-bytes",
                             report_same && logs_same, "reports and logs byte-identical",
                             std::string("reports ") + (report_same ? "identical" : "diverged") +
                                 ", logs " + (logs_same ? "identical" : "diverged")));
    return r;
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> kNames = {
        "arbitration", "break-chain", "persistence", "fvv-dominance",
        "impact-rates", "defense-compare",
    };
    return kNames;
}

ExperimentResult run_experiment(const std::string& name, const acoustics::Tables& tables) {
    if (name == "arbitration") return arbitration(tables);
    if (name == "break-chain") return break_chain();
    if (name == "persistence") return persistence(tables);
    if (name == "fvv-dominance") return fvv_dominance(tables);
    if (name == "impact-rates") return impact_rates(tables);
    if (name == "defense-compare") return defense_compare(tables);
    throw SimError(ErrorCode::ValidationError,
                   "unknown experiment '" + name + "'; expected one of: arbitration, "
                   "break-chain, persistence, fvv-dominance, impact-rates, defense-compare");
}

std::vector<ExperimentResult> run_all(const acoustics::Tables& tables) {
    std::vector<ExperimentResult> out;
    for (const auto& name : experiment_names()) out.push_back(run_experiment(name, tables));
    return out;
}

} // namespace vasim::experiments

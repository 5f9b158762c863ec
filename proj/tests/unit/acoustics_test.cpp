#include <doctest.h>

#include "helpers.hpp"
#include "vasim/acoustics.hpp"

using namespace vasim;
using namespace vasim::acoustics;

namespace {

const Tables& shipped() {
    static Tables t = load_tables(repo_path("tables/paper-defaults.json"));
    return t;
}

} // namespace

TEST_CASE("recognition probabilities match the measured scores") {
    const RecognitionTable& t = shipped().recognition;
    CHECK(recognition_probability(t, "what-time", "profile-A", Placement::Open, 5, false, true) ==
          0.99);
    CHECK(recognition_probability(t, "call-number", "profile-A", Placement::Open, 5, false, true) ==
          0.0);
    CHECK(recognition_probability(t, "call-number", "profile-A", Placement::Small, 5, true, false) ==
          0.99);
    // Mid-scale scores map to score/10.
    CHECK(t.probability("open-mask-attack", "profile-A", Placement::Small, 5, false) == 0.6);
    CHECK(t.probability("turn-off-light", "profile-E", Placement::Open, 5, false) == 0.6);
    CHECK(t.probability("what-time", "profile-I", Placement::Wall, 5, false) == 0.7);
}

TEST_CASE("fractional impact scores carry measured rates") {
    const RecognitionTable& t = shipped().recognition;
    CHECK(t.probability("turn-off-light", "profile-A", Placement::Small, 5, true) == doctest::Approx(0.93));
    CHECK(t.probability("call-attacker-number", "profile-A", Placement::Small, 5, true) == doctest::Approx(0.73));
    CHECK(t.probability("buy-item", "profile-A", Placement::Small, 5, true) == 0.99);
    CHECK(t.probability("calendar-edit", "profile-A", Placement::Small, 5, true) == doctest::Approx(0.88));
}

TEST_CASE("volume lookups snap to the nearest measured bucket") {
    const RecognitionTable& t = shipped().recognition;
    // Only volume 5 is measured for this command, so every volume uses it.
    CHECK(t.probability("hello", "profile-A", Placement::Open, 2, false) == 0.99);
    CHECK(t.probability("hello", "profile-A", Placement::Open, 9, false) == 0.99);
    // The volume sweep lists 1..6; 6 covers everything above it.
    CHECK(t.probability("what-time", "profile-B", Placement::Small, 10, false) ==
          t.probability("what-time", "profile-B", Placement::Small, 6, false));
    CHECK(t.probability("what-time", "profile-A", Placement::Open, 0, false) ==
          t.probability("what-time", "profile-A", Placement::Open, 1, false));
    CHECK(t.probability("what-time", "profile-A", Placement::Open, 1, false) == 0.1);
    CHECK(t.probability("what-time", "profile-A", Placement::Open, 2, false) == 0.2);
}

TEST_CASE("equidistant volumes resolve to the lower bucket") {
    Json rows = Json::array();
    rows.push_back({{"command", "x"}, {"profile", "p"}, {"placement", "Open"},
                    {"volume", 2}, {"fvv", false}, {"score", 4}});
    rows.push_back({{"command", "x"}, {"profile", "p"}, {"placement", "Open"},
                    {"volume", 4}, {"fvv", false}, {"score", 8}});
    const RecognitionTable t = RecognitionTable::from_json(rows);
    CHECK(t.score("x", "p", Placement::Open, 3, false) == 4);
    CHECK(t.score("x", "p", Placement::Open, 4, false) == 8);
    CHECK(t.score("x", "p", Placement::Open, 10, false) == 8);
}

TEST_CASE("a key measured in one column borrows the other") {
    const RecognitionTable& t = shipped().recognition;
    // Measured without forced full volume only.
    CHECK(t.probability("hello", "profile-A", Placement::Open, 5, true) ==
          t.probability("hello", "profile-A", Placement::Open, 5, false));
    // Measured at forced full volume only.
    CHECK(t.probability("buy-item", "profile-A", Placement::Open, 5, false) ==
          t.probability("buy-item", "profile-A", Placement::Open, 5, true));
}

TEST_CASE("full volume never scores below normal volume") {
    const RecognitionTable& t = shipped().recognition;
    CHECK(t.dominance_violations().empty());

    const char* commands[] = {"wakeword", "hello", "what-time", "turn-off-light",
                              "open-mask-attack", "call-mom", "call-number",
                              "call-attacker-number", "buy-item", "calendar-edit"};
    const char* profiles[] = {"profile-A", "profile-B", "profile-C", "profile-D", "profile-E",
                              "profile-F", "profile-G", "profile-H", "profile-I", "profile-J"};
    int compared = 0;
    for (const char* cmd : commands) {
        for (const char* prof : profiles) {
            for (Placement plc : {Placement::Open, Placement::Wall, Placement::Small}) {
                for (int vol = 0; vol <= 10; ++vol) {
                    double with = 0.0, without = 0.0;
                    try {
                        with = t.probability(cmd, prof, plc, vol, true);
                        without = t.probability(cmd, prof, plc, vol, false);
                    } catch (const SimError&) {
                        continue;  // key never measured for this profile
                    }
                    CHECK(with >= without);
                    ++compared;
                }
            }
        }
    }
    CHECK(compared > 1000);
}

TEST_CASE("unknown keys fail loudly") {
    const RecognitionTable& t = shipped().recognition;
    try {
        t.probability("frobnicate", "profile-A", Placement::Open, 5, false);
        FAIL("expected UnknownCommand");
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::UnknownCommand);
    }
    CHECK_THROWS_AS(t.probability("hello", "profile-Z", Placement::Open, 5, false), SimError);
}

TEST_CASE("score endpoints map to pinned probabilities") {
    RecognitionTable t = shipped().recognition;
    CHECK(t.probability("call-number", "profile-I", Placement::Small, 5, false) == 0.0);
    CHECK(t.probability("call-number", "profile-I", Placement::Wall, 5, true) == 0.1);
    t.set_score10_probability(0.97);
    CHECK(t.probability("what-time", "profile-A", Placement::Open, 5, false) == 0.97);
}

TEST_CASE("default audibility model matches the survey") {
    const AudibilityModel m = AudibilityModel::defaults();
    CHECK(m.probability(ListenerClass::SameRoom, 5) == 1.0);
    CHECK(m.probability(ListenerClass::AdjacentWall, 5) == 1.0);
    CHECK(m.probability(ListenerClass::AdjacentWallDoor, 3) == 0.66);
    CHECK(m.probability(ListenerClass::NonAdjacent, 6) == 0.0);

    // Closer listener classes never hear less.
    const AudibilityModel& shipped_model = shipped().audibility;
    for (int vol = 0; vol <= 10; ++vol) {
        const double same = shipped_model.probability(ListenerClass::SameRoom, vol);
        const double wall = shipped_model.probability(ListenerClass::AdjacentWall, vol);
        const double door = shipped_model.probability(ListenerClass::AdjacentWallDoor, vol);
        const double far = shipped_model.probability(ListenerClass::NonAdjacent, vol);
        CHECK(same >= wall);
        CHECK(wall >= door);
        CHECK(door >= far);
    }
}

TEST_CASE("audibility rules honor their volume floor in order") {
    AudibilityModel m;
    m.rules = {{ListenerClass::AdjacentWall, 4, 0.9}, {ListenerClass::AdjacentWall, 0, 0.2}};
    CHECK(m.probability(ListenerClass::AdjacentWall, 6) == 0.9);
    CHECK(m.probability(ListenerClass::AdjacentWall, 3) == 0.2);
    CHECK(m.probability(ListenerClass::SameRoom, 5) == 0.0);
}

TEST_CASE("a worn sample fails until a pitch edit or idle time") {
    CooldownTracker cd(5, 180000);
    for (int i = 0; i < 5; ++i) {
        CHECK_FALSE(cd.use("what-time", "profile-A", 0, 1000 * i));
    }
    CHECK(cd.use("what-time", "profile-A", 0, 6000));
    CHECK(cd.use("what-time", "profile-A", 0, 7000));

    // Pitch edit: a new variant restores the sample on the spot.
    CHECK_FALSE(cd.use("what-time", "profile-A", 1, 8000));

    // Wear the new variant out, then rest it for the idle window.
    Millis t = 9000;
    for (int i = 0; i < 5; ++i) cd.use("what-time", "profile-A", 1, t += 1000);
    CHECK(cd.use("what-time", "profile-A", 1, t += 1000));
    CHECK_FALSE(cd.use("what-time", "profile-A", 1, t + 180000));

    // Other keys are untouched throughout.
    CHECK_FALSE(cd.use("hello", "profile-A", 0, 1));
}

TEST_CASE("cooldown tracking is per command and profile") {
    CooldownTracker cd(2, 1000000);
    CHECK_FALSE(cd.use("a", "p", 0, 0));
    CHECK_FALSE(cd.use("a", "q", 0, 1));
    CHECK_FALSE(cd.use("a", "p", 0, 2));
    CHECK(cd.use("a", "p", 0, 3));
    CHECK_FALSE(cd.use("a", "q", 0, 4));
}

TEST_CASE("microphone capture follows the stream state") {
    Utterance u;
    u.text = "aria what time is it";
    u.has_wakeword = true;
    u.source = Source::SelfSpeaker;
    u.loudness = 5;

    DeviceStateView view;
    view.wakeword = "aria";

    SUBCASE("normal playback captures the full text") {
        const MicCapture cap = capture(u, view);
        CHECK(cap.heard_text == u.text);
        CHECK(cap.effective_loudness == 5);
        CHECK_FALSE(cap.wakeword_only);
    }
    SUBCASE("a paused carrier stream leaves only the wakeword fragment") {
        view.stream_paused = true;
        const MicCapture cap = capture(u, view);
        CHECK(cap.heard_text == "aria");
        CHECK(cap.wakeword_only);
    }
    SUBCASE("a paused stream without a wakeword yields nothing") {
        view.stream_paused = true;
        u.has_wakeword = false;
        u.text = "what time is it";
        CHECK(capture(u, view).heard_text.empty());
    }
    SUBCASE("human speech is never fragmented by stream state") {
        view.stream_paused = true;
        u.source = Source::Human;
        CHECK(capture(u, view).heard_text == u.text);
    }
    SUBCASE("ducking lowers the heard loudness") {
        view.ducking_active = true;
        CHECK(capture(u, view).effective_loudness == 2);
    }
    SUBCASE("a muted microphone hears nothing at all") {
        view.mic_muted = true;
        try {
            capture(u, view);
            FAIL("expected MicMuted");
        } catch (const SimError& e) {
            CHECK(e.code() == ErrorCode::MicMuted);
        }
    }
}

TEST_CASE("wakeword prefix detection is token aware") {
    CHECK(starts_with_wakeword("aria what time is it", "aria"));
    CHECK(starts_with_wakeword("Aria, stop", "aria"));
    CHECK(starts_with_wakeword("aria", "aria"));
    CHECK_FALSE(starts_with_wakeword("ariana grande", "aria"));
    CHECK_FALSE(starts_with_wakeword("hey aria", "aria"));
    CHECK_FALSE(starts_with_wakeword("", "aria"));

    CHECK(strip_wakeword("aria what time is it", "aria") == "what time is it");
    CHECK(strip_wakeword("Aria, stop", "aria") == "stop");
    CHECK(strip_wakeword("aria", "aria").empty());
    CHECK(strip_wakeword("no prefix here", "aria") == "no prefix here");
}

TEST_CASE("the shipped table loads completely") {
    const RecognitionTable& t = shipped().recognition;
    CHECK(t.size() == 273);
    CHECK(t.has_command("open-mask-attack"));
    CHECK_FALSE(t.has_command("open-sesame"));
}

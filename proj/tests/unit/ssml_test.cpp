#include <doctest.h>

#include <limits>

#include "helpers.hpp"
#include "vasim/sim/random.hpp"
#include "vasim/ssml.hpp"

using namespace vasim;
using namespace vasim::ssml;

TEST_CASE("parse handles text plus a quoted break") {
    const Document doc = parse(R"(<speak>hi<break time="10s"/></speak>)");
    REQUIRE(doc.nodes.size() == 2);
    CHECK(doc.nodes[0] == Node::make_text("hi"));
    CHECK(doc.nodes[1] == Node::make_break(10000));
    CHECK(doc.source_length == 36);
}

TEST_CASE("parse keeps consecutive breaks as separate nodes") {
    const Document doc = parse(R"(<speak><break time="10s"/><break time="10s"/></speak>)");
    REQUIRE(doc.nodes.size() == 2);
    CHECK(doc.nodes[0] == Node::make_break(10000));
    CHECK(doc.nodes[1] == Node::make_break(10000));
}

TEST_CASE("parse accepts unquoted durations and ms units") {
    const Document a = parse("<speak><break time=10s /></speak>");
    REQUIRE(a.nodes.size() == 1);
    CHECK(a.nodes[0].break_ms == 10000);

    const Document b = parse(R"(<speak><break time="700ms"/></speak>)");
    CHECK(b.nodes[0].break_ms == 700);
}

TEST_CASE("parse reads audio sources") {
    const Document doc = parse(R"(<speak><audio src="soundlib://rain/loop1"/>ok</speak>)");
    REQUIRE(doc.nodes.size() == 2);
    CHECK(doc.nodes[0] == Node::make_audio("soundlib://rain/loop1"));
    CHECK(doc.nodes[1] == Node::make_text("ok"));
}

TEST_CASE("parse rejects malformed markup") {
    CHECK_THROWS_AS(parse(R"(<speak><break time="-1s"/></speak>)"), ParseError);
    CHECK_THROWS_AS(parse(R"(<speak><break time="0s"/></speak>)"), ParseError);
    CHECK_THROWS_AS(parse(R"(<speak><break time="2min"/></speak>)"), ParseError);
    CHECK_THROWS_AS(parse(R"(<speak><break/></speak>)"), ParseError);
    CHECK_THROWS_AS(parse("<speak>hello"), ParseError);
    CHECK_THROWS_AS(parse(R"(<speak><prosody rate="x">hi</prosody></speak>)"), ParseError);
    CHECK_THROWS_AS(parse("no root at all"), ParseError);
    CHECK_THROWS_AS(parse("<speak>hi</speak>trailing"), ParseError);
    CHECK_THROWS_AS(parse(R"(<speak><break time="1s" time="2s"/></speak>)"), ParseError);
    CHECK_THROWS_AS(parse(R"(<speak><break time="1s" волume="2"/></speak>)"), ParseError);
    CHECK_THROWS_AS(parse(R"(<speak><audio src="x" loop="1"/></speak>)"), ParseError);
    CHECK_THROWS_AS(parse(R"(<speak><break time="1s"></speak>)"), ParseError);

    try {
        parse("<speak>hi<oops/></speak>");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 9);
        CHECK(e.code() == ErrorCode::ParseError);
    }
}

TEST_CASE("single boundary break is compliant") {
    const Document doc = parse(R"(<speak><break time="10s"/></speak>)");
    CHECK(check_policy(doc).compliant());
}

TEST_CASE("consecutive breaks summing past the limit are flagged") {
    const Document doc = parse(R"(<speak><break time="6s"/><break time="6s"/></speak>)");
    const PolicyVerdict verdict = check_policy(doc);
    REQUIRE(verdict.violations.size() == 1);
    CHECK(verdict.violations[0] ==
          Violation{Violation::Kind::ExcessiveBreakSilence, 12000});
}

TEST_CASE("text between breaks starts a fresh run") {
    const Document doc = parse(read_file(repo_path("fixtures/ssml/compliant_split_runs.xml")));
    CHECK(check_policy(doc).compliant());
}

TEST_CASE("a 444-tag chain blows the output budget") {
    const Document doc = parse(read_file(repo_path("fixtures/ssml/violating_oversize.xml")));
    CHECK(doc.source_length == 8007);
    const PolicyVerdict verdict = check_policy(doc);
    bool oversize = false;
    for (const auto& v : verdict.violations) {
        if (v.kind == Violation::Kind::OversizeOutputSpeech) {
            oversize = true;
            CHECK(v.amount == 8007);
        }
    }
    CHECK(oversize);
}

TEST_CASE("vulnerable rendering keeps over an hour of silence") {
    const Document doc = parse(read_file(repo_path("fixtures/ssml/violating_break_chain_420.xml")));
    REQUIRE(doc.nodes.size() == 420);
    const PlaybackPlan vuln = render(doc, RenderMode::Vulnerable);
    CHECK(vuln.silence_ms() == 4200000);
    CHECK(vuln.total_ms == 4200000);
    CHECK(vuln.silence_ms() > 3600000);

    const PlaybackPlan safe = render(doc, RenderMode::Compliant);
    CHECK(safe.silence_ms() == 10000);
}

TEST_CASE("plain text renders to a single timed speech segment") {
    const Document doc = parse("<speak>ok</speak>");
    for (const RenderMode mode : {RenderMode::Compliant, RenderMode::Vulnerable}) {
        const PlaybackPlan plan = render(doc, mode);
        REQUIRE(plan.segments.size() == 1);
        CHECK(plan.segments[0].kind == Segment::Kind::Speech);
        CHECK(plan.segments[0].ms == 400);
        CHECK(plan.silence_ms() == 0);
    }
}

TEST_CASE("audio segments pause on wakeword and carry the configured length") {
    const Document doc = parse(read_file(repo_path("fixtures/ssml/compliant_audio.xml")));
    const PlaybackPlan plan = render(doc, RenderMode::Compliant);
    REQUIRE(plan.segments.size() == 2);
    CHECK(plan.segments[0].kind == Segment::Kind::ExternalAudio);
    CHECK(plan.segments[0].pause_on_wakeword);
    CHECK(plan.segments[0].ms == 60000);
    CHECK(plan.segments[1].ms == 2 * 400);
    CHECK(plan.total_ms == 60800);
}

TEST_CASE("break chain hits an exact hour with room to spare") {
    const std::string markup = build_break_chain(3600000, 8000);
    const Document doc = parse(markup);
    CHECK(doc.nodes.size() == 360);
    CHECK(render(doc, RenderMode::Vulnerable).silence_ms() == 3600000);
    CHECK(markup.size() == 360 * 18 + 15);
}

TEST_CASE("break chain maxes out at 443 tags in an 8000-character budget") {
    const std::string markup =
        build_break_chain(std::numeric_limits<Millis>::max(), 8000);
    const Document doc = parse(markup);
    CHECK(doc.nodes.size() == 443);
    CHECK(markup.size() == 443 * 18 + 15);
    CHECK(markup.size() <= 8000);
    CHECK(render(doc, RenderMode::Vulnerable).silence_ms() == 4430000);
}

TEST_CASE("break chain refuses budgets that cannot fit one tag") {
    try {
        build_break_chain(10000, 30);
        FAIL("expected BudgetTooSmall");
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::BudgetTooSmall);
    }
    // 15-char wrapper + one 18-char tag = 33 characters exactly.
    const Document doc = parse(build_break_chain(10000, 33));
    CHECK(doc.nodes.size() == 1);
}

TEST_CASE("break chain tag counts match a brute-force packer") {
    sim::RandomStream rng(2024, "ssml-oracle");
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t budget = 33 + rng.below(12000);
        const Millis target = 1 + static_cast<Millis>(rng.below(5000000));

        // Independent oracle: literally pack tags into a string until either
        // the budget or the target is satisfied.
        std::string packed = "<speak>";
        std::size_t tags = 0;
        Millis silence = 0;
        while (silence < target &&
               packed.size() + 18 + std::string("</speak>").size() <= budget) {
            packed += "<break time=10s />";
            ++tags;
            silence += 10000;
        }
        packed += "</speak>";

        const Document doc = parse(build_break_chain(target, budget));
        CHECK(doc.nodes.size() == tags);
        if (doc.nodes.size() != tags) {
            MESSAGE("budget=" << budget << " target=" << target);
            break;
        }
    }
}

TEST_CASE("documents survive a print/parse round trip") {
    const char* fixtures[] = {
        "fixtures/ssml/compliant_greeting.xml",
        "fixtures/ssml/compliant_boundary_break.xml",
        "fixtures/ssml/compliant_split_runs.xml",
        "fixtures/ssml/compliant_audio.xml",
        "fixtures/ssml/violating_consecutive_breaks.xml",
        "fixtures/ssml/violating_break_chain_420.xml",
        "fixtures/ssml/violating_oversize.xml",
    };
    for (const char* rel : fixtures) {
        const Document doc = parse(read_file(repo_path(rel)));
        const Document again = parse(to_markup(doc));
        CHECK(doc.nodes == again.nodes);
    }
}

TEST_CASE("compliance coincides with render-mode agreement on silence") {
    const char* fixtures[] = {
        "fixtures/ssml/compliant_greeting.xml",
        "fixtures/ssml/compliant_boundary_break.xml",
        "fixtures/ssml/compliant_split_runs.xml",
        "fixtures/ssml/compliant_audio.xml",
        "fixtures/ssml/violating_consecutive_breaks.xml",
        "fixtures/ssml/violating_break_chain_420.xml",
    };
    for (const char* rel : fixtures) {
        const Document doc = parse(read_file(repo_path(rel)));
        const bool break_compliant = check_policy(doc, 1 << 20).compliant();
        const bool same_silence = render(doc, RenderMode::Compliant).silence_ms() ==
                                  render(doc, RenderMode::Vulnerable).silence_ms();
        CHECK(break_compliant == same_silence);
    }
}

TEST_CASE("word counting ignores runs of whitespace") {
    CHECK(count_words("") == 0);
    CHECK(count_words("   ") == 0);
    CHECK(count_words("ok") == 1);
    CHECK(count_words("turn off the light") == 4);
    CHECK(count_words("  spaced   out  words ") == 3);
}

#include "vasim/ssml.hpp"

#include <cctype>
#include <limits>

namespace vasim::ssml {

namespace {

constexpr std::string_view kOpenTag = "<speak>";
constexpr std::string_view kCloseTag = "</speak>";

[[noreturn]] void fail(std::size_t pos, const std::string& reason) {
    throw ParseError(pos, reason);
}

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;

    bool eof() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }
    bool starts_with(std::string_view t) const {
        return s.compare(pos, t.size(), t) == 0;
    }
    void expect(std::string_view t, const std::string& what) {
        if (!starts_with(t)) fail(pos, "expected " + what);
        pos += t.size();
    }
    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos;
    }
};

std::string read_name(Cursor& c) {
    std::size_t start = c.pos;
    while (!c.eof() && std::islower(static_cast<unsigned char>(c.peek()))) ++c.pos;
    return c.s.substr(start, c.pos - start);
}

std::string read_attr_value(Cursor& c) {
    if (c.eof()) fail(c.pos, "unterminated attribute");
    if (c.peek() == '"') {
        ++c.pos;
        std::size_t start = c.pos;
        while (!c.eof() && c.peek() != '"') ++c.pos;
        if (c.eof()) fail(start, "unterminated quoted attribute value");
        std::string v = c.s.substr(start, c.pos - start);
        ++c.pos;
        return v;
    }
    std::size_t start = c.pos;
    while (!c.eof() && !std::isspace(static_cast<unsigned char>(c.peek())) && c.peek() != '/' &&
           c.peek() != '>') {
        ++c.pos;
    }
    if (c.pos == start) fail(start, "empty attribute value");
    return c.s.substr(start, c.pos - start);
}

Millis parse_duration(const std::string& v, std::size_t pos) {
    std::size_t i = 0;
    while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) ++i;
    if (i == 0) fail(pos, "break time must be a positive integer followed by s or ms");
    if (i > 12) fail(pos, "break duration too large");
    const std::int64_t n = std::stoll(v.substr(0, i));
    const std::string unit = v.substr(i);
    Millis ms = 0;
    if (unit == "s") {
        ms = n * 1000;
    } else if (unit == "ms") {
        ms = n;
    } else {
        fail(pos, "break time unit must be s or ms, got '" + unit + "'");
    }
    if (ms <= 0) fail(pos, "break duration must be positive");
    return ms;
}

// Parses the inside of a self-closing tag after its name: attributes, then "/>".
// Exactly the attributes in `required` must appear, each once.
std::vector<std::pair<std::string, std::string>> read_attrs(Cursor& c, const std::string& tag) {
    std::vector<std::pair<std::string, std::string>> attrs;
    for (;;) {
        c.skip_ws();
        if (c.eof()) fail(c.pos, "unterminated <" + tag + "> tag");
        if (c.starts_with("/>")) {
            c.pos += 2;
            return attrs;
        }
        if (c.peek() == '>') fail(c.pos, "<" + tag + "> must be self-closing");
        const std::size_t name_pos = c.pos;
        const std::string name = read_name(c);
        if (name.empty()) fail(name_pos, "expected attribute name in <" + tag + ">");
        c.expect("=", "'=' after attribute name");
        attrs.emplace_back(name, read_attr_value(c));
    }
}

std::string attr_or_fail(const std::vector<std::pair<std::string, std::string>>& attrs,
                         const std::string& tag, const std::string& want, std::size_t pos) {
    std::string found;
    bool seen = false;
    for (const auto& [name, value] : attrs) {
        if (name != want) fail(pos, "unknown attribute '" + name + "' in <" + tag + ">");
        if (seen) fail(pos, "duplicate attribute '" + name + "' in <" + tag + ">");
        seen = true;
        found = value;
    }
    if (!seen || found.empty()) fail(pos, "<" + tag + "> requires a " + want + " attribute");
    return found;
}

} // namespace

Node Node::make_text(std::string t) {
    Node n;
    n.kind = Kind::Text;
    n.text = std::move(t);
    return n;
}

Node Node::make_break(Millis ms) {
    Node n;
    n.kind = Kind::Break;
    n.break_ms = ms;
    return n;
}

Node Node::make_audio(std::string src) {
    Node n;
    n.kind = Kind::Audio;
    n.src = std::move(src);
    return n;
}

Millis PlaybackPlan::silence_ms() const {
    Millis total = 0;
    for (const auto& seg : segments) {
        if (seg.kind == Segment::Kind::Silence) total += seg.ms;
    }
    return total;
}

Millis PlaybackPlan::speech_ms() const {
    Millis total = 0;
    for (const auto& seg : segments) {
        if (seg.kind == Segment::Kind::Speech) total += seg.ms;
    }
    return total;
}

Document parse(const std::string& markup) {
    Document doc;
    doc.source_length = markup.size();
    Cursor c{markup};
    c.skip_ws();
    c.expect(kOpenTag, "<speak> root");
    for (;;) {
        if (c.eof()) fail(c.pos, "missing </speak>");
        if (c.starts_with(kCloseTag)) {
            c.pos += kCloseTag.size();
            break;
        }
        if (c.peek() == '<') {
            const std::size_t tag_pos = c.pos;
            ++c.pos;
            const std::string tag = read_name(c);
            if (tag == "break") {
                auto attrs = read_attrs(c, tag);
                doc.nodes.push_back(Node::make_break(
                    parse_duration(attr_or_fail(attrs, tag, "time", tag_pos), tag_pos)));
            } else if (tag == "audio") {
                auto attrs = read_attrs(c, tag);
                doc.nodes.push_back(Node::make_audio(attr_or_fail(attrs, tag, "src", tag_pos)));
            } else {
                fail(tag_pos, "unknown tag <" + tag + ">");
            }
        } else {
            std::size_t start = c.pos;
            while (!c.eof() && c.peek() != '<') ++c.pos;
            doc.nodes.push_back(Node::make_text(markup.substr(start, c.pos - start)));
        }
    }
    c.skip_ws();
    if (!c.eof()) fail(c.pos, "content after </speak>");
    return doc;
}

std::string to_markup(const Document& doc) {
    std::string out{kOpenTag};
    for (const Node& n : doc.nodes) {
        switch (n.kind) {
        case Node::Kind::Text:
            out += n.text;
            break;
        case Node::Kind::Break:
            out += "<break time=\"" + std::to_string(n.break_ms) + "ms\"/>";
            break;
        case Node::Kind::Audio:
            out += "<audio src=\"" + n.src + "\"/>";
            break;
        }
    }
    out += kCloseTag;
    return out;
}

PolicyVerdict check_policy(const Document& doc, std::size_t output_speech_limit,
                           Millis break_limit_ms) {
    PolicyVerdict verdict;
    Millis run_ms = 0;
    auto flush = [&] {
        if (run_ms > break_limit_ms) {
            verdict.violations.push_back({Violation::Kind::ExcessiveBreakSilence, run_ms});
        }
        run_ms = 0;
    };
    for (const Node& n : doc.nodes) {
        if (n.kind == Node::Kind::Break) {
            run_ms += n.break_ms;
        } else {
            flush();
        }
    }
    flush();
    if (doc.source_length > output_speech_limit) {
        verdict.violations.push_back({Violation::Kind::OversizeOutputSpeech,
                                      static_cast<std::int64_t>(doc.source_length)});
    }
    return verdict;
}

PlaybackPlan render(const Document& doc, RenderMode mode, Millis per_word_ms,
                    Millis audio_segment_ms, Millis break_limit_ms) {
    PlaybackPlan plan;
    Millis run_ms = 0;
    auto flush = [&] {
        if (run_ms == 0) return;
        const Millis ms = mode == RenderMode::Compliant ? std::min(run_ms, break_limit_ms) : run_ms;
        plan.segments.push_back({Segment::Kind::Silence, "", ms, false});
        run_ms = 0;
    };
    for (const Node& n : doc.nodes) {
        switch (n.kind) {
        case Node::Kind::Break:
            run_ms += n.break_ms;
            break;
        case Node::Kind::Text:
            flush();
            plan.segments.push_back(
                {Segment::Kind::Speech, n.text, count_words(n.text) * per_word_ms, false});
            break;
        case Node::Kind::Audio:
            flush();
            plan.segments.push_back({Segment::Kind::ExternalAudio, n.src, audio_segment_ms, true});
            break;
        }
    }
    flush();
    for (const auto& seg : plan.segments) plan.total_ms += seg.ms;
    return plan;
}

std::string build_break_chain(Millis target_ms, std::size_t char_budget) {
    if (target_ms <= 0) {
        throw SimError(ErrorCode::ValidationError, "break chain target must be positive");
    }
    const std::size_t wrapper = kOpenTag.size() + kCloseTag.size();
    if (char_budget < wrapper + kChainTag.size()) {
        throw SimError(ErrorCode::BudgetTooSmall,
                       "budget of " + std::to_string(char_budget) +
                           " characters cannot fit the wrapper plus one break tag");
    }
    const std::int64_t max_tags =
        static_cast<std::int64_t>((char_budget - wrapper) / kChainTag.size());
    const std::int64_t wanted = (target_ms - 1) / kChainTagMs + 1;
    const std::int64_t tags = std::min<std::int64_t>(max_tags, wanted);
    std::string out{kOpenTag};
    for (std::int64_t i = 0; i < tags; ++i) out += kChainTag;
    out += kCloseTag;
    return out;
}

int count_words(const std::string& text) {
    int words = 0;
    bool in_word = false;
    for (unsigned char ch : text) {
        if (std::isspace(ch)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

const char* to_string(RenderMode m) {
    return m == RenderMode::Compliant ? "Compliant" : "Vulnerable";
}

RenderMode render_mode_from_string(const std::string& s) {
    if (s == "Compliant") return RenderMode::Compliant;
    if (s == "Vulnerable") return RenderMode::Vulnerable;
    throw SimError(ErrorCode::ValidationError, "unknown render mode '" + s + "'");
}

} // namespace vasim::ssml

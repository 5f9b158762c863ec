#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vasim/core.hpp"

namespace vasim::ssml {

/// Thrown on malformed markup; carries the byte offset of the problem.
class ParseError : public SimError {
public:
    ParseError(std::size_t position, const std::string& reason)
        : SimError(ErrorCode::ParseError,
                   "parse error at offset " + std::to_string(position) + ": " + reason),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

struct Node {
    enum class Kind { Text, Break, Audio };
    Kind kind = Kind::Text;
    std::string text;     // Text only
    Millis break_ms = 0;  // Break only, always > 0
    std::string src;      // Audio only

    bool operator==(const Node&) const = default;

    static Node make_text(std::string t);
    static Node make_break(Millis ms);
    static Node make_audio(std::string src);
};

struct Document {
    std::vector<Node> nodes;
    std::size_t source_length = 0;  // characters of the original markup
};

struct Violation {
    enum class Kind { ExcessiveBreakSilence, OversizeOutputSpeech };
    Kind kind;
    std::int64_t amount = 0;  // summed run ms, or character count

    bool operator==(const Violation&) const = default;
};

struct PolicyVerdict {
    std::vector<Violation> violations;
    bool compliant() const { return violations.empty(); }
};

enum class RenderMode { Compliant, Vulnerable };

const char* to_string(RenderMode m);
RenderMode render_mode_from_string(const std::string& s);

/// The canonical ten-second break tag used to assemble silence chains.
inline constexpr std::string_view kChainTag = "<break time=10s />";
inline constexpr std::size_t kChainTagLength = kChainTag.size();  // 18
inline constexpr Millis kChainTagMs = 10000;

struct Segment {
    enum class Kind { Speech, Silence, ExternalAudio };
    Kind kind;
    std::string text;               // Speech text or audio src
    Millis ms = 0;
    bool pause_on_wakeword = false; // always true for ExternalAudio
};

struct PlaybackPlan {
    std::vector<Segment> segments;
    Millis total_ms = 0;

    Millis silence_ms() const;
    Millis speech_ms() const;
};

/// Parse the four-node markup subset: a single <speak> root wrapping text,
/// <break time=.../> and <audio src=.../>. Anything else fails loudly so
/// policy-relevant content can never slip through unnoticed.
Document parse(const std::string& markup);

/// Print a document back to markup. Re-parsing the result yields an equal
/// node list.
std::string to_markup(const Document& doc);

/// Flag break runs whose summed silence exceeds break_limit_ms (boundary
/// itself passes) and documents longer than output_speech_limit characters.
/// A run is a maximal stretch of consecutive Break nodes with nothing in
/// between.
PolicyVerdict check_policy(const Document& doc, std::size_t output_speech_limit = 8000,
                           Millis break_limit_ms = 10000);

/// Lay the document out on a timeline. Compliant mode clamps each break run
/// to break_limit_ms; Vulnerable mode renders every break in full. Each run
/// becomes a single Silence segment.
PlaybackPlan render(const Document& doc, RenderMode mode, Millis per_word_ms = 400,
                    Millis audio_segment_ms = 60000, Millis break_limit_ms = 10000);

/// Build the longest chain of ten-second break tags that fits the character
/// budget (15 of which go to the <speak> wrapper; each tag takes 18), capped
/// at the number needed to reach target_ms. Throws BudgetTooSmall when not
/// even one tag fits.
std::string build_break_chain(Millis target_ms, std::size_t char_budget);

/// Whitespace-separated word count; the basis for speech duration estimates.
int count_words(const std::string& text);

} // namespace vasim::ssml

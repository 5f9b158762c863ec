#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vasim/config.hpp"
#include "vasim/core.hpp"
#include "vasim/device.hpp"
#include "vasim/sim/engine.hpp"
#include "vasim/ssml.hpp"

namespace vasim::skill {

struct IntentDef {
    std::string id;
    std::vector<std::string> samples;  // exact-match sample utterances
};

struct SkillDef {
    std::string id;
    std::string invocation;            // name used to open it
    std::vector<IntentDef> intents;
    std::string catch_all_intent;      // empty when the skill has no catch-all slot
    std::optional<ssml::RenderMode> policy_mode;  // overrides the device mode
};

struct IntentMatch {
    enum class Kind { Reserved, Named, CatchAll };
    Kind kind = Kind::CatchAll;
    std::string id;        // reserved word, or the matched intent id
    std::string captured;  // catch-all: the full text minus the wakeword
};

struct SkillResponse {
    std::string speech_markup;
    bool should_end = false;
};

/// Delivers a skill's response for one specific interaction; late calls for
/// superseded interactions are silently dropped.
using Responder = std::function<void(sim::Simulation&, const SkillResponse&)>;

/// The skill's brain. Responses may be produced on the spot or scheduled for
/// later through the responder — the runtime does not care which.
struct SkillLogic {
    virtual ~SkillLogic() = default;
    virtual void on_launch(sim::Simulation& sim, Responder respond) = 0;
    virtual void on_intent(sim::Simulation& sim, const IntentMatch& match, Responder respond) = 0;
};

struct Session {
    enum class State { Speaking, Listening };

    std::string skill_id;
    State state = State::Listening;
    Millis opened_at = 0;
    Millis speaking_until = 0;
    Millis deadline = 0;
    std::string last_intent;
    SkillResponse last_response;
    bool has_last_response = false;
    std::uint64_t generation = 0;
};

/// Session lifecycle and intent routing: launches, the reprompt window,
/// reserved words, playback-extended sessions, interrupt-on-command.
/// At most one session is open at a time.
class SkillRuntime : public device::SessionPort {
public:
    SkillRuntime(const SimConfig& cfg, ssml::RenderMode device_mode)
        : cfg_(cfg), device_mode_(device_mode) {}

    void register_skill(SkillDef def, std::shared_ptr<SkillLogic> logic);
    bool has_skill(const std::string& skill_id) const;
    const SkillDef* find_by_invocation(const std::string& invocation) const;

    // SessionPort
    bool session_open() const override { return session_.has_value(); }
    void close_session(sim::Simulation& sim, const std::string& reason) override;

    const std::optional<Session>& session() const { return session_; }

    /// Open a skill session; an already-open session is closed first.
    /// Throws UnknownSkill for unregistered ids.
    void launch(sim::Simulation& sim, const std::string& skill_id);

    /// Classify one utterance against the open session's intents. Every
    /// non-empty text maps to exactly one match.
    IntentMatch route(const std::string& text) const;

    /// Route and dispatch one utterance (wakeword already stripped).
    void handle_text(sim::Simulation& sim, const std::string& text);

    /// Bare wakeword: refresh the timeout and replay the last response
    /// verbatim.
    void on_bare_wakeword(sim::Simulation& sim);

    /// Playback plan of the response now playing, when state is Speaking.
    const std::optional<ssml::PlaybackPlan>& current_plan() const { return current_plan_; }

    /// World-facing hooks.
    std::function<void(sim::Simulation&, const ssml::PlaybackPlan&, const std::string& markup)>
        on_play;                                   // a response starts playing
    std::function<void(sim::Simulation&)> on_interrupt;  // playback cut short
    std::function<void(sim::Simulation&)> on_closed;     // session went away

private:
    struct Registered {
        SkillDef def;
        std::shared_ptr<SkillLogic> logic;
    };

    void respond_now(sim::Simulation& sim, const SkillResponse& resp);
    void enter_listening(sim::Simulation& sim);
    Responder make_responder();
    const Registered& active() const;

    SimConfig cfg_;
    ssml::RenderMode device_mode_;
    std::map<std::string, Registered> skills_;
    std::optional<Session> session_;
    std::optional<ssml::PlaybackPlan> current_plan_;
};

/// The reserved words that always close the active skill.
bool is_reserved_word(const std::string& normalized);

/// Lowercase, trim, and collapse inner whitespace runs to single spaces.
std::string normalize_utterance(const std::string& text);

} // namespace vasim::skill

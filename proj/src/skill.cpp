#include "vasim/skill.hpp"

#include <algorithm>
#include <cctype>

namespace vasim::skill {

bool is_reserved_word(const std::string& normalized) {
    return normalized == "close" || normalized == "stop" || normalized == "exit" ||
           normalized == "quit";
}

std::string normalize_utterance(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

void SkillRuntime::register_skill(SkillDef def, std::shared_ptr<SkillLogic> logic) {
    const std::string id = def.id;
    skills_[id] = {std::move(def), std::move(logic)};
}

bool SkillRuntime::has_skill(const std::string& skill_id) const {
    return skills_.count(skill_id) > 0;
}

const SkillDef* SkillRuntime::find_by_invocation(const std::string& invocation) const {
    const std::string wanted = normalize_utterance(invocation);
    for (const auto& [id, reg] : skills_) {
        if (normalize_utterance(reg.def.invocation) == wanted) return &reg.def;
    }
    return nullptr;
}

const SkillRuntime::Registered& SkillRuntime::active() const {
    return skills_.at(session_->skill_id);
}

void SkillRuntime::close_session(sim::Simulation& sim, const std::string& reason) {
    if (!session_) return;
    sim.log("session-closed", {{"skill", session_->skill_id}, {"reason", reason},
                               {"open_ms", sim.now() - session_->opened_at}});
    session_.reset();
    current_plan_.reset();
    if (on_closed) on_closed(sim);
}

void SkillRuntime::launch(sim::Simulation& sim, const std::string& skill_id) {
    auto it = skills_.find(skill_id);
    if (it == skills_.end()) {
        throw SimError(ErrorCode::UnknownSkill, "no skill registered as '" + skill_id + "'");
    }
    if (session_) close_session(sim, "replaced by new launch");
    Session s;
    s.skill_id = skill_id;
    s.opened_at = sim.now();
    s.state = Session::State::Listening;
    s.deadline = sim.now() + cfg_.reprompt_window_ms;
    session_ = s;
    sim.log("session-opened", {{"skill", skill_id}});
    it->second.logic->on_launch(sim, make_responder());
}

IntentMatch SkillRuntime::route(const std::string& text) const {
    if (!session_) {
        throw SimError(ErrorCode::ValidationError, "routing requires an open session");
    }
    const std::string normalized = normalize_utterance(text);
    if (is_reserved_word(normalized)) {
        return {IntentMatch::Kind::Reserved, normalized, ""};
    }
    const SkillDef& def = active().def;
    for (const IntentDef& intent : def.intents) {
        for (const std::string& sample : intent.samples) {
            if (normalize_utterance(sample) == normalized) {
                return {IntentMatch::Kind::Named, intent.id, ""};
            }
        }
    }
    return {IntentMatch::Kind::CatchAll, def.catch_all_intent, text};
}

void SkillRuntime::handle_text(sim::Simulation& sim, const std::string& text) {
    const IntentMatch match = route(text);
    if (match.kind == IntentMatch::Kind::Reserved) {
        sim.log("reserved-word", {{"word", match.id}});
        close_session(sim, "reserved word '" + match.id + "'");
        return;
    }
    if (match.kind == IntentMatch::Kind::CatchAll && match.id.empty()) {
        // No catch-all slot registered: the utterance falls on the floor and
        // the skill reprompts silently.
        sim.log("unmatched-intent", {{"skill", session_->skill_id}, {"text", text}});
        enter_listening(sim);
        return;
    }
    if (session_->state == Session::State::Speaking) {
        sim.log("playback-interrupted", {{"skill", session_->skill_id}});
        current_plan_.reset();
        if (on_interrupt) on_interrupt(sim);
    }
    session_->state = Session::State::Listening;
    session_->deadline = sim.now() + cfg_.reprompt_window_ms;
    session_->last_intent = match.id;
    ++session_->generation;
    sim.log("intent-dispatched",
            {{"skill", session_->skill_id},
             {"intent", match.id},
             {"kind", match.kind == IntentMatch::Kind::Named ? "named" : "catch-all"}});
    const std::uint64_t gen = session_->generation;
    sim.schedule(session_->deadline, "session-timeout",
                 {{"skill", session_->skill_id}, {"generation", gen}},
                 [this, gen](sim::Simulation& s) {
                     if (session_ && session_->generation == gen &&
                         session_->state == Session::State::Listening &&
                         s.now() >= session_->deadline) {
                         close_session(s, "timeout");
                     }
                 });
    active().logic->on_intent(sim, match, make_responder());
}

Responder SkillRuntime::make_responder() {
    const std::uint64_t gen = session_ ? session_->generation : 0;
    return [this, gen](sim::Simulation& sim, const SkillResponse& resp) {
        if (!session_ || session_->generation != gen) {
            sim.log("skill-response-dropped", {{"reason", "superseded interaction"}});
            return;
        }
        respond_now(sim, resp);
    };
}

void SkillRuntime::respond_now(sim::Simulation& sim, const SkillResponse& resp) {
    if (resp.speech_markup.size() > static_cast<std::size_t>(cfg_.output_speech_limit)) {
        throw SimError(ErrorCode::OversizeResponse,
                       "skill response of " + std::to_string(resp.speech_markup.size()) +
                           " characters exceeds the " +
                           std::to_string(cfg_.output_speech_limit) + "-character limit");
    }
    const ssml::Document doc = ssml::parse(resp.speech_markup);
    const ssml::RenderMode mode = active().def.policy_mode.value_or(device_mode_);
    const ssml::PlaybackPlan plan =
        ssml::render(doc, mode, cfg_.per_word_ms, cfg_.audio_segment_ms, cfg_.break_policy_limit_ms);

    session_->state = Session::State::Speaking;
    session_->speaking_until = sim.now() + plan.total_ms;
    session_->last_response = resp;
    session_->has_last_response = true;
    ++session_->generation;
    current_plan_ = plan;

    sim.log("skill-response", {{"skill", session_->skill_id},
                               {"chars", resp.speech_markup.size()},
                               {"playback_ms", plan.total_ms},
                               {"silence_ms", plan.silence_ms()},
                               {"should_end", resp.should_end}});
    if (on_play) on_play(sim, plan, resp.speech_markup);

    const std::uint64_t gen = session_->generation;
    const bool should_end = resp.should_end;
    sim.schedule(session_->speaking_until, "playback-finished",
                 {{"skill", session_->skill_id}, {"generation", gen}},
                 [this, gen, should_end](sim::Simulation& s) {
                     if (!session_ || session_->generation != gen) return;
                     current_plan_.reset();
                     if (should_end) {
                         close_session(s, "completed");
                     } else {
                         enter_listening(s);
                     }
                 });
}

void SkillRuntime::enter_listening(sim::Simulation& sim) {
    session_->state = Session::State::Listening;
    session_->deadline = sim.now() + cfg_.reprompt_window_ms;
    ++session_->generation;
    const std::uint64_t gen = session_->generation;
    sim.log("session-listening", {{"skill", session_->skill_id}, {"deadline", session_->deadline}});
    sim.schedule(session_->deadline, "session-timeout",
                 {{"skill", session_->skill_id}, {"generation", gen}},
                 [this, gen](sim::Simulation& s) {
                     if (session_ && session_->generation == gen &&
                         session_->state == Session::State::Listening &&
                         s.now() >= session_->deadline) {
                         close_session(s, "timeout");
                     }
                 });
}

void SkillRuntime::on_bare_wakeword(sim::Simulation& sim) {
    if (!session_) return;
    sim.log("session-refreshed-by-wakeword", {{"skill", session_->skill_id},
                                              {"last_intent", session_->last_intent}});
    if (session_->state == Session::State::Speaking) {
        sim.log("playback-interrupted", {{"skill", session_->skill_id}});
        current_plan_.reset();
        if (on_interrupt) on_interrupt(sim);
    }
    if (session_->has_last_response) {
        const SkillResponse replay = session_->last_response;
        respond_now(sim, replay);
    } else {
        enter_listening(sim);
    }
}

} // namespace vasim::skill

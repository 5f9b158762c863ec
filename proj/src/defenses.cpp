#include "vasim/defenses.hpp"

#include <cctype>

namespace vasim::defenses {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        const unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            current.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void check_probability(double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw SimError(ErrorCode::ValidationError,
                       std::string(field) + " must lie in [0,1], got " + std::to_string(p));
    }
}

} // namespace

void OutputFingerprint::record(const std::string& text, Millis now) {
    evict(now);
    for (std::string& token : tokenize(text)) {
        entries_.emplace_back(std::move(token), now);
    }
}

bool OutputFingerprint::contains(const std::string& token, Millis now) const {
    const std::string needle = lower(token);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->second + window_ms_ < now) break;  // entries are time-ordered
        if (it->second <= now && it->first == needle) return true;
    }
    return false;
}

void OutputFingerprint::clear() { entries_.clear(); }

void OutputFingerprint::evict(Millis now) {
    while (!entries_.empty() && entries_.front().second + window_ms_ < now) {
        entries_.pop_front();
    }
}

void ClassifierStub::validate() const {
    check_probability(true_positive_rate, "true_positive_rate");
    check_probability(false_positive_rate, "false_positive_rate");
}

void DefenseConfig::validate() const {
    if (name.empty()) {
        throw SimError(ErrorCode::ValidationError, "defense config needs a name");
    }
    if (classifier) classifier->validate();
}

DefenseConfig DefenseConfig::from_json(const Json& j) {
    DefenseConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "name") {
            cfg.name = value.get<std::string>();
        } else if (key == "suppression_enabled") {
            cfg.suppression_enabled = value.get<bool>();
        } else if (key == "direction_check_enabled") {
            cfg.direction_check_enabled = value.get<bool>();
        } else if (key == "classifier") {
            ClassifierStub stub;
            for (const auto& [ckey, cvalue] : value.items()) {
                if (ckey == "true_positive_rate") {
                    stub.true_positive_rate = cvalue.get<double>();
                } else if (ckey == "false_positive_rate") {
                    stub.false_positive_rate = cvalue.get<double>();
                } else {
                    throw SimError(ErrorCode::ValidationError,
                                   "unknown classifier field 'classifier." + ckey + "'");
                }
            }
            cfg.classifier = stub;
        } else {
            throw SimError(ErrorCode::ValidationError, "unknown defense field '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

Json DefenseConfig::to_json() const {
    Json j;
    j["name"] = name;
    j["suppression_enabled"] = suppression_enabled;
    j["direction_check_enabled"] = direction_check_enabled;
    if (classifier) {
        j["classifier"] = Json{{"true_positive_rate", classifier->true_positive_rate},
                               {"false_positive_rate", classifier->false_positive_rate}};
    }
    return j;
}

const char* to_string(SuppressDecision d) {
    return d == SuppressDecision::Suppress ? "suppress" : "pass";
}

const char* to_string(Direction d) {
    return d == Direction::MultiDirection ? "multi-direction" : "single-direction";
}

SuppressDecision suppress_check(const OutputFingerprint& fingerprint,
                                const acoustics::MicCapture& capture,
                                const std::string& wakeword, Millis now) {
    if (!acoustics::is_device_emitted(capture.source)) return SuppressDecision::Pass;
    const bool carries_wakeword =
        capture.wakeword_only || acoustics::starts_with_wakeword(capture.heard_text, wakeword);
    if (!carries_wakeword) return SuppressDecision::Pass;
    return fingerprint.contains(wakeword, now) ? SuppressDecision::Suppress
                                               : SuppressDecision::Pass;
}

Direction direction_check(const acoustics::MicCapture& capture, acoustics::Placement placement,
                          bool open_self_multi) {
    if (!acoustics::is_device_emitted(capture.source)) return Direction::SingleDirection;
    if (placement == acoustics::Placement::Open) {
        return open_self_multi ? Direction::MultiDirection : Direction::SingleDirection;
    }
    return Direction::MultiDirection;  // wall or small room: reflections reach the mic
}

Json RunCounts::to_json() const {
    Json j;
    j["config"] = config_name;
    j["self_issued_attempts"] = self_issued_attempts;
    j["self_issued_executed"] = self_issued_executed;
    j["suppressed_commands"] = suppressed_commands;
    j["false_suppressions"] = false_suppressions;
    j["human_outcomes"] = human_outcomes;
    return j;
}

Json DefenseReport::to_json() const {
    Json j;
    j["configs"] = Json::array();
    for (const RunCounts& counts : per_config) {
        j["configs"].push_back(counts.to_json());
    }
    return j;
}

DefenseReport evaluate(const std::vector<DefenseConfig>& configs,
                       const std::function<RunCounts(const DefenseConfig&)>& run_one) {
    DefenseReport report;
    report.per_config.reserve(configs.size());
    for (const DefenseConfig& cfg : configs) {
        cfg.validate();
        RunCounts counts = run_one(cfg);
        counts.config_name = cfg.name;
        report.per_config.push_back(std::move(counts));
    }
    return report;
}

} // namespace vasim::defenses

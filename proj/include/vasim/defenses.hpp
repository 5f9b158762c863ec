#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vasim/acoustics.hpp"
#include "vasim/core.hpp"
#include "vasim/sim/random.hpp"

namespace vasim::defenses {

/// Rolling record of what the device's own speaker emitted recently. A
/// wakeword the device just played itself can be matched against this and
/// discarded instead of waking the device.
class OutputFingerprint {
public:
    explicit OutputFingerprint(Millis window_ms = 3000) : window_ms_(window_ms) {}

    /// Tokenize an emission and remember every token with its timestamp.
    void record(const std::string& text, Millis now);

    /// True when `token` was emitted at most window_ms before `now`.
    bool contains(const std::string& token, Millis now) const;

    void clear();
    std::size_t size() const { return entries_.size(); }
    Millis window_ms() const { return window_ms_; }

private:
    void evict(Millis now);

    Millis window_ms_;
    std::deque<std::pair<std::string, Millis>> entries_;  // (token, emitted_at), ascending time
};

/// Hypothetical liveness classifier, reduced to its operating point.
struct ClassifierStub {
    double true_positive_rate = 1.0;   // chance a device-emitted command is blocked
    double false_positive_rate = 0.0;  // chance a genuine human command is blocked

    void validate() const;
};

struct DefenseConfig {
    std::string name = "none";
    bool suppression_enabled = false;      // speaker-output fingerprint matching
    bool direction_check_enabled = false;  // single- vs multi-direction arrival test
    std::optional<ClassifierStub> classifier;

    void validate() const;
    static DefenseConfig from_json(const Json& j);
    Json to_json() const;
};

enum class SuppressDecision { Pass, Suppress };
enum class Direction { SingleDirection, MultiDirection };

const char* to_string(SuppressDecision d);
const char* to_string(Direction d);

/// Self-wake filter: a captured wakeword is discarded when the device itself
/// emitted that token within the fingerprint window. Human speech always
/// passes; a fingerprint hit plus a device-emitted source never does.
SuppressDecision suppress_check(const OutputFingerprint& fingerprint,
                                const acoustics::MicCapture& capture,
                                const std::string& wakeword, Millis now);

/// Arrival-geometry heuristic: speaker sound reaching the microphone both
/// directly and via nearby reflecting surfaces reads as multi-directional,
/// a human voice as a single direction. In open placement the reflections
/// are too weak to count unless configured otherwise.
Direction direction_check(const acoustics::MicCapture& capture, acoustics::Placement placement,
                          bool open_self_multi);

/// Outcome counters for one simulated run under one defense configuration.
struct RunCounts {
    std::string config_name;
    int self_issued_attempts = 0;
    int self_issued_executed = 0;
    int suppressed_commands = 0;
    int false_suppressions = 0;  // human commands wrongly blocked
    Json human_outcomes = Json::array();  // ordered trace of human-command results

    Json to_json() const;
};

struct DefenseReport {
    std::vector<RunCounts> per_config;
    Json to_json() const;
};

/// Run the same scenario once per configuration and collect the counters.
/// The runner owns all mutation; this harness never touches shared state, so
/// config lists can be compared apples-to-apples on one seed.
DefenseReport evaluate(const std::vector<DefenseConfig>& configs,
                       const std::function<RunCounts(const DefenseConfig&)>& run_one);

} // namespace vasim::defenses

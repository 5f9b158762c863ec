#include "vasim/acoustics.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace vasim::acoustics {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool is_separator(char c) { return c == ' ' || c == ',' || c == '\t'; }

} // namespace

const char* to_string(Placement p) {
    switch (p) {
    case Placement::Open: return "Open";
    case Placement::Wall: return "Wall";
    case Placement::Small: return "Small";
    }
    return "?";
}

const char* to_string(Source s) {
    switch (s) {
    case Source::Human: return "Human";
    case Source::SelfSpeaker: return "SelfSpeaker";
    case Source::BluetoothStream: return "BluetoothStream";
    case Source::RadioStream: return "RadioStream";
    }
    return "?";
}

const char* to_string(ListenerClass c) {
    switch (c) {
    case ListenerClass::SameRoom: return "SameRoom";
    case ListenerClass::AdjacentWall: return "AdjacentWall";
    case ListenerClass::AdjacentWallDoor: return "AdjacentWallDoor";
    case ListenerClass::NonAdjacent: return "NonAdjacent";
    }
    return "?";
}

Placement placement_from_string(const std::string& s) {
    if (s == "Open") return Placement::Open;
    if (s == "Wall") return Placement::Wall;
    if (s == "Small") return Placement::Small;
    throw SimError(ErrorCode::ValidationError, "unknown placement '" + s + "'");
}

Source source_from_string(const std::string& s) {
    if (s == "Human") return Source::Human;
    if (s == "SelfSpeaker") return Source::SelfSpeaker;
    if (s == "BluetoothStream") return Source::BluetoothStream;
    if (s == "RadioStream") return Source::RadioStream;
    throw SimError(ErrorCode::ValidationError, "unknown source '" + s + "'");
}

ListenerClass listener_from_string(const std::string& s) {
    if (s == "SameRoom") return ListenerClass::SameRoom;
    if (s == "AdjacentWall") return ListenerClass::AdjacentWall;
    if (s == "AdjacentWallDoor") return ListenerClass::AdjacentWallDoor;
    if (s == "NonAdjacent") return ListenerClass::NonAdjacent;
    throw SimError(ErrorCode::ValidationError, "unknown listener class '" + s + "'");
}

AudibilityModel AudibilityModel::defaults() {
    AudibilityModel m;
    m.rules = {
        {ListenerClass::SameRoom, 0, 1.0},
        {ListenerClass::AdjacentWall, 0, 1.0},
        {ListenerClass::AdjacentWallDoor, 0, 0.66},
        {ListenerClass::NonAdjacent, 0, 0.0},
    };
    return m;
}

AudibilityModel AudibilityModel::from_json(const Json& j) {
    AudibilityModel m;
    for (const Json& row : j) {
        AudibilityRule rule;
        rule.listener = listener_from_string(row.at("listener").get<std::string>());
        rule.min_volume = row.at("min_volume").get<int>();
        rule.heard_probability = row.at("heard_probability").get<double>();
        if (rule.heard_probability < 0.0 || rule.heard_probability > 1.0) {
            throw SimError(ErrorCode::ValidationError,
                           "audibility probability out of range for listener " +
                               row.at("listener").get<std::string>());
        }
        m.rules.push_back(rule);
    }
    return m;
}

double AudibilityModel::probability(ListenerClass cls, int volume) const {
    for (const AudibilityRule& rule : rules) {
        if (rule.listener == cls && volume >= rule.min_volume) return rule.heard_probability;
    }
    return 0.0;
}

RecognitionTable RecognitionTable::from_json(const Json& j) {
    RecognitionTable t;
    for (const Json& row : j) {
        Key key{row.at("command").get<std::string>(), row.at("profile").get<std::string>(),
                placement_from_string(row.at("placement").get<std::string>()),
                row.at("volume").get<int>(), row.at("fvv").get<bool>()};
        const double score = row.at("score").get<double>();
        if (score < 0.0 || score > 10.0) {
            throw SimError(ErrorCode::ValidationError,
                           "score out of range for command '" + key.command + "'");
        }
        if (key.volume < 0 || key.volume > 10) {
            throw SimError(ErrorCode::ValidationError,
                           "volume out of range for command '" + key.command + "'");
        }
        if (!t.entries_.emplace(key, score).second) {
            throw SimError(ErrorCode::ValidationError,
                           "duplicate recognition entry for command '" + key.command + "'");
        }
        t.commands_.insert(key.command);
    }
    return t;
}

RecognitionTable RecognitionTable::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SimError(ErrorCode::IoError, "cannot open table file " + path);
    Json doc = Json::parse(in, nullptr, true);
    return from_json(doc.at("recognition"));
}

std::optional<double> RecognitionTable::lookup(const Key& key) const {
    // Snap the requested volume to the nearest listed one for this column;
    // 6 stands in for every volume from 6 up, and ties go to the lower bucket.
    const int wanted = std::min(key.volume, 6);
    std::optional<int> best;
    for (const auto& [k, score] : entries_) {
        if (k.command != key.command || k.profile != key.profile ||
            k.placement != key.placement || k.fvv != key.fvv) {
            continue;
        }
        if (!best) {
            best = k.volume;
            continue;
        }
        const int d_new = std::abs(k.volume - wanted);
        const int d_old = std::abs(*best - wanted);
        if (d_new < d_old || (d_new == d_old && k.volume < *best)) best = k.volume;
    }
    if (!best) return std::nullopt;
    Key snapped = key;
    snapped.volume = *best;
    return entries_.at(snapped);
}

double RecognitionTable::score(const std::string& command, const std::string& profile,
                               Placement placement, int volume, bool fvv) const {
    if (!commands_.count(command)) {
        throw SimError(ErrorCode::UnknownCommand, "unknown command '" + command + "'");
    }
    Key key{command, profile, placement, volume, fvv};
    std::optional<double> v = lookup(key);
    if (!v) {
        // Measured in only one column: borrow the other so the comparison
        // degrades to equality instead of a hole.
        key.fvv = !fvv;
        v = lookup(key);
    }
    if (!v) {
        throw SimError(ErrorCode::UnknownCommand,
                       "no measurement for command '" + command + "' with profile '" + profile +
                           "' at placement " + to_string(placement));
    }
    return *v;
}

double RecognitionTable::probability(const std::string& command, const std::string& profile,
                                     Placement placement, int volume, bool fvv) const {
    const double s = score(command, profile, placement, volume, fvv);
    if (s <= 0.0) return 0.0;
    if (s >= 10.0) return score10_probability_;
    return s / 10.0;
}

bool RecognitionTable::has_command(const std::string& command) const {
    return commands_.count(command) > 0;
}

std::vector<std::string> RecognitionTable::dominance_violations() const {
    std::vector<std::string> out;
    for (const auto& [key, score] : entries_) {
        if (key.fvv) continue;
        Key twin = key;
        twin.fvv = true;
        const auto it = entries_.find(twin);
        if (it != entries_.end() && it->second < score) {
            out.push_back(key.command + "/" + key.profile + "/" + to_string(key.placement) +
                          "/vol" + std::to_string(key.volume) + ": full-volume " +
                          std::to_string(it->second) + " < " + std::to_string(score));
        }
    }
    return out;
}

Tables load_tables(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SimError(ErrorCode::IoError, "cannot open table file " + path);
    Json doc = Json::parse(in, nullptr, true);
    Tables t;
    t.recognition = RecognitionTable::from_json(doc.at("recognition"));
    t.audibility = doc.contains("audibility") ? AudibilityModel::from_json(doc.at("audibility"))
                                              : AudibilityModel::defaults();
    return t;
}

bool CooldownTracker::use(const std::string& command, const std::string& profile, int variant,
                          Millis now) {
    auto [it, fresh] = state_.try_emplace({command, profile});
    State& st = it->second;
    if (!fresh && (variant != st.variant || now - st.last_use >= idle_reset_ms_)) {
        st.consecutive = 0;
    }
    st.variant = variant;
    st.last_use = now;
    ++st.consecutive;
    return st.consecutive > after_;
}

double recognition_probability(const RecognitionTable& table, const std::string& command_id,
                               const std::string& profile_id, Placement placement, int volume,
                               bool fvv_active, bool ducked) {
    const bool column = fvv_active && !ducked;
    return table.probability(command_id, profile_id, placement, volume, column);
}

MicCapture capture(const Utterance& u, const DeviceStateView& view) {
    if (view.mic_muted) {
        throw SimError(ErrorCode::MicMuted, "microphone hardware switch is off");
    }
    MicCapture cap;
    cap.source = u.source;
    if (is_device_emitted(u.source) && view.stream_paused) {
        cap.wakeword_only = true;
        cap.heard_text = u.has_wakeword ? view.wakeword : "";
    } else {
        cap.heard_text = u.text;
    }
    cap.effective_loudness =
        view.ducking_active ? std::max(0, u.loudness - view.duck_attenuation) : u.loudness;
    return cap;
}

bool starts_with_wakeword(const std::string& text, const std::string& wakeword) {
    if (wakeword.empty()) return false;
    const std::string t = lower(text);
    const std::string w = lower(wakeword);
    if (t.size() < w.size() || t.compare(0, w.size(), w) != 0) return false;
    return t.size() == w.size() || is_separator(t[w.size()]);
}

std::string strip_wakeword(const std::string& text, const std::string& wakeword) {
    if (!starts_with_wakeword(text, wakeword)) return text;
    std::size_t pos = wakeword.size();
    while (pos < text.size() && is_separator(text[pos])) ++pos;
    return text.substr(pos);
}

} // namespace vasim::acoustics

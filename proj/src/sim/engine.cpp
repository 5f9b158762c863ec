#include "vasim/sim/engine.hpp"

#include <utility>

namespace vasim::sim {

std::uint64_t Simulation::schedule(Millis at, std::string kind, Json payload, Action action) {
    if (at < now_) {
        throw SimError(ErrorCode::PastDeadline,
                       "cannot schedule '" + kind + "' at t=" + std::to_string(at) +
                           ", clock is already at t=" + std::to_string(now_));
    }
    Event ev;
    ev.fire_at = at;
    ev.id = next_id_++;
    ev.kind = std::move(kind);
    ev.payload = std::move(payload);
    ev.action = std::move(action);
    const std::uint64_t id = ev.id;
    queue_.insert(std::move(ev));
    return id;
}

std::uint64_t Simulation::log(std::string_view kind, const Json& payload) {
    const std::uint64_t id = next_id_++;
    append_line(now_, id, kind, payload);
    return id;
}

bool Simulation::step() {
    if (queue_.empty()) return false;
    auto node = queue_.extract(queue_.begin());
    fire(std::move(node.value()));
    return true;
}

void Simulation::run_until(Millis t) {
    while (!queue_.empty() && queue_.begin()->fire_at <= t) {
        step();
    }
    if (t > now_) now_ = t;
}

std::vector<PendingEvent> Simulation::pending(std::size_t limit) const {
    std::vector<PendingEvent> out;
    for (const Event& ev : queue_) {
        if (out.size() >= limit) break;
        out.push_back({ev.fire_at, ev.id, ev.kind, ev.payload});
    }
    return out;
}

RandomStream& Simulation::rng(std::string_view name) {
    auto it = streams_.find(name);
    if (it == streams_.end()) {
        it = streams_.emplace(std::string(name), RandomStream(seed_, name)).first;
    }
    return it->second;
}

void Simulation::dump_log(std::ostream& os) const {
    for (const std::string& line : lines_) {
        os << line << '\n';
    }
}

void Simulation::append_line(Millis t, std::uint64_t id, std::string_view kind,
                             const Json& payload) {
    Json line;
    line["v"] = kLogSchemaVersion;
    line["t"] = t;
    line["id"] = id;
    line["kind"] = kind;
    line["payload"] = payload;
    lines_.push_back(line.dump());
}

void Simulation::fire(Event ev) {
    now_ = ev.fire_at;
    append_line(ev.fire_at, ev.id, ev.kind, ev.payload);
    if (ev.action) ev.action(*this);
}

} // namespace vasim::sim

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vasim/core.hpp"
#include "vasim/sim/random.hpp"

namespace vasim::sim {

class Simulation;
using Action = std::function<void(Simulation&)>;

/// A scheduled occurrence. `id` is unique per run and breaks ties between
/// events due at the same instant: the one scheduled first fires first.
struct Event {
    Millis fire_at = 0;
    std::uint64_t id = 0;
    std::string kind;
    Json payload;
    Action action;
};

struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
        if (a.fire_at != b.fire_at) return a.fire_at < b.fire_at;
        return a.id < b.id;
    }
};

/// Queue snapshot entry for inspection; the action is not exposed.
struct PendingEvent {
    Millis fire_at = 0;
    std::uint64_t id = 0;
    std::string kind;
    Json payload;
};

/// Deterministic discrete-event core: a virtual millisecond clock, an event
/// queue, named random streams, and an append-only JSON-lines log. Two runs
/// with the same seed and the same schedule produce byte-identical logs.
class Simulation {
public:
    explicit Simulation(std::uint64_t seed) : seed_(seed) {}

    Millis now() const { return now_; }
    std::uint64_t seed() const { return seed_; }

    /// Queue `kind` to fire at virtual time `at` (>= now(), else PastDeadline).
    /// The event is logged when it fires, then `action` runs, if any.
    std::uint64_t schedule(Millis at, std::string kind, Json payload = Json::object(),
                           Action action = {});

    /// Append a log line, stamped with the current time, for something that
    /// just happened. Returns the line's id.
    std::uint64_t log(std::string_view kind, const Json& payload = Json::object());

    /// Fire the next pending event. Returns false when the queue is empty.
    bool step();

    /// Fire everything due at or before `t`, including events the fired
    /// actions add within that window, then advance the clock to `t`.
    void run_until(Millis t);

    bool idle() const { return queue_.empty(); }
    std::size_t pending_count() const { return queue_.size(); }
    std::vector<PendingEvent> pending(std::size_t limit = 16) const;

    /// Named stream, created on first use. Seeding depends only on the run
    /// seed and the name, never on creation order.
    RandomStream& rng(std::string_view name);

    const std::vector<std::string>& log_lines() const { return lines_; }
    void dump_log(std::ostream& os) const;

private:
    void append_line(Millis t, std::uint64_t id, std::string_view kind, const Json& payload);
    void fire(Event ev);

    std::uint64_t seed_ = 0;
    Millis now_ = 0;
    std::uint64_t next_id_ = 1;
    std::set<Event, EventOrder> queue_;
    std::map<std::string, RandomStream, std::less<>> streams_;
    std::vector<std::string> lines_;
};

} // namespace vasim::sim

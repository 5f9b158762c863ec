#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "vasim/acoustics.hpp"
#include "vasim/experiments.hpp"
#include "vasim/scenario.hpp"
#include "vasim/world.hpp"

namespace {

using namespace vasim;

constexpr int kExitAcceptanceFail = 1;
constexpr int kExitValidation = 2;

struct Options {
    std::string scenario;
    std::string tables;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    Millis horizon_ms = 0;
    bool horizon_set = false;
    int parallel = 1;
    std::vector<std::string> experiments;
};

acoustics::Tables load_tables_for(const scenario::ScenarioSpec& spec, const Options& o) {
    return acoustics::load_tables(o.tables.empty() ? spec.tables_path : o.tables);
}

scenario::ScenarioSpec load_spec(const Options& o) {
    scenario::ScenarioSpec spec = scenario::ScenarioSpec::load_file(o.scenario);
    if (o.seed_set) spec.seed = o.seed;
    if (o.horizon_set) spec.horizon_ms = o.horizon_ms;
    return spec;
}

Json stream_json(const std::optional<device::AudioStream>& s) {
    if (!s) return nullptr;
    Json j;
    j["kind"] = device::to_string(s->kind);
    j["state"] = device::to_string(s->state);
    j["owner"] = device::to_string(s->owner);
    j["muted"] = s->muted;
    return j;
}

int cmd_run(const Options& o) {
    const scenario::ScenarioSpec base = load_spec(o);
    const acoustics::Tables tables = load_tables_for(base, o);

    // One spec per seed; extra seeds get suffixed output names so a sweep
    // never overwrites itself.
    std::vector<scenario::ScenarioSpec> specs;
    for (int i = 0; i < o.parallel; ++i) {
        scenario::ScenarioSpec spec = base;
        spec.seed = base.seed + std::uint64_t(i);
        if (o.parallel > 1) spec.name += "-seed" + std::to_string(spec.seed);
        specs.push_back(std::move(spec));
    }

    std::vector<std::string> summaries(specs.size());
    std::vector<std::vector<std::string>> paths(specs.size());
    auto worker = [&](std::size_t i) {
        const scenario::ScenarioSpec& spec = specs[i];
        auto runs = scenario::run(spec, tables);
        paths[i] = scenario::write_outputs(spec, runs, o.out_dir);
        std::ostringstream os;
        os << spec.name << " seed " << spec.seed << ":";
        for (const auto& run : runs) {
            const world::Metrics& m = run->world().metrics();
            int recognized = 0;
            for (const auto& [cmd, n] : m.self_issue_recognized) recognized += n;
            os << " [" << run->config_name() << "] events=" << run->sim().log_lines().size()
               << " self-issued-recognized=" << recognized
               << " intercepted=" << m.utterances_intercepted
               << " suppressed=" << m.suppressed_commands;
        }
        summaries[i] = os.str();
    };

    if (specs.size() == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < specs.size(); ++i) threads.emplace_back(worker, i);
        for (auto& t : threads) t.join();
    }

    for (std::size_t i = 0; i < specs.size(); ++i) {
        for (const auto& p : paths[i]) std::cout << "wrote " << p << "\n";
        std::cout << summaries[i] << "\n";
    }
    return 0;
}

int cmd_validate(const Options& o) {
    const scenario::ScenarioSpec spec = scenario::ScenarioSpec::load_file(o.scenario);
    std::cout << "ok: " << spec.name << " (seed " << spec.seed << ", horizon "
              << spec.horizon_ms << " ms)\n";
    return 0;
}

int cmd_reproduce(const Options& o) {
    const std::string tables_path = o.tables.empty() ? "tables/paper-defaults.json" : o.tables;
    const acoustics::Tables tables = acoustics::load_tables(tables_path);
    std::vector<std::string> names =
        o.experiments.empty() ? experiments::experiment_names() : o.experiments;

    bool all_pass = true;
    for (const auto& name : names) {
        const experiments::ExperimentResult result = experiments::run_experiment(name, tables);
        all_pass = all_pass && result.pass();
        std::cout << result.experiment << ": " << (result.pass() ? "PASS" : "FAIL") << " ("
                  << result.checks.size() << " checks)\n";
        for (const auto& c : result.checks) {
            std::cout << "  [" << (c.pass ? "ok" : "FAIL") << "] " << c.name << "\n"
                      << "        expected: " << c.expected << "\n"
                      << "        observed: " << c.observed << "\n";
        }
    }
    return all_pass ? 0 : kExitAcceptanceFail;
}

void repl_help() {
    std::cout << "commands:\n"
                 "  step [n]              fire the next n events (default 1)\n"
                 "  run-until <ms>        fire everything due up to a virtual time\n"
                 "  peek-queue [n]        show the next n pending events (default 8)\n"
                 "  dump-state            device, session, and metrics snapshot\n"
                 "  inject-event <ms> <kind> [json]  schedule a marker event\n"
                 "  quit\n";
}

int cmd_repl(const Options& o) {
    const scenario::ScenarioSpec spec = load_spec(o);
    const acoustics::Tables tables = load_tables_for(spec, o);
    if (!spec.defenses.empty()) {
        std::cout << "note: repl drives the scenario without a defense config\n";
    }
    scenario::LiveRun run(spec, tables, std::nullopt, "repl");
    sim::Simulation& sim = run.sim();
    std::size_t cursor = 0;

    const auto drain = [&] {
        const auto& lines = sim.log_lines();
        for (; cursor < lines.size(); ++cursor) std::cout << "  " << lines[cursor] << "\n";
    };

    std::cout << spec.name << " loaded; horizon " << spec.horizon_ms << " ms, "
              << sim.pending_count() << " events queued. Type 'help' for commands.\n";
    std::string line;
    while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        std::istringstream is(line);
        std::string cmd;
        is >> cmd;
        if (cmd.empty()) continue;
        if (cmd == "quit" || cmd == "exit") break;
        if (cmd == "help") {
            repl_help();
        } else if (cmd == "step") {
            int n = 1;
            is >> n;
            for (int i = 0; i < n && sim.step(); ++i) {
            }
            drain();
        } else if (cmd == "run-until") {
            Millis t = 0;
            if (!(is >> t)) {
                std::cout << "usage: run-until <ms>\n";
                continue;
            }
            sim.run_until(t);
            drain();
        } else if (cmd == "peek-queue") {
            std::size_t n = 8;
            is >> n;
            for (const auto& ev : sim.pending(n)) {
                std::cout << "  t=" << ev.fire_at << " id=" << ev.id << " " << ev.kind << " "
                          << ev.payload.dump() << "\n";
            }
        } else if (cmd == "dump-state") {
            const device::Device& dev = run.world().dev();
            const auto& session = run.world().runtime().session();
            Json j;
            j["now"] = sim.now();
            j["pending"] = sim.pending_count();
            j["device"]["volume"] = dev.volume();
            j["device"]["mic_muted"] = dev.mic_muted();
            j["device"]["fvv_active"] = dev.fvv_active();
            j["device"]["attacker_stream"] = stream_json(dev.attacker_stream());
            j["device"]["user_stream"] = stream_json(dev.user_stream());
            if (session) {
                j["session"]["skill_id"] = session->skill_id;
                j["session"]["state"] =
                    session->state == skill::Session::State::Speaking ? "Speaking" : "Listening";
            } else {
                j["session"] = nullptr;
            }
            j["metrics"] = run.world().metrics().to_json();
            std::cout << j.dump(2) << "\n";
        } else if (cmd == "inject-event") {
            Millis at = 0;
            std::string kind;
            if (!(is >> at >> kind)) {
                std::cout << "usage: inject-event <ms> <kind> [json]\n";
                continue;
            }
            std::string rest;
            std::getline(is, rest);
            Json payload = Json::object();
            if (!rest.empty() && rest.find_first_not_of(' ') != std::string::npos) {
                payload = Json::parse(rest, nullptr, false);
                if (payload.is_discarded()) {
                    std::cout << "payload is not valid json\n";
                    continue;
                }
            }
            try {
                const auto id = sim.schedule(at, kind, payload);
                std::cout << "scheduled id=" << id << " at t=" << at << "\n";
            } catch (const SimError& e) {
                std::cout << to_string(e.code()) << ": " << e.what() << "\n";
            }
        } else {
            std::cout << "unknown command '" << cmd << "'; type 'help'\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic voice-assistant ecosystem simulator"};
    app.require_subcommand(1);
    Options o;

    CLI::App* run = app.add_subcommand("run", "Execute a scenario and write logs and a report");
    run->add_option("scenario", o.scenario, "Scenario JSON file")->required();
    CLI::Option* run_seed = run->add_option("--seed", o.seed, "Override the scenario seed");
    CLI::Option* run_horizon =
        run->add_option("--horizon-ms", o.horizon_ms, "Override the scenario horizon");
    run->add_option("--out-dir", o.out_dir, "Output directory (default: out)");
    run->add_option("--tables", o.tables, "Recognition/audibility tables JSON");
    run->add_option("--parallel", o.parallel, "Run N consecutive seeds concurrently")
        ->check(CLI::Range(1, 256));

    CLI::App* validate =
        app.add_subcommand("validate", "Parse and validate a scenario, writing nothing");
    validate->add_option("scenario", o.scenario, "Scenario JSON file")->required();

    CLI::App* reproduce =
        app.add_subcommand("reproduce", "Re-run the reproduction experiments and check them");
    reproduce->add_option("experiment", o.experiments,
                          "Experiments to run (default: all)")
        ->check(CLI::IsMember(experiments::experiment_names()));
    reproduce->add_option("--tables", o.tables, "Recognition/audibility tables JSON");

    CLI::App* repl = app.add_subcommand("repl", "Step through a scenario interactively");
    repl->add_option("scenario", o.scenario, "Scenario JSON file")->required();
    CLI::Option* repl_seed = repl->add_option("--seed", o.seed, "Override the scenario seed");
    CLI::Option* repl_horizon =
        repl->add_option("--horizon-ms", o.horizon_ms, "Override the scenario horizon");
    repl->add_option("--tables", o.tables, "Recognition/audibility tables JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }
    o.seed_set = run_seed->count() > 0 || repl_seed->count() > 0;
    o.horizon_set = run_horizon->count() > 0 || repl_horizon->count() > 0;

    try {
        if (run->parsed()) return cmd_run(o);
        if (validate->parsed()) return cmd_validate(o);
        if (reproduce->parsed()) return cmd_reproduce(o);
        if (repl->parsed()) return cmd_repl(o);
    } catch (const SimError& e) {
        std::cerr << to_string(e.code()) << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}

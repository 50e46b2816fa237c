// aos: age-of-synchronization / energy evaluation of sleep-wakeup policies.
//
//   aos analyze  --policy n_policy --lambda 2 --n 3
//   aos simulate --policy multi_sleep --horizon 1e5 --dump-path path.csv
//   aos sweep    --config sweep.json --grid 0.1:100:25:log --out lambda.csv
//   aos preset   fig7 --out figures/
//
// Exit status: 0 success, 2 invalid configuration, 1 runtime failure.
#include "aos/sweep.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace aos;

struct ParamFlags {
    std::optional<double> lambda, mu, d, theta, s, p_busy, p_idle, p_sleep, p_wake;
    std::optional<int> n;

    void add(CLI::App &app) {
        app.add_option("--lambda", lambda, "update arrival rate");
        app.add_option("--mu", mu, "service rate");
        app.add_option("--d", d, "mean idle duration");
        app.add_option("--theta", theta, "mean wake-up duration");
        app.add_option("--s", s, "mean sleep period");
        app.add_option("--n", n, "N-policy threshold");
        app.add_option("--p-busy", p_busy, "busy power");
        app.add_option("--p-idle", p_idle, "idle power");
        app.add_option("--p-sleep", p_sleep, "sleep power");
        app.add_option("--p-wake", p_wake, "wake-up power");
    }

    PolicyParams apply(PolicyParams p) const {
        auto set = [](auto &dst, const auto &src) {
            if (src)
                dst = *src;
        };
        set(p.lambda, lambda);
        set(p.mu, mu);
        set(p.d, d);
        set(p.theta, theta);
        set(p.s, s);
        set(p.n, n);
        set(p.p_busy, p_busy);
        set(p.p_idle, p_idle);
        set(p.p_sleep, p_sleep);
        set(p.p_wake, p_wake);
        return p;
    }
};

struct SimFlags {
    std::optional<double> horizon, warmup, max_events;
    std::optional<std::uint64_t> seed;
    std::optional<int> batches;

    void add(CLI::App &app) {
        app.add_option("--horizon", horizon, "simulated time per replication");
        app.add_option("--warmup", warmup, "discarded prefix per replication");
        app.add_option("--batches", batches, "independent replications");
        app.add_option("--seed", seed, "random seed");
        app.add_option("--max-events", max_events, "per-replication event cap");
    }

    SimConfig apply(SimConfig c) const {
        if (horizon)
            c.horizon = *horizon;
        if (warmup)
            c.warmup = *warmup;
        if (max_events)
            c.max_events = *max_events;
        if (seed)
            c.seed = *seed;
        if (batches)
            c.batches = *batches;
        return c;
    }
};

nlohmann::json load_json(const std::string &path) {
    std::ifstream f(path);
    if (!f)
        throw InvalidConfig("cannot read config '" + path + "'");
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error &e) {
        throw InvalidConfig("config '" + path + "': " + e.what());
    }
}

PolicyKind require_policy(const std::string &name) {
    const auto k = parse_policy(name);
    if (!k)
        throw InvalidConfig("unknown policy '" + name + "' (expected n_policy, single_sleep or multi_sleep)");
    return *k;
}

Mode require_mode(const std::string &name) {
    const auto m = parse_mode(name);
    if (!m)
        throw InvalidConfig("unknown mode '" + name + "' (expected analytical, simulate or both)");
    return *m;
}

void write_points(const std::vector<TradeoffPoint> &points, const std::string &out) {
    if (out.empty() || out == "-")
        write_csv(points, std::cout);
    else
        emit_csv(points, out);
}

/// "min:max:count[:log|linear]" or a comma-separated list of values.
std::vector<double> parse_grid(const std::string &text) {
    std::vector<std::string> parts;
    const char sep = text.find(':') != std::string::npos ? ':' : ',';
    std::size_t start = 0;
    while (true) {
        const auto at = text.find(sep, start);
        parts.push_back(text.substr(start, at - start));
        if (at == std::string::npos)
            break;
        start = at + 1;
    }
    try {
        if (sep == ':') {
            if (parts.size() < 3 || parts.size() > 4)
                throw InvalidConfig("grid must be min:max:count[:log|linear]");
            const std::string scale = parts.size() == 4 ? parts[3] : "linear";
            if (scale != "log" && scale != "linear")
                throw InvalidConfig("grid scale must be log or linear");
            return make_grid(std::stod(parts[0]), std::stod(parts[1]), std::stoi(parts[2]), scale == "log");
        }
        std::vector<double> values;
        for (const auto &p : parts)
            values.push_back(std::stod(p));
        return values;
    } catch (const std::logic_error &) {
        throw InvalidConfig("cannot parse grid '" + text + "'");
    }
}

int run(int argc, char **argv) {
    CLI::App app{"Age-of-synchronization and energy of sleep-wakeup policies"};
    app.require_subcommand(1);

    // analyze / simulate
    std::string policy = "n_policy", config_path, out, dump_path;
    std::size_t dump_points = 10000;
    ParamFlags pflags;
    SimFlags sflags;

    auto *analyze_cmd = app.add_subcommand("analyze", "analytical AoS and power for one parameter tuple");
    auto *simulate_cmd = app.add_subcommand("simulate", "Monte Carlo AoS and power for one parameter tuple");
    for (auto *cmd : {analyze_cmd, simulate_cmd}) {
        cmd->add_option("--policy", policy, "n_policy | single_sleep | multi_sleep");
        cmd->add_option("--config", config_path, "JSON with optional 'params' and 'sim' objects");
        cmd->add_option("--out", out, "CSV destination (default stdout)");
        pflags.add(*cmd);
    }
    sflags.add(*simulate_cmd);
    simulate_cmd->add_option("--dump-path", dump_path, "write the first replication's sample path as CSV");
    simulate_cmd->add_option("--dump-points", dump_points, "maximum rows in the sample-path dump");

    // sweep
    std::vector<std::string> sweep_policies;
    std::string sweep_param, grid, mode_name;
    auto *sweep_cmd = app.add_subcommand("sweep", "evaluate a parameter grid");
    sweep_cmd->add_option("--config", config_path, "JSON sweep specification");
    sweep_cmd->add_option("--policy", sweep_policies, "policies to include")->delimiter(',');
    sweep_cmd->add_option("--sweep", sweep_param, "lambda | d | theta | s | n");
    sweep_cmd->add_option("--grid", grid, "min:max:count[:log] or v1,v2,...");
    sweep_cmd->add_option("--mode", mode_name, "analytical | simulate | both");
    sweep_cmd->add_option("--out", out, "CSV destination (default stdout)");
    pflags.add(*sweep_cmd);
    sflags.add(*sweep_cmd);

    // preset
    std::string preset_name, out_dir = ".";
    bool gnuplot = true;
    auto *preset_cmd = app.add_subcommand("preset", "run the sweeps behind a trade-off figure");
    preset_cmd->add_option("name", preset_name, "fig7 | fig8 | fig9 | fig10")->required();
    preset_cmd->add_option("--mode", mode_name, "analytical | simulate | both");
    preset_cmd->add_option("--out", out_dir, "output directory");
    preset_cmd->add_flag("!--no-gnuplot", gnuplot, "skip the gnuplot script");
    sflags.add(*preset_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    }

    if (*analyze_cmd || *simulate_cmd) {
        PolicyParams params;
        SimConfig sim;
        if (!config_path.empty()) {
            const auto j = load_json(config_path);
            if (j.contains("params"))
                params = params_from_json(j.at("params"));
            if (j.contains("sim"))
                sim = sim_from_json(j.at("sim"));
            if (j.contains("policy") && j.at("policy").is_string() && policy == "n_policy")
                policy = j.at("policy").get<std::string>();
        }
        params = pflags.apply(params);
        sim = sflags.apply(sim);
        const auto kind = require_policy(policy);
        const Mode mode = *analyze_cmd ? Mode::Analytical : Mode::Simulate;
        write_points(run_point(kind, params, mode, sim), out);
        if (*simulate_cmd && !dump_path.empty()) {
            std::ofstream f(dump_path);
            if (!f)
                throw std::runtime_error("cannot open '" + dump_path + "' for writing");
            write_path_csv(sample_path(kind, params, sim, dump_points), f);
        }
        return 0;
    }

    if (*sweep_cmd) {
        SweepSpec spec;
        if (!config_path.empty())
            spec = sweep_from_json(load_json(config_path));
        if (!sweep_policies.empty()) {
            spec.policies.clear();
            for (const auto &p : sweep_policies)
                spec.policies.push_back(require_policy(p));
        }
        if (!sweep_param.empty()) {
            const auto p = parse_swept_param(sweep_param);
            if (!p)
                throw InvalidConfig("unknown sweep parameter '" + sweep_param + "'");
            spec.param = *p;
        }
        if (!grid.empty())
            spec.values = parse_grid(grid);
        if (!mode_name.empty())
            spec.mode = require_mode(mode_name);
        spec.fixed = pflags.apply(spec.fixed);
        spec.sim = sflags.apply(spec.sim);
        if (spec.values.empty())
            spec.values = {swept_value(spec.fixed, spec.param)};
        write_points(run_sweep(spec), out);
        return 0;
    }

    // preset
    const auto runs = preset(preset_name);
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> files;
    for (auto run : runs) {
        if (!mode_name.empty())
            run.spec.mode = require_mode(mode_name);
        run.spec.sim = sflags.apply(run.spec.sim);
        const auto file = run.name + ".csv";
        emit_csv(run_sweep(run.spec), std::filesystem::path(out_dir) / file);
        files.push_back(file);
        std::cerr << "wrote " << (std::filesystem::path(out_dir) / file).string() << '\n';
    }
    if (gnuplot) {
        const auto script = std::filesystem::path(out_dir) / (preset_name + ".gp");
        std::ofstream f(script);
        if (!f)
            throw std::runtime_error("cannot open '" + script.string() + "' for writing");
        write_gnuplot(f, preset_name, files);
        std::cerr << "wrote " << script.string() << " (run with: cd " << out_dir << " && gnuplot " << preset_name
                  << ".gp)\n";
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    try {
        return run(argc, argv);
    } catch (const aos::InvalidParams &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const aos::InvalidConfig &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

#include "aos/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace aos {

std::string_view to_string(Mode mode) {
    switch (mode) {
    case Mode::Analytical:
        return "analytical";
    case Mode::Simulate:
        return "simulate";
    case Mode::Both:
        return "both";
    }
    return "?";
}

std::string_view to_string(Source source) { return source == Source::Analytical ? "analytical" : "simulated"; }

std::string_view to_string(SweptParam param) {
    switch (param) {
    case SweptParam::Lambda:
        return "lambda";
    case SweptParam::D:
        return "d";
    case SweptParam::Theta:
        return "theta";
    case SweptParam::S:
        return "s";
    case SweptParam::N:
        return "n";
    }
    return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
    for (auto m : {Mode::Analytical, Mode::Simulate, Mode::Both})
        if (to_string(m) == s)
            return m;
    if (s == "simulated")
        return Mode::Simulate;
    return std::nullopt;
}

std::optional<Source> parse_source(std::string_view s) {
    for (auto v : {Source::Analytical, Source::Simulated})
        if (to_string(v) == s)
            return v;
    return std::nullopt;
}

std::optional<SweptParam> parse_swept_param(std::string_view s) {
    for (auto p : {SweptParam::Lambda, SweptParam::D, SweptParam::Theta, SweptParam::S, SweptParam::N})
        if (to_string(p) == s)
            return p;
    if (s == "N")
        return SweptParam::N;
    return std::nullopt;
}

bool applies(SweptParam param, PolicyKind kind) {
    if (param == SweptParam::S)
        return kind != PolicyKind::NPolicy;
    if (param == SweptParam::N)
        return kind == PolicyKind::NPolicy;
    return true;
}

PolicyParams with_swept(PolicyParams p, SweptParam param, double value) {
    switch (param) {
    case SweptParam::Lambda:
        p.lambda = value;
        break;
    case SweptParam::D:
        p.d = value;
        break;
    case SweptParam::Theta:
        p.theta = value;
        break;
    case SweptParam::S:
        p.s = value;
        break;
    case SweptParam::N:
        if (!(value >= 1) || value != std::floor(value) || value > kMaxN)
            throw InvalidParams("n", "sweep value " + format_double(value) + " is not an integer in [1, " +
                                         std::to_string(kMaxN) + "]");
        p.n = static_cast<int>(value);
        break;
    }
    return p;
}

double swept_value(const PolicyParams &p, SweptParam param) {
    switch (param) {
    case SweptParam::Lambda:
        return p.lambda;
    case SweptParam::D:
        return p.d;
    case SweptParam::Theta:
        return p.theta;
    case SweptParam::S:
        return p.s;
    case SweptParam::N:
        return p.n;
    }
    return 0;
}

std::vector<double> make_grid(double min, double max, int count, bool log_scale) {
    if (count < 1)
        throw InvalidConfig("grid count must be at least 1");
    if (!std::isfinite(min) || !std::isfinite(max) || min > max)
        throw InvalidConfig("grid bounds must be finite with min <= max");
    if (log_scale && !(min > 0))
        throw InvalidConfig("log grid needs a positive minimum");
    if (count == 1)
        return {min};
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / (count - 1);
        out[i] = log_scale ? std::exp(std::log(min) + f * (std::log(max) - std::log(min))) : min + f * (max - min);
    }
    // Endpoints exactly as given.
    out.front() = min;
    out.back() = max;
    return out;
}

void validate(const SweepSpec &spec) {
    if (spec.policies.empty())
        throw InvalidConfig("sweep needs at least one policy");
    if (spec.values.empty())
        throw InvalidConfig("sweep needs at least one value");
    if (std::none_of(spec.policies.begin(), spec.policies.end(), [&](auto k) { return applies(spec.param, k); }))
        throw InvalidConfig("sweeping '" + std::string(to_string(spec.param)) + "' applies to none of the policies");
    validate(spec.fixed);
    for (double v : spec.values)
        validate(with_swept(spec.fixed, spec.param, v));
    if (spec.mode != Mode::Analytical)
        validate(spec.sim);
}

std::string describe(PolicyKind kind, const PolicyParams &p) {
    std::ostringstream os;
    os << to_string(kind) << "(lambda=" << format_double(p.lambda) << ", mu=" << format_double(p.mu)
       << ", d=" << format_double(p.d) << ", theta=" << format_double(p.theta) << ", s=" << format_double(p.s)
       << ", n=" << p.n << ", P=(" << format_double(p.p_busy) << ", " << format_double(p.p_idle) << ", "
       << format_double(p.p_sleep) << ", " << format_double(p.p_wake) << "))";
    return os.str();
}

std::vector<TradeoffPoint> run_point(PolicyKind kind, const PolicyParams &params, Mode mode, const SimConfig &sim,
                                     SweptParam swept) {
    std::vector<TradeoffPoint> out;
    const double value = swept_value(params, swept);
    try {
        validate(params);
        if (mode != Mode::Simulate) {
            const auto r = analyze(kind, params);
            out.push_back({kind, swept, value, r.avg_aos, r.avg_power, Source::Analytical, std::nullopt, std::nullopt});
        }
        if (mode != Mode::Analytical) {
            const auto e = simulate(kind, params, sim);
            out.push_back({kind, swept, value, e.avg_aos.mean, e.avg_power.mean, Source::Simulated,
                           e.avg_aos.std_error, e.avg_power.std_error});
        }
    } catch (const InvalidParams &e) {
        throw InvalidParams(e.param(), e.reason() + " at " + describe(kind, params));
    } catch (const InvalidConfig &) {
        throw;
    } catch (const std::exception &e) {
        throw PointError(std::string(e.what()) + " at " + describe(kind, params));
    }
    return out;
}

std::vector<TradeoffPoint> run_sweep(const SweepSpec &spec) {
    validate(spec);
    std::vector<double> values = spec.values;
    std::sort(values.begin(), values.end());

    std::vector<TradeoffPoint> out;
    std::uint64_t index = 0;
    for (auto kind : kAllPolicies) {
        if (std::find(spec.policies.begin(), spec.policies.end(), kind) == spec.policies.end() ||
            !applies(spec.param, kind))
            continue;
        for (double v : values) {
            SimConfig sim = spec.sim;
            sim.seed = stream_seed(spec.sim.seed, (1ULL << 32) + index++);
            auto pts = run_point(kind, with_swept(spec.fixed, spec.param, v), spec.mode, sim, spec.param);
            out.insert(out.end(), pts.begin(), pts.end());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

std::string format_double(double x) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{})
        throw std::runtime_error("cannot format number");
    return std::string(buf, end);
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
    double x = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw std::runtime_error("csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return x;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

} // namespace

void write_csv(const std::vector<TradeoffPoint> &points, std::ostream &out) {
    out << kCsvHeader << '\n';
    for (const auto &p : points) {
        out << to_string(p.policy) << ',' << to_string(p.swept_param) << ',' << format_double(p.swept_value) << ','
            << format_double(p.avg_aos) << ',' << format_double(p.avg_power) << ',' << to_string(p.source) << ','
            << (p.aos_se ? format_double(*p.aos_se) : "") << ',' << (p.power_se ? format_double(*p.power_se) : "")
            << '\n';
    }
}

void emit_csv(const std::vector<TradeoffPoint> &points, const std::filesystem::path &destination) {
    if (points.empty())
        throw std::invalid_argument("emit_csv: no points to write");
    std::ofstream f(destination);
    if (!f)
        throw std::runtime_error("cannot open '" + destination.string() + "' for writing");
    write_csv(points, f);
    f.flush();
    if (!f)
        throw std::runtime_error("write to '" + destination.string() + "' failed");
}

std::vector<TradeoffPoint> read_csv(std::istream &in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::runtime_error("csv: missing or unexpected header");
    std::vector<TradeoffPoint> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const auto f = split(line);
        if (f.size() != 8)
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected 8 fields");
        TradeoffPoint p;
        const auto kind = parse_policy(f[0]);
        const auto param = parse_swept_param(f[1]);
        const auto source = parse_source(f[5]);
        if (!kind || !param || !source)
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": bad label");
        p.policy = *kind;
        p.swept_param = *param;
        p.swept_value = parse_double(f[2], lineno);
        p.avg_aos = parse_double(f[3], lineno);
        p.avg_power = parse_double(f[4], lineno);
        p.source = *source;
        if (!f[6].empty())
            p.aos_se = parse_double(f[6], lineno);
        if (!f[7].empty())
            p.power_se = parse_double(f[7], lineno);
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

template <typename T> void read_field(const nlohmann::json &j, const char *key, T &dst) {
    if (!j.contains(key))
        return;
    try {
        dst = j.at(key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw InvalidConfig(std::string("field '") + key + "': " + e.what());
    }
}

void require_object(const nlohmann::json &j, const char *what) {
    if (!j.is_object())
        throw InvalidConfig(std::string(what) + " must be a JSON object");
}

} // namespace

PolicyParams params_from_json(const nlohmann::json &j, PolicyParams p) {
    require_object(j, "params");
    read_field(j, "lambda", p.lambda);
    read_field(j, "mu", p.mu);
    read_field(j, "d", p.d);
    read_field(j, "theta", p.theta);
    read_field(j, "s", p.s);
    read_field(j, "n", p.n);
    read_field(j, "p_busy", p.p_busy);
    read_field(j, "p_idle", p.p_idle);
    read_field(j, "p_sleep", p.p_sleep);
    read_field(j, "p_wake", p.p_wake);
    return p;
}

SimConfig sim_from_json(const nlohmann::json &j, SimConfig c) {
    require_object(j, "sim");
    read_field(j, "horizon", c.horizon);
    read_field(j, "warmup", c.warmup);
    read_field(j, "seed", c.seed);
    read_field(j, "batches", c.batches);
    read_field(j, "max_events", c.max_events);
    return c;
}

SweepSpec sweep_from_json(const nlohmann::json &j) {
    require_object(j, "sweep config");
    SweepSpec spec;
    if (j.contains("params"))
        spec.fixed = params_from_json(j.at("params"));
    if (j.contains("sim"))
        spec.sim = sim_from_json(j.at("sim"));
    if (j.contains("mode")) {
        const auto m = j.at("mode").is_string() ? parse_mode(j.at("mode").get<std::string>()) : std::nullopt;
        if (!m)
            throw InvalidConfig("mode must be one of analytical, simulate, both");
        spec.mode = *m;
    }
    if (j.contains("policies")) {
        if (!j.at("policies").is_array())
            throw InvalidConfig("policies must be an array of policy names");
        spec.policies.clear();
        for (const auto &name : j.at("policies")) {
            const auto k = name.is_string() ? parse_policy(name.get<std::string>()) : std::nullopt;
            if (!k)
                throw InvalidConfig("unknown policy " + name.dump());
            spec.policies.push_back(*k);
        }
    }
    if (j.contains("sweep")) {
        const auto &s = j.at("sweep");
        require_object(s, "sweep");
        if (s.contains("param")) {
            const auto p = s.at("param").is_string() ? parse_swept_param(s.at("param").get<std::string>()) : std::nullopt;
            if (!p)
                throw InvalidConfig("sweep.param must be one of lambda, d, theta, s, n");
            spec.param = *p;
        }
        if (s.contains("values")) {
            read_field(s, "values", spec.values);
        } else if (s.contains("min") || s.contains("max") || s.contains("count")) {
            double min = 0, max = 0;
            int count = 0;
            std::string scale = "linear";
            read_field(s, "min", min);
            read_field(s, "max", max);
            read_field(s, "count", count);
            read_field(s, "scale", scale);
            if (scale != "linear" && scale != "log")
                throw InvalidConfig("sweep.scale must be linear or log");
            spec.values = make_grid(min, max, count, scale == "log");
        }
    }
    if (spec.values.empty())
        spec.values = {swept_value(spec.fixed, spec.param)};
    return spec;
}

nlohmann::json to_json(const PolicyParams &p) {
    return {{"lambda", p.lambda}, {"mu", p.mu},         {"d", p.d},           {"theta", p.theta},
            {"s", p.s},           {"n", p.n},           {"p_busy", p.p_busy}, {"p_idle", p.p_idle},
            {"p_sleep", p.p_sleep}, {"p_wake", p.p_wake}};
}

nlohmann::json to_json(const SimConfig &c) {
    return {{"horizon", c.horizon}, {"warmup", c.warmup}, {"seed", c.seed}, {"batches", c.batches},
            {"max_events", c.max_events}};
}

nlohmann::json to_json(const SweepSpec &spec) {
    nlohmann::json policies = nlohmann::json::array();
    for (auto k : spec.policies)
        policies.push_back(std::string(to_string(k)));
    return {{"policies", policies},
            {"sweep", {{"param", std::string(to_string(spec.param))}, {"values", spec.values}}},
            {"params", to_json(spec.fixed)},
            {"mode", std::string(to_string(spec.mode))},
            {"sim", to_json(spec.sim)}};
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

std::vector<PresetRun> preset(std::string_view name) {
    // Shared figure baseline: mu = 1, N = s = 1, d = theta = 1, default powers.
    SweepSpec base;
    base.sim.horizon = 1e5;
    const auto log_grid = make_grid(0.1, 10, 9, true);

    auto at_lambda = [&](double lambda, SweptParam param, std::vector<double> values,
                         std::vector<PolicyKind> policies = {kAllPolicies.begin(), kAllPolicies.end()}) {
        SweepSpec s = base;
        s.fixed.lambda = lambda;
        s.param = param;
        s.values = std::move(values);
        s.policies = std::move(policies);
        return s;
    };
    auto stem = [](std::string_view fig, std::string_view what, double lambda) {
        return std::string(fig) + "_" + std::string(what) + "_lambda" + format_double(lambda);
    };

    std::vector<PresetRun> out;
    if (name == "fig7") {
        SweepSpec s = base;
        s.param = SweptParam::Lambda;
        s.values = make_grid(0.1, 100, 25, true);
        out.push_back({"fig7_lambda", s});
    } else if (name == "fig8" || name == "fig9") {
        const auto param = name == "fig8" ? SweptParam::D : SweptParam::Theta;
        for (double lambda : {0.5, 2.0})
            out.push_back({stem(name, to_string(param), lambda), at_lambda(lambda, param, log_grid)});
    } else if (name == "fig10") {
        std::vector<double> ns{1, 2, 3, 4, 5, 6, 7, 8};
        for (double lambda : {0.5, 2.0, 20.0}) {
            out.push_back({stem(name, "n", lambda), at_lambda(lambda, SweptParam::N, ns, {PolicyKind::NPolicy})});
            out.push_back({stem(name, "s", lambda), at_lambda(lambda, SweptParam::S, log_grid,
                                                              {PolicyKind::SingleSleep, PolicyKind::MultiSleep})});
        }
    } else {
        throw InvalidConfig("unknown preset '" + std::string(name) + "' (expected fig7, fig8, fig9 or fig10)");
    }
    return out;
}

void write_gnuplot(std::ostream &out, std::string_view title, const std::vector<std::string> &csv_files) {
    out << "# Age-energy trade-off: average AoS against average power.\n"
        << "set terminal pngcairo size 900,600\n"
        << "set datafile separator ','\n"
        << "set xlabel 'average power E[P]'\n"
        << "set ylabel 'average AoS'\n"
        << "set key outside right\n"
        << "set grid\n"
        << "policies = 'n_policy single_sleep multi_sleep'\n";
    for (const auto &f : csv_files) {
        out << "\nset title '" << title << " (" << f << ")'\n"
            << "set output '" << f.substr(0, f.rfind('.')) << ".png'\n"
            << "plot for [p in policies] '" << f
            << "' using (strcol(1) eq p && strcol(6) eq 'analytical' ? $5 : NaN):4 with linespoints title p, \\\n"
            << "     for [p in policies] '" << f
            << "' using (strcol(1) eq p && strcol(6) eq 'simulated' ? $5 : NaN):4 with points title p.' (sim)'\n";
    }
    out << "set output\n";
}

} // namespace aos

#include "aos/desim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <thread>

namespace aos {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// xoshiro256** seeded through splitmix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        for (auto &w : s_) {
            seed = splitmix64(seed);
            w = seed;
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double exponential_rate(double rate) { return -std::log1p(-uniform()) / rate; }
    double exponential_mean(double mean) { return -std::log1p(-uniform()) * mean; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_{};
};

// Accumulates time integrals over [warmup, horizon].
struct Window {
    double begin;
    double end;

    /// Clipped overlap of [t0, t1] with the window, or zero length.
    std::pair<double, double> clip(double t0, double t1) const {
        return {std::max(t0, begin), std::min(t1, end)};
    }
    double length() const { return end - begin; }
};

struct Replication {
    double avg_aos = 0;
    double avg_power = 0;
    std::map<std::string, double> fraction;
    std::uint64_t events = 0;
};

template <typename Fn> std::vector<Replication> run_replications(int batches, Fn &&fn) {
    std::vector<Replication> out(static_cast<std::size_t>(batches));
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), batches));
    if (workers == 1) {
        for (int b = 0; b < batches; ++b)
            out[b] = fn(b);
        return out;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (int b = static_cast<int>(w); b < batches; b += static_cast<int>(workers))
                out[b] = fn(b);
        });
    for (auto &t : pool)
        t.join();
    return out;
}

Estimate batch_estimate(const std::vector<Replication> &reps, double Replication::*field) {
    const double n = static_cast<double>(reps.size());
    double sum = 0;
    for (const auto &r : reps)
        sum += r.*field;
    const double mean = sum / n;
    double ss = 0;
    for (const auto &r : reps)
        ss += (r.*field - mean) * (r.*field - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

SimEstimate merge(const std::vector<Replication> &reps) {
    SimEstimate e;
    e.avg_aos = batch_estimate(reps, &Replication::avg_aos);
    e.avg_power = batch_estimate(reps, &Replication::avg_power);
    const double n = static_cast<double>(reps.size());
    for (const auto &r : reps) {
        e.events += r.events;
        for (const auto &[k, v] : r.fraction)
            e.time_fraction[k] += v / n;
    }
    for (const auto &[k, mean] : e.time_fraction) {
        double ss = 0;
        for (const auto &r : reps) {
            const auto it = r.fraction.find(k);
            const double x = it == r.fraction.end() ? 0.0 : it->second;
            ss += (x - mean) * (x - mean);
        }
        e.time_fraction_se[k] = std::sqrt(ss / (n - 1.0) / n);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Physical system
// ---------------------------------------------------------------------------

class PhysicalRun {
  public:
    PhysicalRun(PolicyKind kind, const PolicyParams &p, const SimConfig &cfg, std::uint64_t seed,
                std::vector<PathPoint> *path = nullptr, std::size_t max_points = 0)
        : kind_(kind), p_(p), window_{cfg.warmup, cfg.horizon}, max_events_(cfg.max_events), rng_(seed), path_(path),
          max_points_(max_points) {}

    Replication run() {
        calendar_[kArrival] = rng_.exponential_rate(p_.lambda);
        calendar_[kTimer] = rng_.exponential_mean(p_.d);
        record(EventKind::Start);

        while (true) {
            // Lowest index wins ties: completion, then timer, then arrival.
            std::size_t next = 0;
            for (std::size_t i = 1; i < calendar_.size(); ++i)
                if (calendar_[i] < calendar_[next])
                    next = i;
            const double t = calendar_[next];
            if (t > window_.end) {
                advance(window_.end);
                break;
            }
            advance(t);
            if (static_cast<double>(++events_) > max_events_)
                throw std::runtime_error("simulation exceeded the event cap of " + std::to_string(max_events_));
            switch (next) {
            case kCompletion:
                on_completion();
                record(EventKind::ServiceCompletion);
                break;
            case kTimer:
                on_timer();
                record(EventKind::PhaseTimer);
                break;
            default:
                on_arrival();
                record(EventKind::Arrival);
                break;
            }
            if (path_ && path_->size() >= max_points_)
                break;
        }

        Replication r;
        const double len = window_.length();
        r.avg_aos = aos_integral_ / len;
        r.avg_power = energy_ / len;
        for (std::size_t i = 0; i < phase_time_.size(); ++i)
            r.fraction[kPhaseNames[i]] = phase_time_[i] / len;
        r.events = events_;
        return r;
    }

  private:
    static constexpr std::size_t kCompletion = 0, kTimer = 1, kArrival = 2;
    static constexpr std::array<const char *, 4> kPhaseNames{"busy", "idle", "sleep", "wakeup"};

    static std::size_t phase_class(Phase ph) {
        switch (ph) {
        case Phase::Busy:
            return 0;
        case Phase::Idle:
        case Phase::IdlePostWake:
            return 1;
        case Phase::Sleep:
            return 2;
        case Phase::WakeUp:
            return 3;
        }
        return 0;
    }

    double phase_power() const {
        switch (phase_) {
        case Phase::Busy:
            return p_.p_busy;
        case Phase::Idle:
        case Phase::IdlePostWake:
            return p_.p_idle;
        case Phase::Sleep:
            return p_.p_sleep;
        case Phase::WakeUp:
            return p_.p_wake;
        }
        return 0;
    }

    void advance(double t) {
        const auto [a, b] = window_.clip(now_, t);
        if (b > a) {
            const double dt = b - a;
            phase_time_[phase_class(phase_)] += dt;
            energy_ += phase_power() * dt;
            if (!sync_.synchronized())
                aos_integral_ += 0.5 * (sync_.aos(a) + sync_.aos(b)) * dt;
        }
        now_ = t;
    }

    void start_service() {
        phase_ = Phase::Busy;
        calendar_[kTimer] = kNever;
        calendar_[kCompletion] = now_ + rng_.exponential_rate(p_.mu);
    }

    void start_wakeup() {
        phase_ = Phase::WakeUp;
        calendar_[kTimer] = now_ + rng_.exponential_mean(p_.theta);
    }

    void on_arrival() {
        sync_.on_update(now_);
        calendar_[kArrival] = now_ + rng_.exponential_rate(p_.lambda);
        switch (phase_) {
        case Phase::Busy:
            // Preemption: the new packet restarts service.
            calendar_[kCompletion] = now_ + rng_.exponential_rate(p_.mu);
            break;
        case Phase::Idle:
        case Phase::IdlePostWake:
            start_service();
            break;
        case Phase::Sleep:
            if (kind_ == PolicyKind::NPolicy) {
                if (++count_ == p_.n)
                    start_wakeup();
            } else {
                has_packet_ = true;
            }
            break;
        case Phase::WakeUp:
            has_packet_ = true;
            break;
        }
    }

    void on_completion() {
        sync_.on_refresh(now_);
        phase_ = Phase::Idle;
        calendar_[kCompletion] = kNever;
        calendar_[kTimer] = now_ + rng_.exponential_mean(p_.d);
    }

    void on_timer() {
        switch (phase_) {
        case Phase::Idle:
            phase_ = Phase::Sleep;
            count_ = 0;
            has_packet_ = false;
            calendar_[kTimer] = kind_ == PolicyKind::NPolicy ? kNever : now_ + rng_.exponential_mean(p_.s);
            break;
        case Phase::Sleep:
            if (kind_ == PolicyKind::MultiSleep && !has_packet_)
                calendar_[kTimer] = now_ + rng_.exponential_mean(p_.s);
            else
                start_wakeup();
            break;
        case Phase::WakeUp:
            if (kind_ == PolicyKind::NPolicy || has_packet_) {
                has_packet_ = false;
                start_service();
            } else {
                phase_ = Phase::IdlePostWake;
                calendar_[kTimer] = kNever;
            }
            break;
        case Phase::Busy:
        case Phase::IdlePostWake:
            throw std::logic_error("phase timer fired in a phase without a timer");
        }
    }

    void record(EventKind kind) {
        if (path_ && path_->size() < max_points_)
            path_->push_back({now_, sync_.aos(now_), phase_, kind});
    }

    PolicyKind kind_;
    const PolicyParams &p_;
    Window window_;
    double max_events_;
    Rng rng_;
    std::vector<PathPoint> *path_;
    std::size_t max_points_;

    std::array<double, 3> calendar_{kNever, kNever, kNever};
    double now_ = 0;
    Phase phase_ = Phase::Idle;
    int count_ = 0;
    bool has_packet_ = false;
    SyncTracker sync_;

    double aos_integral_ = 0;
    double energy_ = 0;
    std::array<double, 4> phase_time_{};
    std::uint64_t events_ = 0;
};

double total_rate(PolicyKind kind, const PolicyParams &p) {
    double r = p.lambda + p.mu + 1.0 / p.d + 1.0 / p.theta;
    if (kind != PolicyKind::NPolicy)
        r += 1.0 / p.s;
    return r;
}

void check_budget(double rate, const SimConfig &cfg) {
    if (cfg.horizon * rate > cfg.max_events)
        throw InvalidConfig("horizon x total rate (" + std::to_string(cfg.horizon * rate) +
                            ") exceeds the event cap of " + std::to_string(cfg.max_events));
}

// ---------------------------------------------------------------------------
// Generic SHS
// ---------------------------------------------------------------------------

Replication run_generic(const ShsModel<double> &model, const SimConfig &cfg, std::uint64_t seed) {
    const std::size_t n = model.size();
    std::vector<std::vector<std::size_t>> out(n);
    for (std::size_t l = 0; l < model.transitions.size(); ++l)
        out[model.transitions[l].from].push_back(l);
    const Vector<double> exit = model.exit_rates();

    Rng rng(seed);
    const Window window{cfg.warmup, cfg.horizon};
    std::vector<double> state_time(n, 0.0);
    double x_integral = 0, energy = 0, x = 0, now = 0;
    std::size_t q = 0;
    std::uint64_t events = 0;

    while (now < window.end) {
        const double t = std::min(now + rng.exponential_rate(exit(q)), window.end);
        const auto [a, b] = window.clip(now, t);
        const auto &ann = model.states[q].annotation;
        if (b > a) {
            const double dt = b - a;
            const double xa = x + ann.growth * (a - now);
            x_integral += xa * dt + 0.5 * ann.growth * dt * dt;
            energy += ann.power * dt;
            state_time[q] += dt;
        }
        x += ann.growth * (t - now);
        now = t;
        if (now >= window.end)
            break;
        if (static_cast<double>(++events) > cfg.max_events)
            throw std::runtime_error("simulation exceeded the event cap");

        double pick = rng.uniform() * exit(q);
        std::size_t chosen = out[q].back();
        for (auto l : out[q]) {
            pick -= model.transitions[l].rate;
            if (pick < 0) {
                chosen = l;
                break;
            }
        }
        const auto &tr = model.transitions[chosen];
        x *= tr.reset;
        q = tr.to;
    }

    Replication r;
    r.avg_aos = x_integral / window.length();
    r.avg_power = energy / window.length();
    for (std::size_t i = 0; i < n; ++i)
        r.fraction[model.states[i].id.label] = state_time[i] / window.length();
    r.events = events;
    return r;
}

} // namespace

void validate(const SimConfig &c) {
    if (!(c.horizon > 0) || !std::isfinite(c.horizon))
        throw InvalidConfig("horizon must be positive and finite");
    if (!(c.warmup >= 0) || !(c.warmup < c.horizon))
        throw InvalidConfig("warmup must satisfy 0 <= warmup < horizon");
    if (c.batches < 2)
        throw InvalidConfig("batches must be at least 2");
    if (!(c.max_events > 0))
        throw InvalidConfig("max_events must be positive");
}

bool operator==(const Estimate &a, const Estimate &b) { return a.mean == b.mean && a.std_error == b.std_error; }

bool operator==(const SimEstimate &a, const SimEstimate &b) {
    return a.avg_aos == b.avg_aos && a.avg_power == b.avg_power && a.time_fraction == b.time_fraction && a.time_fraction_se == b.time_fraction_se &&
           a.events == b.events;
}

std::string_view phase_label(Phase phase) {
    switch (phase) {
    case Phase::Busy:
        return "B";
    case Phase::Idle:
        return "ID";
    case Phase::IdlePostWake:
        return "ID0";
    case Phase::Sleep:
        return "SL";
    case Phase::WakeUp:
        return "WK";
    }
    return "?";
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t batch) {
    return splitmix64(splitmix64(seed) ^ splitmix64(batch + 0x632be59bd9b4e019ULL));
}

SimEstimate simulate(PolicyKind kind, const PolicyParams &params, const SimConfig &config) {
    validate(params);
    validate(config);
    check_budget(total_rate(kind, params), config);
    const auto reps = run_replications(config.batches, [&](int b) {
        return PhysicalRun(kind, params, config, stream_seed(config.seed, b)).run();
    });
    return merge(reps);
}

std::vector<PathPoint> sample_path(PolicyKind kind, const PolicyParams &params, const SimConfig &config,
                                   std::size_t max_points) {
    validate(params);
    validate(config);
    check_budget(total_rate(kind, params), config);
    std::vector<PathPoint> path;
    PhysicalRun(kind, params, config, stream_seed(config.seed, 0), &path, max_points).run();
    return path;
}

void write_path_csv(const std::vector<PathPoint> &path, std::ostream &out) {
    out << "time,aos,phase_label\n";
    const auto old = out.precision(17);
    for (const auto &pt : path)
        out << pt.time << ',' << pt.aos << ',' << phase_label(pt.phase) << '\n';
    out.precision(old);
}

SimEstimate simulate_generic(const ShsModel<double> &model, const SimConfig &config) {
    validate(config);
    if (const auto diags = validate_model(model); !diags.empty())
        throw std::invalid_argument("simulate_generic: invalid model: " + diags.front().message);
    double rate = 0;
    for (const auto &t : model.transitions)
        rate = std::max(rate, t.rate);
    check_budget(rate, config);
    const auto reps = run_replications(config.batches, [&](int b) {
        return run_generic(model, config, stream_seed(config.seed, b));
    });
    return merge(reps);
}

} // namespace aos

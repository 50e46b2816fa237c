// Discrete-event Monte Carlo simulation of the status-update system.
//
// `simulate` runs the physical system (Poisson updates, preemptive
// exponential service, sleep/wake state machine) and measures the age of
// synchronization straight from its definition. `simulate_generic` runs an
// arbitrary SHS model with competing exponential clocks. The two paths share
// only the estimator plumbing.
#pragma once

#include "aos/policies.hpp"
#include "aos/shs.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace aos {

class InvalidConfig : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct SimConfig {
    double horizon = 1e6; ///< simulated time per replication
    double warmup = 1e3;  ///< discarded prefix of each replication
    std::uint64_t seed = 1;
    int batches = 10;
    double max_events = 1e9; ///< per-replication event cap
};

void validate(const SimConfig &config);

/// Batch mean with its standard error (sample std / sqrt(batches)).
struct Estimate {
    double mean = 0;
    double std_error = 0;
};

struct SimEstimate {
    Estimate avg_aos;
    Estimate avg_power;
    /// Time fraction per phase ("busy", "idle", "sleep", "wakeup") for
    /// `simulate`, per state label for `simulate_generic`.
    std::map<std::string, double> time_fraction;
    std::map<std::string, double> time_fraction_se;
    std::uint64_t events = 0; ///< total across replications
};

bool operator==(const Estimate &a, const Estimate &b);
bool operator==(const SimEstimate &a, const SimEstimate &b);

/// Server phase of the physical simulator.
enum class Phase { Busy, Idle, IdlePostWake, Sleep, WakeUp };

std::string_view phase_label(Phase phase);

/// Earliest unsynchronized update time u(t); empty while synchronized.
class SyncTracker {
  public:
    void on_update(double t) {
        if (!pending_)
            pending_ = t;
    }
    void on_refresh(double t) {
        pending_.reset();
        last_refresh_ = t;
    }
    bool synchronized() const { return !pending_.has_value(); }
    double aos(double t) const { return pending_ ? std::max(t - *pending_, 0.0) : 0.0; }
    double last_refresh() const { return last_refresh_; }

  private:
    std::optional<double> pending_;
    double last_refresh_ = 0.0;
};

enum class EventKind { Start, Arrival, ServiceCompletion, PhaseTimer };

/// One row of a sample path, taken right after an event is applied.
struct PathPoint {
    double time = 0;
    double aos = 0;
    Phase phase = Phase::Idle;
    EventKind event = EventKind::Start;
};

SimEstimate simulate(PolicyKind kind, const PolicyParams &params, const SimConfig &config);

/// Event log of the first replication of `simulate`, truncated to
/// `max_points` rows.
std::vector<PathPoint> sample_path(PolicyKind kind, const PolicyParams &params, const SimConfig &config,
                                   std::size_t max_points);

/// CSV with header `time,aos,phase_label`.
void write_path_csv(const std::vector<PathPoint> &path, std::ostream &out);

SimEstimate simulate_generic(const ShsModel<double> &model, const SimConfig &config);

/// Independent stream for replication `batch` of a run seeded with `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t batch);

} // namespace aos

// Parameter sweeps over the wake-up policies and their CSV / JSON / gnuplot
// representations.
#pragma once

#include "aos/desim.hpp"
#include "aos/policies.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aos {

enum class Mode { Analytical, Simulate, Both };
enum class Source { Analytical, Simulated };
enum class SweptParam { Lambda, D, Theta, S, N };

std::string_view to_string(Mode mode);
std::string_view to_string(Source source);
std::string_view to_string(SweptParam param);
std::optional<Mode> parse_mode(std::string_view s);
std::optional<Source> parse_source(std::string_view s);
std::optional<SweptParam> parse_swept_param(std::string_view s);

/// Whether sweeping `param` is meaningful for `kind` (s has no effect on the
/// N-policy, N only exists for it).
bool applies(SweptParam param, PolicyKind kind);

/// Copy of `params` with the swept field set to `value`.
PolicyParams with_swept(PolicyParams params, SweptParam param, double value);

double swept_value(const PolicyParams &params, SweptParam param);

/// `count` points from `min` to `max`, linearly or geometrically spaced.
std::vector<double> make_grid(double min, double max, int count, bool log_scale);

struct SweepSpec {
    std::vector<PolicyKind> policies{kAllPolicies.begin(), kAllPolicies.end()};
    SweptParam param = SweptParam::Lambda;
    std::vector<double> values;
    PolicyParams fixed;
    Mode mode = Mode::Analytical;
    SimConfig sim;
};

/// Throws InvalidConfig / InvalidParams.
void validate(const SweepSpec &spec);

struct TradeoffPoint {
    PolicyKind policy = PolicyKind::NPolicy;
    SweptParam swept_param = SweptParam::Lambda;
    double swept_value = 0;
    double avg_aos = 0;
    double avg_power = 0;
    Source source = Source::Analytical;
    std::optional<double> aos_se;
    std::optional<double> power_se;

    bool operator==(const TradeoffPoint &) const = default;
};

/// Runtime failure of one evaluation, tagged with its parameter tuple.
class PointError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string describe(PolicyKind kind, const PolicyParams &params);

/// Analytical and/or simulated evaluation of a single parameter tuple. The
/// swept column defaults to lambda.
std::vector<TradeoffPoint> run_point(PolicyKind kind, const PolicyParams &params, Mode mode, const SimConfig &sim,
                                     SweptParam swept = SweptParam::Lambda);

/// Every applicable (policy, value) pair ordered by policy then value.
/// Simulation seeds derive from (sim.seed, point index).
std::vector<TradeoffPoint> run_sweep(const SweepSpec &spec);

inline constexpr std::string_view kCsvHeader = "policy,swept_param,swept_value,avg_aos,avg_power,source,aos_se,power_se";

void write_csv(const std::vector<TradeoffPoint> &points, std::ostream &out);
/// Writes to a file; failures name the path.
void emit_csv(const std::vector<TradeoffPoint> &points, const std::filesystem::path &destination);
std::vector<TradeoffPoint> read_csv(std::istream &in);

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

// JSON configuration. Missing fields keep their defaults.
PolicyParams params_from_json(const nlohmann::json &j, PolicyParams base = {});
SimConfig sim_from_json(const nlohmann::json &j, SimConfig base = {});
SweepSpec sweep_from_json(const nlohmann::json &j);
nlohmann::json to_json(const PolicyParams &p);
nlohmann::json to_json(const SimConfig &c);
nlohmann::json to_json(const SweepSpec &spec);

struct PresetRun {
    std::string name; ///< file stem, e.g. "fig8_lambda0.5"
    SweepSpec spec;
};

inline constexpr std::array<std::string_view, 4> kPresetNames{"fig7", "fig8", "fig9", "fig10"};

/// Sweeps behind one trade-off figure; throws InvalidConfig for unknown names.
std::vector<PresetRun> preset(std::string_view name);

/// gnuplot script plotting average AoS against average power per policy for
/// each CSV file.
void write_gnuplot(std::ostream &out, std::string_view title, const std::vector<std::string> &csv_files);

} // namespace aos

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "departnet/cohort.hpp"
#include "departnet/metrics.hpp"

namespace departnet {

// Opaque per-employee attributes. Only is_manager enters matching; the rest
// feed the heterogeneous-effects model.
struct EmployeeAttributes {
    bool is_manager = false;
    bool leader = false;
    bool senior = false;
    bool gender = false;

    friend bool operator==(const EmployeeAttributes&, const EmployeeAttributes&) = default;
};
using AttributeTable = std::vector<EmployeeAttributes>;  // indexed by EmployeeId

// `employee,is_manager,leader,senior,gender`; employees absent from the roster are ignored.
AttributeTable read_attributes(std::istream& in, const Roster& roster);
void write_attributes(std::ostream& out, const Roster& roster, const AttributeTable& attributes);

enum class FeatureAveraging { active_weeks, all_weeks };

struct MatchFeatures {
    EmployeeId ego = 0;
    int week = 0;
    double connections = 0;
    double volume = 0;
    double clustering = 0;
    double is_manager = 0;

    [[nodiscard]] std::array<double, 4> vector() const { return {connections, volume, clustering, is_manager}; }
};

// Freeze-window mean of the employee's individual metrics; nullopt when the
// employee is inactive in every window week.
std::optional<MatchFeatures> compute_match_features(EmployeeId employee, int anchor_week, const GraphSeries& graphs,
                                                    const NodeMetricTable& table, const WindowSpec& window,
                                                    bool is_manager,
                                                    FeatureAveraging averaging = FeatureAveraging::active_weeks);

struct MatchOptions {
    int k = 20;
    int m = 3;
    int exclusion_weeks = 4;
    std::uint64_t seed = 0;
    FeatureAveraging averaging = FeatureAveraging::active_weeks;
    bool exact_manager = false;
};

struct MatchAssignment {
    EmployeeId treated_ego = 0;
    int t_star = 0;
    std::vector<EmployeeId> controls;
    std::vector<double> distances;  // ascending, aligned with controls

    friend bool operator==(const MatchAssignment&, const MatchAssignment&) = default;
};

// Controls matched at week w stay ineligible through week w + exclusion_weeks.
class ExclusionLedger {
public:
    explicit ExclusionLedger(int exclusion_weeks = 4) : window_(exclusion_weeks) {}
    [[nodiscard]] bool excluded(EmployeeId id, int week) const;
    void record(EmployeeId id, int week);

private:
    int window_;
    std::unordered_map<EmployeeId, int> last_matched_;
};

// Z-scored feature vector of a pool candidate.
struct Candidate {
    EmployeeId id = 0;
    std::array<double, 4> z{};
    bool is_manager = false;
};

// Mean / population standard deviation of each feature over a week's pool.
struct Standardizer {
    std::array<double, 4> mean{};
    std::array<double, 4> sd{};

    static Standardizer fit(std::span<const MatchFeatures> pool);
    [[nodiscard]] std::array<double, 4> apply(const MatchFeatures& f) const;  // sd 0 maps to 0
};

// Uniform integer in [0, n) without modulo bias; portable across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

// The k nearest eligible candidates (distance, then id), of which m are drawn
// uniformly without replacement. `pool` must already exclude the treated
// ego's neighbors and departing employees; ledger exclusions apply here and
// the selected controls are recorded. nullopt when fewer than m remain.
std::optional<MatchAssignment> find_matches(EmployeeId treated, int t_star, const std::array<double, 4>& treated_z,
                                            std::span<const Candidate> pool, const MatchOptions& options,
                                            ExclusionLedger& ledger, std::mt19937_64& rng);

struct CohortMatch {
    std::vector<MatchAssignment> assignments;
    std::size_t dropped_no_features = 0;
    std::size_t dropped_small_pool = 0;
};

// Matches every departure, processing anchor weeks in order and egos by id
// within a week. `neighbor_sets` gives each departure's freeze-window
// neighbors (the treated socialization set members).
CohortMatch match_departures(std::span<const DepartureEvent> departures,
                             const std::vector<std::vector<EmployeeId>>& neighbor_sets, const GraphSeries& graphs,
                             const NodeMetricTable& table, const AttributeTable& attributes, std::size_t roster_size,
                             const WindowSpec& window, const MatchOptions& options);

void write_assignments(std::ostream& out, const std::vector<MatchAssignment>& assignments, const Roster& roster);
std::vector<MatchAssignment> read_assignments(std::istream& in, const Roster& roster);

struct DistanceBin {
    int anchor_week = 0;
    double lo = 0;
    double hi = 0;
    std::size_t count = 0;
};

struct QuantileRow {
    Metric metric = Metric::closeness;
    bool treated = true;
    std::size_t n = 0;
    std::array<double, 5> q{};  // 5%, 25%, 50%, 75%, 95%
};

struct MatchDiagnostics {
    std::vector<DistanceBin> histogram;
    std::vector<QuantileRow> quantiles;
};

// Per-anchor-week distance histograms and pre-departure (t < 0) metric
// quantiles for treated vs control series.
MatchDiagnostics match_diagnostics(std::span<const MatchAssignment> assignments,
                                   std::span<const MetricSeries> series, double bin_width = 0.25);

void write_histogram(std::ostream& out, const std::vector<DistanceBin>& bins);
void write_quantiles(std::ostream& out, const std::vector<QuantileRow>& rows);

}  // namespace departnet

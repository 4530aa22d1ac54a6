#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scalestore/consistency.hpp"
#include "scalestore/record.hpp"

namespace scalestore {

struct Observation {
    std::int64_t tick = 0;
    NodeId node = 0;
    double request_rate = 0;  // req/s seen by this node
    std::vector<double> latency_ms;
    std::int64_t headroom_ms = 0;
    std::int64_t successes = 0;
    std::int64_t failures = 0;
};

struct RateBucket {
    double low = 0;  // [low, low + width)
    std::size_t samples = 0;
    double percentile_ms = 0;
    double violation_fraction = 0;  // samples above the SLA bound
};

struct PerfModel {
    double capacity = 0;  // req/s per node
    std::string method = "bucketed-empirical-quantile";
    std::size_t confidence = 0;  // observations used
    double bucket_width = 10;
    std::vector<RateBucket> buckets;  // ascending by rate

    // Expected fraction of requests over the latency bound at a per-node
    // rate; rates past the last observed bucket reuse that bucket.
    double predicted_violation(double per_node_rate) const;
};

struct ModelConfig {
    double bucket_width = 10;
    std::size_t min_observations = 50;
};

// Buckets observations by per-node rate and takes the SLA percentile of each
// bucket's latency samples (nearest rank). Capacity is the lower edge of the
// first bucket whose percentile exceeds the bound; with no such bucket it is
// the upper edge of the highest observed bucket.
PerfModel fit_model(const std::vector<Observation>& observations, const LatencySla& sla,
                    const ModelConfig& config = {});

int target_node_count(double forecast_rate, const PerfModel& model, double utilization_target = 0.8,
                      int min_nodes = 2);

// (node count, predicted violation fraction) for 1..max_nodes.
std::vector<std::pair<int, double>> violation_table(double forecast_rate, const PerfModel& model, int max_nodes);

struct ScalingAction {
    enum class Kind { none, add_nodes, remove_nodes };
    Kind kind = Kind::none;
    int n = 0;
    std::string reason;
    double cost_delta_node_hours = 0;
};

std::string to_string(const ScalingAction& action);

struct HysteresisState {
    std::int64_t window_ms = 30 * 60 * 1000;
    std::optional<LogicalTime> below_since;
};

// Adds immediately when the target is above the current count or a lag
// alarm is active; removes only after the target has stayed below the
// current count for the whole window with no alarm.
ScalingAction plan_scaling(int current_nodes, int target, bool lag_alarm, HysteresisState& hysteresis,
                           LogicalTime now, double interval_hours = 1.0);

// Exponentially weighted moving average of the total request rate.
class Forecaster {
public:
    explicit Forecaster(double half_life_ms = 10 * 60 * 1000, double safety = 1.2)
        : half_life_ms_(half_life_ms), safety_(safety) {}

    void observe(double rate, double dt_ms);
    double smoothed() const { return value_; }
    double forecast() const { return value_ * safety_; }

private:
    double half_life_ms_;
    double safety_;
    double value_ = 0;
    bool primed_ = false;
};

// Where one partition's replicas go after a change in the node set.
struct PartitionMove {
    std::string index;
    std::uint64_t partition = 0;
    std::vector<NodeId> from;
    std::vector<NodeId> to;
    std::int64_t bytes = 0;  // data copied onto new replicas
};

// Round-robin placement: the i-th partition (in a global order) is
// replicated on live_nodes[(i + j) % N] for j < min(R, N).
std::vector<NodeId> place_replicas(std::size_t ordinal, const std::vector<NodeId>& live_nodes, int replicas);

}  // namespace scalestore

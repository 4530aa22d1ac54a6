#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scalestore/consistency.hpp"
#include "scalestore/faults.hpp"
#include "scalestore/query.hpp"
#include "scalestore/schema.hpp"
#include "scalestore/workload.hpp"

namespace scalestore {

// Cluster and controller constants. Service-time figures are synthetic.
struct ControllerConfig {
    bool autoscale = true;
    std::int64_t interval_ms = 300000;
    int min_nodes = 2;
    int initial_nodes = 2;
    int max_nodes = 64;
    double utilization_target = 0.8;
    double bucket_width = 10;
    std::size_t min_observations = 50;
    std::size_t observation_window = 4000;
    double half_life_min = 10;
    double safety = 1.2;
    double hysteresis_min = 30;
    double headroom_fraction = 0.2;
    double service_rate = 100;     // req/s one node completes
    double service_time_ms = 5;    // fixed part of every request
    std::int64_t ops_per_node_tick = 2000;  // maintenance ops per node per tick
    int partitions_per_index = 64;
    int samples_per_node = 20;     // latency samples per node per tick
    double assumed_failure_prob = 0.01;  // for replicas_for when faults has none
    std::optional<int> replicas;
};

struct ScaleDownCheck {
    double baseline_until_h = 0;  // pre-spike baseline = max nodes before this
    double check_from_h = 0;      // nodes must stay <= factor * baseline from here on
    double factor = 2;
};

struct AcceptanceSpec {
    std::optional<double> min_success_fraction;
    std::optional<std::pair<double, double>> success_window_h;
    std::optional<std::int64_t> max_deadline_misses;
    std::optional<ScaleDownCheck> scale_down;
    std::optional<std::int64_t> max_over_bound_reads;

    bool declared() const {
        return min_success_fraction || max_deadline_misses || scale_down || max_over_bound_reads;
    }
};

struct Scenario {
    std::filesystem::path path;
    std::uint64_t seed = 0;
    double duration_h = 1;
    std::int64_t tick_ms = 60000;
    Schema schema;
    std::vector<QueryTemplate> templates;
    ConsistencySpec spec;
    WorkloadSpec workload;
    FaultSpec faults;
    ControllerConfig controller;
    AcceptanceSpec acceptance;

    std::int64_t ticks() const;
    int replicas() const;
};

// Relative file paths resolve against `base_dir`. Throws ScenarioError, or
// the parse error of a referenced file.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace scalestore

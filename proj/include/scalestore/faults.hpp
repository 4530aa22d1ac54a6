#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include <json.hpp>

#include "scalestore/record.hpp"

namespace scalestore {

// While active, the last `isolate_fraction` of nodes (by id) form side B;
// clients sit on side A.
struct PartitionInterval {
    double start_h = 0;
    double end_h = 0;
    double isolate_fraction = 0.5;

    bool active(double t_h) const { return t_h >= start_h && t_h < end_h; }
};

struct FaultSpec {
    double node_failure_prob = 0;  // per node per epoch
    double epoch_min = 10;
    std::vector<PartitionInterval> partitions;

    std::int64_t epoch_ms() const { return static_cast<std::int64_t>(epoch_min * 60000.0); }
};

FaultSpec faults_from_json(const nlohmann::json& doc, double duration_h);

struct FaultEvents {
    std::vector<NodeId> failed;
    const PartitionInterval* partition = nullptr;  // active interval, if any
};

// Node failures are drawn once per epoch boundary, one Bernoulli trial per
// live node in id order.
FaultEvents inject_faults(const FaultSpec& spec, LogicalTime now, const std::vector<NodeId>& live_nodes,
                          std::mt19937_64& rng);

std::set<NodeId> isolated_side(const std::vector<NodeId>& nodes, double fraction);

struct DurabilityResult {
    int replicas = 0;
    std::int64_t trials = 0;  // replica-group epochs
    std::int64_t losses = 0;
    double observed = 0;
    double predicted = 0;  // p^R
    double standard_error = 0;

    bool within(double k_standard_errors) const;
};

// Disjoint replica groups of size replicas_for(target, p), failed through
// inject_faults for `epochs` epochs; a loss is an epoch in which every
// member of a group fails.
DurabilityResult durability_monte_carlo(double node_failure_prob, double durability_target, std::int64_t epochs,
                                        int groups, std::uint64_t seed);

}  // namespace scalestore

#include "scalestore/faults.hpp"

#include <algorithm>
#include <cmath>

#include "scalestore/consistency.hpp"
#include "scalestore/errors.hpp"

namespace scalestore {

FaultSpec faults_from_json(const nlohmann::json& doc, double duration_h) {
    FaultSpec f;
    try {
        for (const auto& [k, v] : doc.items()) {
            if (k != "node_failure_prob" && k != "epoch_min" && k != "partitions") {
                throw ScenarioError("unknown faults key '" + k + "'");
            }
        }
        f.node_failure_prob = doc.value("node_failure_prob", 0.0);
        f.epoch_min = doc.value("epoch_min", f.epoch_min);
        for (const auto& p : doc.value("partitions", nlohmann::json::array())) {
            f.partitions.push_back({p.at("start_h").get<double>(), p.at("end_h").get<double>(),
                                    p.value("isolate_fraction", 0.5)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(std::string("faults: ") + e.what());
    }
    if (f.node_failure_prob < 0 || f.node_failure_prob >= 1) {
        throw ScenarioError("faults: node_failure_prob must be in [0, 1)");
    }
    if (f.epoch_min <= 0) throw ScenarioError("faults: epoch_min must be positive");
    for (const auto& p : f.partitions) {
        if (p.start_h < 0 || p.end_h <= p.start_h || p.end_h > duration_h) {
            throw ScenarioError("faults: partition interval must lie within the scenario duration");
        }
        if (p.isolate_fraction <= 0 || p.isolate_fraction >= 1) {
            throw ScenarioError("faults: isolate_fraction must be in (0, 1)");
        }
    }
    return f;
}

FaultEvents inject_faults(const FaultSpec& spec, LogicalTime now, const std::vector<NodeId>& live_nodes,
                          std::mt19937_64& rng) {
    FaultEvents ev;
    double t_h = static_cast<double>(now) / 3.6e6;
    for (const auto& p : spec.partitions) {
        if (p.active(t_h)) {
            ev.partition = &p;
            break;
        }
    }
    if (spec.node_failure_prob > 0 && now > 0 && now % spec.epoch_ms() == 0) {
        std::bernoulli_distribution fails(spec.node_failure_prob);
        for (auto n : live_nodes) {
            if (fails(rng)) ev.failed.push_back(n);
        }
    }
    return ev;
}

std::set<NodeId> isolated_side(const std::vector<NodeId>& nodes, double fraction) {
    std::vector<NodeId> sorted = nodes;
    std::sort(sorted.begin(), sorted.end());
    auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sorted.size())));
    k = std::min(k, sorted.size());
    return std::set<NodeId>(sorted.end() - static_cast<std::ptrdiff_t>(k), sorted.end());
}

bool DurabilityResult::within(double k) const {
    return std::abs(observed - predicted) <= k * standard_error;
}

DurabilityResult durability_monte_carlo(double node_failure_prob, double durability_target, std::int64_t epochs,
                                        int groups, std::uint64_t seed) {
    DurabilityResult r;
    r.replicas = replicas_for(durability_target, node_failure_prob);
    std::vector<NodeId> nodes;
    for (int i = 0; i < groups * r.replicas; ++i) nodes.push_back(i);
    FaultSpec spec;
    spec.node_failure_prob = node_failure_prob;
    spec.epoch_min = 1;
    std::mt19937_64 rng(seed);
    std::vector<int> failed_in_group(static_cast<std::size_t>(groups));
    for (std::int64_t e = 1; e <= epochs; ++e) {
        auto ev = inject_faults(spec, e * spec.epoch_ms(), nodes, rng);
        std::fill(failed_in_group.begin(), failed_in_group.end(), 0);
        for (auto n : ev.failed) ++failed_in_group[static_cast<std::size_t>(n / r.replicas)];
        for (int c : failed_in_group) {
            if (c == r.replicas) ++r.losses;
        }
        // Failed nodes are replaced by fresh ones before the next epoch, so
        // the node set is unchanged.
    }
    r.trials = epochs * groups;
    r.observed = static_cast<double>(r.losses) / static_cast<double>(r.trials);
    r.predicted = std::pow(node_failure_prob, r.replicas);
    r.standard_error = std::sqrt(r.predicted * (1 - r.predicted) / static_cast<double>(r.trials));
    return r;
}

}  // namespace scalestore

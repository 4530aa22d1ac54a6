#include "scalestore/provisioner.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "scalestore/errors.hpp"

namespace scalestore {

double PerfModel::predicted_violation(double per_node_rate) const {
    if (buckets.empty()) return 0;
    for (const auto& b : buckets) {
        if (per_node_rate < b.low + bucket_width) return b.violation_fraction;
    }
    return buckets.back().violation_fraction;
}

PerfModel fit_model(const std::vector<Observation>& observations, const LatencySla& sla, const ModelConfig& config) {
    if (observations.size() < config.min_observations) {
        throw InsufficientData("need " + std::to_string(config.min_observations) + " observations, have " +
                               std::to_string(observations.size()));
    }
    std::map<std::int64_t, std::vector<double>> by_bucket;
    for (const auto& o : observations) {
        auto b = static_cast<std::int64_t>(std::floor(o.request_rate / config.bucket_width));
        auto& v = by_bucket[b];
        v.insert(v.end(), o.latency_ms.begin(), o.latency_ms.end());
    }

    PerfModel model;
    model.bucket_width = config.bucket_width;
    model.confidence = observations.size();
    std::optional<double> first_violation;
    double highest_edge = 0;
    for (auto& [b, samples] : by_bucket) {
        if (samples.empty()) continue;
        auto rank = static_cast<std::size_t>(std::ceil(sla.percentile * static_cast<double>(samples.size())));
        rank = std::clamp<std::size_t>(rank, 1, samples.size());
        std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1), samples.end());
        RateBucket rb;
        rb.low = static_cast<double>(b) * config.bucket_width;
        rb.samples = samples.size();
        rb.percentile_ms = samples[rank - 1];
        auto over = std::count_if(samples.begin(), samples.end(),
                                  [&](double x) { return x > static_cast<double>(sla.bound_ms); });
        rb.violation_fraction = static_cast<double>(over) / static_cast<double>(samples.size());
        if (!first_violation && rb.percentile_ms > static_cast<double>(sla.bound_ms)) first_violation = rb.low;
        highest_edge = std::max(highest_edge, rb.low + config.bucket_width);
        model.buckets.push_back(rb);
    }
    model.capacity = first_violation ? std::max(*first_violation, 1.0) : std::max(highest_edge, 1.0);
    return model;
}

int target_node_count(double forecast_rate, const PerfModel& model, double utilization_target, int min_nodes) {
    double per_node = model.capacity * utilization_target;
    if (forecast_rate <= 0 || per_node <= 0) return min_nodes;
    auto n = static_cast<int>(std::ceil(forecast_rate / per_node - 1e-9));
    return std::max(n, min_nodes);
}

std::vector<std::pair<int, double>> violation_table(double forecast_rate, const PerfModel& model, int max_nodes) {
    std::vector<std::pair<int, double>> out;
    for (int n = 1; n <= max_nodes; ++n) {
        out.emplace_back(n, model.predicted_violation(forecast_rate / n));
    }
    return out;
}

std::string to_string(const ScalingAction& action) {
    switch (action.kind) {
    case ScalingAction::Kind::add_nodes: return "add(" + std::to_string(action.n) + ")";
    case ScalingAction::Kind::remove_nodes: return "remove(" + std::to_string(action.n) + ")";
    case ScalingAction::Kind::none: break;
    }
    return "none";
}

ScalingAction plan_scaling(int current_nodes, int target, bool lag_alarm, HysteresisState& hysteresis,
                           LogicalTime now, double interval_hours) {
    ScalingAction a;
    if (target > current_nodes) {
        hysteresis.below_since.reset();
        a.kind = ScalingAction::Kind::add_nodes;
        a.n = target - current_nodes;
        a.reason = "forecast needs " + std::to_string(target) + " nodes";
    } else if (lag_alarm) {
        hysteresis.below_since.reset();
        a.kind = ScalingAction::Kind::add_nodes;
        a.n = 1;
        a.reason = "maintenance queue at risk of missing deadlines";
    } else if (target < current_nodes) {
        if (!hysteresis.below_since) hysteresis.below_since = now;
        if (now - *hysteresis.below_since >= hysteresis.window_ms) {
            a.kind = ScalingAction::Kind::remove_nodes;
            a.n = current_nodes - target;
            a.reason = "target below current for the hysteresis window";
            hysteresis.below_since.reset();
        }
    } else {
        hysteresis.below_since.reset();
    }
    double sign = a.kind == ScalingAction::Kind::remove_nodes ? -1.0 : 1.0;
    a.cost_delta_node_hours = sign * a.n * interval_hours;
    return a;
}

void Forecaster::observe(double rate, double dt_ms) {
    if (!primed_) {
        value_ = rate;
        primed_ = true;
        return;
    }
    double alpha = 1.0 - std::exp2(-dt_ms / half_life_ms_);
    value_ += alpha * (rate - value_);
}

std::vector<NodeId> place_replicas(std::size_t ordinal, const std::vector<NodeId>& live_nodes, int replicas) {
    std::vector<NodeId> out;
    if (live_nodes.empty()) return out;
    auto n = live_nodes.size();
    auto r = std::min<std::size_t>(static_cast<std::size_t>(std::max(replicas, 1)), n);
    for (std::size_t j = 0; j < r; ++j) out.push_back(live_nodes[(ordinal + j) % n]);
    return out;
}

}  // namespace scalestore

#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "scalestore/metrics.hpp"
#include "scalestore/provisioner.hpp"
#include "scalestore/scenario.hpp"

namespace scalestore {

struct RunResult {
    MetricsLog log;
    PerfModel model;  // last fitted model
    int replicas = 0;
    std::int64_t max_task_ops = 0;
    std::int64_t max_op_budget = 0;
};

// Runs the scenario on a single logical timeline. With `trace` set, one
// "tick,queue_depth,min_headroom_ms,tasks_applied,deadline_misses" line is
// written per tick. Deadline-order breaks and unflagged over-bound reads are
// counted in the log, not thrown.
RunResult run_scenario(const Scenario& scenario, std::ostream* trace = nullptr);

inline MetricsLog run(const Scenario& scenario) { return run_scenario(scenario).log; }

// Latency of one request at a node offered `rate` req/s, `backlog` requests
// already queued (M/M/1 sojourn plus fixed service time, in ms).
double sample_latency_ms(std::mt19937_64& rng, double rate, double backlog, const ControllerConfig& c);

// Observations from a synthetic load sweep over per-node rates, used to
// seed the performance model before any live traffic is seen.
std::vector<Observation> profiling_sweep(const ControllerConfig& c, std::uint64_t seed);

}  // namespace scalestore

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scalestore/scenario.hpp"

namespace scalestore {

// One row per tick. Counters are per tick unless marked cumulative.
struct MetricsRow {
    std::int64_t tick = 0;
    std::int64_t time_ms = 0;
    double active_users = 0;
    double request_rate = 0;  // client req/s offered to the cluster
    int nodes = 0;
    double latency_p50_ms = 0;
    double latency_p99_ms = 0;
    double success_fraction = 1;  // within latency bound x not failed
    std::int64_t reads = 0;       // data outcomes
    std::int64_t writes = 0;
    std::int64_t stale_reads = 0;           // served flagged stale
    std::int64_t over_bound_reads = 0;      // data with staleness > bound
    std::int64_t unflagged_over_bound = 0;  // over bound and not flagged
    std::int64_t failed_reads = 0;
    std::int64_t stalled_reads = 0;
    std::int64_t staleness_p50_ms = 0;
    std::int64_t staleness_max_ms = 0;
    std::int64_t queue_depth = 0;
    std::int64_t min_headroom_ms = 0;
    std::int64_t tasks_applied = 0;
    std::int64_t deadline_misses = 0;
    std::int64_t order_violations = 0;  // cumulative
    double node_hours = 0;              // cumulative
    double cost_per_user = 0;           // cumulative node-hours / active-user-hours
    std::int64_t arbitration_events = 0;
    std::int64_t data_loss_events = 0;
    int partition_active = 0;
    std::int64_t bytes_moved = 0;
    std::string action = "none";

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct MetricsLog {
    std::vector<MetricsRow> rows;
};

const std::vector<std::string>& metrics_columns();
std::string csv_header();
std::string format_row(const MetricsRow& row);
std::string to_csv(const MetricsLog& log);
// Throws SchemaMismatch on a header or field that does not match.
MetricsLog parse_csv(std::string_view text);

struct Summary {
    std::size_t ticks = 0;
    double hours = 0;
    double p99_max_ms = 0;
    double p99_mean_ms = 0;
    double success_mean = 1;  // weighted by request rate
    std::int64_t reads = 0;
    std::int64_t writes = 0;
    std::int64_t stale_reads = 0;
    std::int64_t over_bound_reads = 0;
    std::int64_t unflagged_over_bound = 0;
    std::int64_t failed_reads = 0;
    std::int64_t stalled_reads = 0;
    std::int64_t staleness_max_ms = 0;
    std::int64_t deadline_misses = 0;
    std::int64_t order_violations = 0;
    std::int64_t arbitration_events = 0;
    std::int64_t data_loss_events = 0;
    std::int64_t bytes_moved = 0;
    int peak_nodes = 0;
    int final_nodes = 0;
    double node_hours = 0;
    double cost_per_user = 0;
};

Summary summarize(const MetricsLog& log);
std::string format_summary(const Summary& s);

// Request-weighted success over rows with time in [from_h, to_h).
double success_over(const MetricsLog& log, double from_h, double to_h);
// Node-hours per active-user-hour accumulated over rows in [from_h, to_h).
double cost_per_user_over(const MetricsLog& log, double from_h, double to_h);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<CheckResult> evaluate_acceptance(const MetricsLog& log, const AcceptanceSpec& acceptance);

// Fixed-size character plot of one series against the tick axis.
std::string ascii_plot(const std::string& title, const std::vector<double>& series, int width = 72,
                       int height = 12);
// Text report: summary plus latency, staleness, node and cost plots.
std::string render_report(const MetricsLog& log);

}  // namespace scalestore

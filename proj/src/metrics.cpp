#include "scalestore/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "scalestore/errors.hpp"

namespace scalestore {

namespace {

struct Column {
    std::string name;
    std::function<std::string(const MetricsRow&)> get;
    std::function<bool(MetricsRow&, std::string_view)> set;
};

template <typename T>
Column int_column(std::string name, T MetricsRow::*member) {
    return {std::move(name), [member](const MetricsRow& r) { return std::to_string(r.*member); },
            [member](MetricsRow& r, std::string_view s) {
                T v{};
                auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
                if (ec != std::errc{} || p != s.data() + s.size()) return false;
                r.*member = v;
                return true;
            }};
}

Column double_column(std::string name, double MetricsRow::*member, int precision) {
    return {std::move(name),
            [member, precision](const MetricsRow& r) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.*f", precision, r.*member);
                return std::string(buf);
            },
            [member](MetricsRow& r, std::string_view s) {
                std::string copy(s);
                char* end = nullptr;
                double v = std::strtod(copy.c_str(), &end);
                if (copy.empty() || end != copy.c_str() + copy.size() || !std::isfinite(v)) return false;
                r.*member = v;
                return true;
            }};
}

const std::vector<Column>& columns() {
    static const std::vector<Column> cols = [] {
        std::vector<Column> c;
        c.push_back(int_column("tick", &MetricsRow::tick));
        c.push_back(int_column("time_ms", &MetricsRow::time_ms));
        c.push_back(double_column("active_users", &MetricsRow::active_users, 3));
        c.push_back(double_column("request_rate", &MetricsRow::request_rate, 3));
        c.push_back(int_column("nodes", &MetricsRow::nodes));
        c.push_back(double_column("latency_p50_ms", &MetricsRow::latency_p50_ms, 3));
        c.push_back(double_column("latency_p99_ms", &MetricsRow::latency_p99_ms, 3));
        c.push_back(double_column("success_fraction", &MetricsRow::success_fraction, 6));
        c.push_back(int_column("reads", &MetricsRow::reads));
        c.push_back(int_column("writes", &MetricsRow::writes));
        c.push_back(int_column("stale_reads", &MetricsRow::stale_reads));
        c.push_back(int_column("over_bound_reads", &MetricsRow::over_bound_reads));
        c.push_back(int_column("unflagged_over_bound", &MetricsRow::unflagged_over_bound));
        c.push_back(int_column("failed_reads", &MetricsRow::failed_reads));
        c.push_back(int_column("stalled_reads", &MetricsRow::stalled_reads));
        c.push_back(int_column("staleness_p50_ms", &MetricsRow::staleness_p50_ms));
        c.push_back(int_column("staleness_max_ms", &MetricsRow::staleness_max_ms));
        c.push_back(int_column("queue_depth", &MetricsRow::queue_depth));
        c.push_back(int_column("min_headroom_ms", &MetricsRow::min_headroom_ms));
        c.push_back(int_column("tasks_applied", &MetricsRow::tasks_applied));
        c.push_back(int_column("deadline_misses", &MetricsRow::deadline_misses));
        c.push_back(int_column("order_violations", &MetricsRow::order_violations));
        c.push_back(double_column("node_hours", &MetricsRow::node_hours, 6));
        c.push_back(double_column("cost_per_user", &MetricsRow::cost_per_user, 8));
        c.push_back(int_column("arbitration_events", &MetricsRow::arbitration_events));
        c.push_back(int_column("data_loss_events", &MetricsRow::data_loss_events));
        c.push_back(int_column("partition_active", &MetricsRow::partition_active));
        c.push_back(int_column("bytes_moved", &MetricsRow::bytes_moved));
        c.push_back({"action", [](const MetricsRow& r) { return r.action; },
                     [](MetricsRow& r, std::string_view s) {
                         if (s.empty()) return false;
                         r.action = std::string(s);
                         return true;
                     }});
        return c;
    }();
    return cols;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool in_window(const MetricsRow& r, double from_h, double to_h) {
    double h = static_cast<double>(r.time_ms) / 3.6e6;
    return h >= from_h && h < to_h;
}

}  // namespace

const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& c : columns()) n.push_back(c.name);
        return n;
    }();
    return names;
}

std::string csv_header() {
    std::string out;
    for (const auto& n : metrics_columns()) {
        if (!out.empty()) out += ',';
        out += n;
    }
    return out;
}

std::string format_row(const MetricsRow& row) {
    std::string out;
    for (const auto& c : columns()) {
        if (!out.empty()) out += ',';
        out += c.get(row);
    }
    return out;
}

std::string to_csv(const MetricsLog& log) {
    std::string out = csv_header() + "\n";
    for (const auto& r : log.rows) out += format_row(r) + "\n";
    return out;
}

MetricsLog parse_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    for (auto l : split(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        lines.push_back(l);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw SchemaMismatch("metrics CSV is empty (no header)");
    if (lines.front() != csv_header()) throw SchemaMismatch("metrics CSV header does not match the expected columns");

    MetricsLog log;
    const auto& cols = columns();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = split(lines[i], ',');
        if (fields.size() != cols.size()) {
            throw SchemaMismatch("line " + std::to_string(i + 1) + ": expected " + std::to_string(cols.size()) +
                                 " fields, got " + std::to_string(fields.size()));
        }
        MetricsRow row;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (!cols[c].set(row, fields[c])) {
                throw SchemaMismatch("line " + std::to_string(i + 1) + ": bad value for '" + cols[c].name + "'");
            }
        }
        log.rows.push_back(std::move(row));
    }
    return log;
}

Summary summarize(const MetricsLog& log) {
    Summary s;
    s.ticks = log.rows.size();
    if (log.rows.empty()) return s;
    double weighted = 0;
    double weight = 0;
    double p99_sum = 0;
    for (const auto& r : log.rows) {
        s.p99_max_ms = std::max(s.p99_max_ms, r.latency_p99_ms);
        p99_sum += r.latency_p99_ms;
        weighted += r.success_fraction * r.request_rate;
        weight += r.request_rate;
        s.reads += r.reads;
        s.writes += r.writes;
        s.stale_reads += r.stale_reads;
        s.over_bound_reads += r.over_bound_reads;
        s.unflagged_over_bound += r.unflagged_over_bound;
        s.failed_reads += r.failed_reads;
        s.stalled_reads += r.stalled_reads;
        s.staleness_max_ms = std::max(s.staleness_max_ms, r.staleness_max_ms);
        s.deadline_misses += r.deadline_misses;
        s.arbitration_events += r.arbitration_events;
        s.data_loss_events += r.data_loss_events;
        s.bytes_moved += r.bytes_moved;
        s.peak_nodes = std::max(s.peak_nodes, r.nodes);
    }
    const auto& last = log.rows.back();
    s.p99_mean_ms = p99_sum / static_cast<double>(s.ticks);
    s.success_mean = weight > 0 ? weighted / weight : 1.0;
    s.order_violations = last.order_violations;
    s.final_nodes = last.nodes;
    s.node_hours = last.node_hours;
    s.cost_per_user = last.cost_per_user;
    if (s.ticks > 1) {
        s.hours = static_cast<double>(last.time_ms - log.rows.front().time_ms) / 3.6e6 *
                  static_cast<double>(s.ticks) / static_cast<double>(s.ticks - 1);
    }
    return s;
}

std::string format_summary(const Summary& s) {
    char buf[2048];
    std::snprintf(buf, sizeof buf,
                  "ticks               %zu (%.2f h)\n"
                  "latency p99         max %.2f ms, mean %.2f ms\n"
                  "success fraction    %.6f\n"
                  "reads               %lld served, %lld failed, %lld stalled\n"
                  "writes              %lld\n"
                  "stale reads         %lld flagged, %lld over bound, %lld unflagged over bound\n"
                  "staleness max       %lld ms\n"
                  "deadline misses     %lld\n"
                  "order violations    %lld\n"
                  "arbitration events  %lld\n"
                  "data loss events    %lld\n"
                  "nodes               peak %d, final %d\n"
                  "node-hours          %.3f\n"
                  "cost per user       %.6f node-h per user-h\n"
                  "bytes moved         %lld\n",
                  s.ticks, s.hours, s.p99_max_ms, s.p99_mean_ms, s.success_mean, static_cast<long long>(s.reads),
                  static_cast<long long>(s.failed_reads), static_cast<long long>(s.stalled_reads),
                  static_cast<long long>(s.writes), static_cast<long long>(s.stale_reads),
                  static_cast<long long>(s.over_bound_reads), static_cast<long long>(s.unflagged_over_bound),
                  static_cast<long long>(s.staleness_max_ms), static_cast<long long>(s.deadline_misses),
                  static_cast<long long>(s.order_violations), static_cast<long long>(s.arbitration_events),
                  static_cast<long long>(s.data_loss_events), s.peak_nodes, s.final_nodes, s.node_hours,
                  s.cost_per_user, static_cast<long long>(s.bytes_moved));
    return buf;
}

double success_over(const MetricsLog& log, double from_h, double to_h) {
    double weighted = 0;
    double weight = 0;
    for (const auto& r : log.rows) {
        if (!in_window(r, from_h, to_h)) continue;
        weighted += r.success_fraction * r.request_rate;
        weight += r.request_rate;
    }
    return weight > 0 ? weighted / weight : 1.0;
}

double cost_per_user_over(const MetricsLog& log, double from_h, double to_h) {
    double node_h = 0;
    double user_h = 0;
    double prev_node_hours = 0;
    for (const auto& r : log.rows) {
        double tick_node_h = r.node_hours - prev_node_hours;
        prev_node_hours = r.node_hours;
        if (!in_window(r, from_h, to_h)) continue;
        node_h += tick_node_h;
        user_h += tick_node_h / std::max(r.nodes, 1) * r.active_users;  // tick hours x users
    }
    return user_h > 0 ? node_h / user_h : 0.0;
}

std::vector<CheckResult> evaluate_acceptance(const MetricsLog& log, const AcceptanceSpec& a) {
    std::vector<CheckResult> out;
    char buf[256];
    if (a.min_success_fraction) {
        double from = a.success_window_h ? a.success_window_h->first : 0.0;
        double to = a.success_window_h ? a.success_window_h->second : 1e300;
        double s = success_over(log, from, to);
        bool any = std::any_of(log.rows.begin(), log.rows.end(), [&](const MetricsRow& r) { return in_window(r, from, to); });
        std::snprintf(buf, sizeof buf, "%.6f over [%.1f h, %.1f h) (need >= %.6f)%s", s, from, std::min(to, 1e9),
                      *a.min_success_fraction, any ? "" : ", no ticks in window");
        out.push_back({"success_fraction", any && s >= *a.min_success_fraction, buf});
    }
    if (a.max_deadline_misses) {
        std::int64_t misses = 0;
        for (const auto& r : log.rows) misses += r.deadline_misses;
        std::snprintf(buf, sizeof buf, "%lld (allowed %lld)", static_cast<long long>(misses),
                      static_cast<long long>(*a.max_deadline_misses));
        out.push_back({"deadline_misses", misses <= *a.max_deadline_misses, buf});
    }
    if (a.max_over_bound_reads) {
        std::int64_t over = 0;
        for (const auto& r : log.rows) over += r.over_bound_reads;
        std::snprintf(buf, sizeof buf, "%lld (allowed %lld)", static_cast<long long>(over),
                      static_cast<long long>(*a.max_over_bound_reads));
        out.push_back({"over_bound_reads", over <= *a.max_over_bound_reads, buf});
    }
    if (a.scale_down) {
        const auto& sd = *a.scale_down;
        int baseline = 0;
        int worst = 0;
        bool checked = false;
        for (const auto& r : log.rows) {
            double h = static_cast<double>(r.time_ms) / 3.6e6;
            if (h < sd.baseline_until_h) baseline = std::max(baseline, r.nodes);
            if (h >= sd.check_from_h) {
                worst = std::max(worst, r.nodes);
                checked = true;
            }
        }
        bool pass = checked && baseline > 0 && worst <= sd.factor * baseline;
        std::snprintf(buf, sizeof buf, "max %d nodes after %.1f h vs baseline %d (factor %.1f)", worst,
                      sd.check_from_h, baseline, sd.factor);
        out.push_back({"scale_down", pass, buf});
    }
    return out;
}

std::string ascii_plot(const std::string& title, const std::vector<double>& series, int width, int height) {
    std::string out = title + "\n";
    if (series.empty()) return out + "  (no data)\n";
    double lo = *std::min_element(series.begin(), series.end());
    double hi = *std::max_element(series.begin(), series.end());
    if (hi <= lo) hi = lo + 1;
    auto cols = static_cast<std::size_t>(width);
    std::vector<double> col_max(cols, -1e300);
    std::vector<bool> used(cols, false);
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::size_t c = series.size() == 1 ? 0 : i * (cols - 1) / (series.size() - 1);
        col_max[c] = std::max(col_max[c], series[i]);
        used[c] = true;
    }
    std::vector<std::string> grid(static_cast<std::size_t>(height), std::string(cols, ' '));
    for (std::size_t c = 0; c < cols; ++c) {
        if (!used[c]) continue;
        auto level = static_cast<int>(std::lround((col_max[c] - lo) / (hi - lo) * (height - 1)));
        for (int r = 0; r <= level; ++r) grid[static_cast<std::size_t>(height - 1 - r)][c] = r == level ? '*' : '.';
    }
    char label[32];
    for (int r = 0; r < height; ++r) {
        double v = hi - (hi - lo) * r / (height - 1);
        std::snprintf(label, sizeof label, "%12.3f |", v);
        out += label + grid[static_cast<std::size_t>(r)] + "\n";
    }
    out += std::string(13, ' ') + "+" + std::string(cols, '-') + "\n";
    std::snprintf(label, sizeof label, "%zu ticks", series.size());
    out += std::string(14, ' ') + label + "\n";
    return out;
}

std::string render_report(const MetricsLog& log) {
    std::vector<double> p99, staleness, nodes, cost;
    for (const auto& r : log.rows) {
        p99.push_back(r.latency_p99_ms);
        staleness.push_back(static_cast<double>(r.staleness_max_ms));
        nodes.push_back(r.nodes);
        cost.push_back(r.cost_per_user);
    }
    std::string out = format_summary(summarize(log)) + "\n";
    out += ascii_plot("latency p99 (ms)", p99) + "\n";
    out += ascii_plot("staleness max (ms)", staleness) + "\n";
    out += ascii_plot("nodes", nodes) + "\n";
    out += ascii_plot("cost per user (node-h / user-h, cumulative)", cost);
    return out;
}

}  // namespace scalestore

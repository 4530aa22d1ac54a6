#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "scalestore/record.hpp"

namespace scalestore {

// Axes that participate in arbitration when requirements conflict.
enum class Axis { availability, latency, read_consistency, durability };
inline constexpr std::array<Axis, 4> all_axes{Axis::availability, Axis::latency,
                                              Axis::read_consistency, Axis::durability};

std::string_view to_string(Axis axis);
std::optional<Axis> parse_axis(std::string_view text);

enum class SessionGuarantee { read_your_writes, monotonic_reads };
std::string_view to_string(SessionGuarantee g);

struct LatencySla {
    double percentile = 0.999;
    std::int64_t bound_ms = 100;
    friend bool operator==(const LatencySla&, const LatencySla&) = default;
};

struct WritePolicy {
    enum class Kind { serializable, merge, last_write_wins };
    Kind kind = Kind::last_write_wins;
    std::string merge_fn;  // only for Kind::merge

    static WritePolicy serializable() { return {Kind::serializable, {}}; }
    static WritePolicy last_write_wins() { return {Kind::last_write_wins, {}}; }
    static WritePolicy merge(std::string fn) { return {Kind::merge, std::move(fn)}; }

    friend bool operator==(const WritePolicy&, const WritePolicy&) = default;
};

struct ConsistencySpec {
    std::string ns;
    LatencySla latency_sla;
    double availability_sla = 0.999;
    WritePolicy write_policy;
    std::int64_t staleness_bound_ms = 600000;
    std::set<SessionGuarantee> session_guarantees;
    double durability_target = 0.999;
    std::array<Axis, 4> priority_order = all_axes;

    // Position in priority_order, 0 = most important.
    int rank(Axis axis) const;
    bool outranks(Axis a, Axis b) const { return rank(a) < rank(b); }
    bool requires_session(SessionGuarantee g) const { return session_guarantees.contains(g); }

    friend bool operator==(const ConsistencySpec&, const ConsistencySpec&) = default;
};

// Parses the JSON spec document. Throws SyntaxError, ValidationError or
// UnknownMergeFunction.
ConsistencySpec parse_spec(std::string_view text,
                           const MergeRegistry& merges = MergeRegistry::builtin());
ConsistencySpec spec_from_json(const nlohmann::json& doc,
                               const MergeRegistry& merges = MergeRegistry::builtin());
nlohmann::json spec_to_json(const ConsistencySpec& spec);
std::string serialize_spec(const ConsistencySpec& spec);

// "ten minutes", "10 min", "90s", "250 ms" -> milliseconds.
std::int64_t parse_duration_ms(std::string_view text);

// Smallest R >= 1 with node_failure_prob^R <= 1 - durability_target, under
// independent per-epoch node failures.
int replicas_for(double durability_target, double node_failure_prob);

}  // namespace scalestore

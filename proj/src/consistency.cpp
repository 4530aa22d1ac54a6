#include "scalestore/consistency.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "scalestore/errors.hpp"

namespace scalestore {

using nlohmann::json;

// ---- merge registry -------------------------------------------------------

std::vector<std::string> split_set(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(value);
    while (std::getline(in, cur, ',')) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

std::string join_set(const std::vector<std::string>& elements) {
    std::string out;
    for (const auto& e : elements) {
        if (!out.empty()) out += ',';
        out += e;
    }
    return out;
}

namespace {

VersionedRecord newer_of(const VersionedRecord& a, const VersionedRecord& b) {
    return a.stamp_order(b) >= 0 ? a : b;
}

VersionedRecord merge_lww(const VersionedRecord& stored, const VersionedRecord& incoming) {
    return newer_of(stored, incoming);
}

VersionedRecord merge_set_union(const VersionedRecord& stored, const VersionedRecord& incoming) {
    auto a = split_set(stored.value);
    auto b = split_set(incoming.value);
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    VersionedRecord out = newer_of(stored, incoming);
    out.value = join_set(a);
    return out;
}

double as_number(const std::string& s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{}) return -HUGE_VAL;
    return v;
}

VersionedRecord merge_numeric_max(const VersionedRecord& stored, const VersionedRecord& incoming) {
    VersionedRecord out = newer_of(stored, incoming);
    out.value = as_number(stored.value) >= as_number(incoming.value) ? stored.value
                                                                     : incoming.value;
    return out;
}

}  // namespace

MergeRegistry::MergeRegistry() {
    fns_.emplace("last-write-wins", merge_lww);
    fns_.emplace("set-union", merge_set_union);
    fns_.emplace("numeric-max", merge_numeric_max);
}

const MergeRegistry& MergeRegistry::builtin() {
    static const MergeRegistry registry;
    return registry;
}

void MergeRegistry::add(std::string name, MergeFn fn) { fns_[std::move(name)] = std::move(fn); }

bool MergeRegistry::contains(const std::string& name) const { return fns_.contains(name); }

const MergeFn& MergeRegistry::get(const std::string& name) const {
    auto it = fns_.find(name);
    if (it == fns_.end()) throw UnknownMergeFunction(name);
    return it->second;
}

std::vector<std::string> MergeRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, fn] : fns_) out.push_back(name);
    return out;
}

// ---- names ----------------------------------------------------------------

std::string_view to_string(Axis axis) {
    switch (axis) {
        case Axis::availability: return "availability";
        case Axis::latency: return "latency";
        case Axis::read_consistency: return "read_consistency";
        case Axis::durability: return "durability";
    }
    return "?";
}

std::optional<Axis> parse_axis(std::string_view text) {
    for (auto a : all_axes) {
        if (to_string(a) == text) return a;
    }
    return std::nullopt;
}

std::string_view to_string(SessionGuarantee g) {
    return g == SessionGuarantee::read_your_writes ? "read_your_writes" : "monotonic_reads";
}

int ConsistencySpec::rank(Axis axis) const {
    auto it = std::find(priority_order.begin(), priority_order.end(), axis);
    return static_cast<int>(it - priority_order.begin());
}

// ---- durations ------------------------------------------------------------

std::int64_t parse_duration_ms(std::string_view text) {
    static const std::pair<std::string_view, std::int64_t> words[] = {
        {"one", 1},      {"two", 2},        {"three", 3},    {"four", 4},   {"five", 5},
        {"six", 6},      {"seven", 7},      {"eight", 8},    {"nine", 9},   {"ten", 10},
        {"eleven", 11},  {"twelve", 12},    {"fifteen", 15}, {"twenty", 20}, {"thirty", 30},
        {"forty-five", 45}, {"sixty", 60}, {"ninety", 90}};
    static const std::pair<std::string_view, std::int64_t> units[] = {
        {"ms", 1},           {"millisecond", 1},  {"milliseconds", 1}, {"s", 1000},
        {"sec", 1000},       {"second", 1000},    {"seconds", 1000},   {"min", 60000},
        {"minute", 60000},   {"minutes", 60000},  {"h", 3600000},      {"hour", 3600000},
        {"hours", 3600000}};

    std::string s;
    for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    std::size_t i = 0;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    std::int64_t amount = -1;
    if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        std::from_chars(s.data() + start, s.data() + i, amount);
    } else {
        while (i < s.size() && (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '-')) ++i;
        std::string_view word(s.data() + start, i - start);
        for (auto [w, v] : words) {
            if (w == word) amount = v;
        }
    }
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::string_view unit(s.data() + i, s.size() - i);
    while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.back()))) unit.remove_suffix(1);
    if (amount < 0) throw ValidationError("cannot read duration '" + std::string(text) + "'");
    for (auto [u, scale] : units) {
        if (u == unit) return amount * scale;
    }
    throw ValidationError("unknown duration unit in '" + std::string(text) + "'");
}

// ---- parse / serialize ----------------------------------------------------

namespace {

void require_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                  std::string_view where) {
    if (!obj.is_object()) throw ValidationError(std::string(where) + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ValidationError("unknown key '" + key + "' in " + std::string(where));
        }
    }
}

const json& need(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(std::string("missing key '") + key + "'");
    return *it;
}

double need_fraction(const json& v, const char* what) {
    if (!v.is_number()) throw ValidationError(std::string(what) + " must be a number");
    double d = v.get<double>();
    if (!(d > 0.0 && d < 1.0)) throw ValidationError(std::string(what) + " must lie in (0,1)");
    return d;
}

std::int64_t need_positive_int(const json& v, const char* what) {
    if (!v.is_number_integer()) throw ValidationError(std::string(what) + " must be an integer");
    auto n = v.get<std::int64_t>();
    if (n <= 0) throw ValidationError(std::string(what) + " must be positive");
    return n;
}

}  // namespace

ConsistencySpec spec_from_json(const json& doc, const MergeRegistry& merges) {
    require_keys(doc,
                 {"namespace", "latency_sla", "availability", "write_policy",
                  "staleness_bound_ms", "session", "durability", "priority"},
                 "spec");
    ConsistencySpec spec;

    const auto& ns = need(doc, "namespace");
    if (!ns.is_string() || ns.get<std::string>().empty()) {
        throw ValidationError("namespace must be a non-empty string");
    }
    spec.ns = ns.get<std::string>();

    const auto& lat = need(doc, "latency_sla");
    require_keys(lat, {"percentile", "bound_ms"}, "latency_sla");
    spec.latency_sla.percentile = need_fraction(need(lat, "percentile"), "latency_sla.percentile");
    spec.latency_sla.bound_ms = need_positive_int(need(lat, "bound_ms"), "latency_sla.bound_ms");

    spec.availability_sla = need_fraction(need(doc, "availability"), "availability");

    const auto& wp = need(doc, "write_policy");
    require_keys(wp, {"kind", "merge_fn"}, "write_policy");
    const auto& kind = need(wp, "kind");
    if (!kind.is_string()) throw ValidationError("write_policy.kind must be a string");
    auto k = kind.get<std::string>();
    if (k == "serializable") {
        spec.write_policy = WritePolicy::serializable();
    } else if (k == "last_write_wins") {
        spec.write_policy = WritePolicy::last_write_wins();
    } else if (k == "merge") {
        const auto& fn = need(wp, "merge_fn");
        if (!fn.is_string()) throw ValidationError("write_policy.merge_fn must be a string");
        if (!merges.contains(fn.get<std::string>())) throw UnknownMergeFunction(fn.get<std::string>());
        spec.write_policy = WritePolicy::merge(fn.get<std::string>());
    } else {
        throw ValidationError("unknown write_policy.kind '" + k + "'");
    }
    if (k != "merge" && wp.contains("merge_fn")) {
        throw ValidationError("merge_fn is only valid with kind 'merge'");
    }

    const auto& st = need(doc, "staleness_bound_ms");
    if (st.is_string()) {
        spec.staleness_bound_ms = parse_duration_ms(st.get<std::string>());
        if (spec.staleness_bound_ms <= 0) throw ValidationError("staleness_bound_ms must be positive");
    } else {
        spec.staleness_bound_ms = need_positive_int(st, "staleness_bound_ms");
    }

    if (auto it = doc.find("session"); it != doc.end()) {
        if (!it->is_array()) throw ValidationError("session must be an array");
        for (const auto& g : *it) {
            if (!g.is_string()) throw ValidationError("session entries must be strings");
            auto name = g.get<std::string>();
            if (name == "read_your_writes") {
                spec.session_guarantees.insert(SessionGuarantee::read_your_writes);
            } else if (name == "monotonic_reads") {
                spec.session_guarantees.insert(SessionGuarantee::monotonic_reads);
            } else {
                throw ValidationError("unknown session guarantee '" + name + "'");
            }
        }
    }

    spec.durability_target = need_fraction(need(doc, "durability"), "durability");

    const auto& pr = need(doc, "priority");
    if (!pr.is_array()) throw ValidationError("priority must be an array");
    if (pr.size() != all_axes.size()) {
        throw ValidationError("priority must list exactly the four axes, got " +
                              std::to_string(pr.size()));
    }
    std::set<Axis> seen;
    for (std::size_t i = 0; i < pr.size(); ++i) {
        if (!pr[i].is_string()) throw ValidationError("priority entries must be strings");
        auto axis = parse_axis(pr[i].get<std::string>());
        if (!axis) throw ValidationError("unknown axis '" + pr[i].get<std::string>() + "'");
        if (!seen.insert(*axis).second) {
            throw ValidationError("axis '" + pr[i].get<std::string>() + "' listed twice");
        }
        spec.priority_order[i] = *axis;
    }
    return spec;
}

ConsistencySpec parse_spec(std::string_view text, const MergeRegistry& merges) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw SyntaxError(e.byte, e.what());
    }
    return spec_from_json(doc, merges);
}

json spec_to_json(const ConsistencySpec& spec) {
    json doc;
    doc["namespace"] = spec.ns;
    doc["latency_sla"] = {{"percentile", spec.latency_sla.percentile},
                          {"bound_ms", spec.latency_sla.bound_ms}};
    doc["availability"] = spec.availability_sla;
    switch (spec.write_policy.kind) {
        case WritePolicy::Kind::serializable: doc["write_policy"] = {{"kind", "serializable"}}; break;
        case WritePolicy::Kind::last_write_wins:
            doc["write_policy"] = {{"kind", "last_write_wins"}};
            break;
        case WritePolicy::Kind::merge:
            doc["write_policy"] = {{"kind", "merge"}, {"merge_fn", spec.write_policy.merge_fn}};
            break;
    }
    doc["staleness_bound_ms"] = spec.staleness_bound_ms;
    json session = json::array();
    for (auto g : spec.session_guarantees) session.push_back(std::string(to_string(g)));
    doc["session"] = session;
    doc["durability"] = spec.durability_target;
    json priority = json::array();
    for (auto a : spec.priority_order) priority.push_back(std::string(to_string(a)));
    doc["priority"] = priority;
    return doc;
}

std::string serialize_spec(const ConsistencySpec& spec) { return spec_to_json(spec).dump(2); }

int replicas_for(double durability_target, double node_failure_prob) {
    if (!(durability_target > 0 && durability_target < 1) ||
        !(node_failure_prob > 0 && node_failure_prob < 1)) {
        throw ValidationError("replicas_for: probabilities must lie in (0,1)");
    }
    const double allowed = (1.0 - durability_target) * (1.0 + 1e-12);
    int r = 1;
    double loss = node_failure_prob;
    while (loss > allowed) {
        ++r;
        loss *= node_failure_prob;
    }
    return r;
}

}  // namespace scalestore

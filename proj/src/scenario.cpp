#include "scalestore/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "scalestore/errors.hpp"

namespace scalestore {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot read '" + path.string() + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::int64_t Scenario::ticks() const {
    return static_cast<std::int64_t>(std::llround(duration_h * 3.6e6 / static_cast<double>(tick_ms)));
}

int Scenario::replicas() const {
    if (controller.replicas) return *controller.replicas;
    double p = faults.node_failure_prob > 0 ? faults.node_failure_prob : controller.assumed_failure_prob;
    return replicas_for(spec.durability_target, p);
}

namespace {

void check_keys(const nlohmann::json& doc, const std::set<std::string>& known, const std::string& where) {
    if (!doc.is_object()) throw ScenarioError(where + " must be an object");
    for (const auto& [k, v] : doc.items()) {
        if (!known.contains(k)) throw ScenarioError("unknown " + where + " key '" + k + "'");
    }
}

ControllerConfig controller_from_json(const nlohmann::json& doc) {
    check_keys(doc,
               {"autoscale", "interval_ms", "min_nodes", "initial_nodes", "max_nodes", "utilization_target",
                "bucket_width", "min_observations", "observation_window", "half_life_min", "safety",
                "hysteresis_min", "headroom_fraction", "service_rate", "service_time_ms", "ops_per_node_tick",
                "partitions_per_index", "samples_per_node", "assumed_failure_prob", "replicas"},
               "controller");
    ControllerConfig c;
    c.autoscale = doc.value("autoscale", c.autoscale);
    c.interval_ms = doc.value("interval_ms", c.interval_ms);
    c.min_nodes = doc.value("min_nodes", c.min_nodes);
    c.initial_nodes = doc.value("initial_nodes", c.initial_nodes);
    c.max_nodes = doc.value("max_nodes", c.max_nodes);
    c.utilization_target = doc.value("utilization_target", c.utilization_target);
    c.bucket_width = doc.value("bucket_width", c.bucket_width);
    c.min_observations = doc.value("min_observations", c.min_observations);
    c.observation_window = doc.value("observation_window", c.observation_window);
    c.half_life_min = doc.value("half_life_min", c.half_life_min);
    c.safety = doc.value("safety", c.safety);
    c.hysteresis_min = doc.value("hysteresis_min", c.hysteresis_min);
    c.headroom_fraction = doc.value("headroom_fraction", c.headroom_fraction);
    c.service_rate = doc.value("service_rate", c.service_rate);
    c.service_time_ms = doc.value("service_time_ms", c.service_time_ms);
    c.ops_per_node_tick = doc.value("ops_per_node_tick", c.ops_per_node_tick);
    c.partitions_per_index = doc.value("partitions_per_index", c.partitions_per_index);
    c.samples_per_node = doc.value("samples_per_node", c.samples_per_node);
    c.assumed_failure_prob = doc.value("assumed_failure_prob", c.assumed_failure_prob);
    if (doc.contains("replicas")) c.replicas = doc.at("replicas").get<int>();

    if (c.min_nodes < 1 || c.initial_nodes < 1 || c.max_nodes < c.min_nodes || c.interval_ms <= 0 ||
        c.utilization_target <= 0 || c.utilization_target > 1 || c.service_rate <= 0 || c.service_time_ms < 0 ||
        c.ops_per_node_tick <= 0 || c.partitions_per_index < 1 || c.samples_per_node < 1 || c.bucket_width <= 0 ||
        c.half_life_min <= 0 || c.safety <= 0 || c.hysteresis_min < 0 || (c.replicas && *c.replicas < 1)) {
        throw ScenarioError("controller: values out of range");
    }
    return c;
}

AcceptanceSpec acceptance_from_json(const nlohmann::json& doc) {
    check_keys(doc, {"min_success_fraction", "success_window_h", "max_deadline_misses", "scale_down",
                     "max_over_bound_reads"},
               "acceptance");
    AcceptanceSpec a;
    if (doc.contains("min_success_fraction")) a.min_success_fraction = doc.at("min_success_fraction").get<double>();
    if (doc.contains("success_window_h")) {
        const auto& w = doc.at("success_window_h");
        a.success_window_h = std::make_pair(w.at(0).get<double>(), w.at(1).get<double>());
    }
    if (doc.contains("max_deadline_misses")) a.max_deadline_misses = doc.at("max_deadline_misses").get<std::int64_t>();
    if (doc.contains("max_over_bound_reads")) {
        a.max_over_bound_reads = doc.at("max_over_bound_reads").get<std::int64_t>();
    }
    if (doc.contains("scale_down")) {
        const auto& s = doc.at("scale_down");
        check_keys(s, {"baseline_until_h", "check_from_h", "factor"}, "scale_down");
        a.scale_down = ScaleDownCheck{s.at("baseline_until_h").get<double>(), s.at("check_from_h").get<double>(),
                                      s.value("factor", 2.0)};
        if (a.scale_down->factor <= 0) throw ScenarioError("acceptance: scale_down.factor must be positive");
    }
    if ((a.min_success_fraction && (*a.min_success_fraction < 0 || *a.min_success_fraction > 1)) ||
        (a.success_window_h && a.success_window_h->first >= a.success_window_h->second) ||
        (a.max_deadline_misses && *a.max_deadline_misses < 0) ||
        (a.max_over_bound_reads && *a.max_over_bound_reads < 0)) {
        throw ScenarioError("acceptance: values out of range");
    }
    return a;
}

}  // namespace

Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    check_keys(doc, {"seed", "duration_h", "tick_ms", "schema", "templates", "spec", "workload", "faults",
                     "controller", "acceptance", "description"},
               "scenario");
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };
    Scenario s;
    try {
        s.seed = doc.at("seed").get<std::uint64_t>();
        s.duration_h = doc.at("duration_h").get<double>();
        s.tick_ms = doc.value("tick_ms", s.tick_ms);
        if (s.duration_h <= 0 || s.tick_ms <= 0) throw ScenarioError("duration_h and tick_ms must be positive");

        s.schema = parse_schema(read_file(resolve(doc.at("schema").get<std::string>())));
        for (const auto& t : doc.at("templates")) {
            auto parsed = parse_templates(read_file(resolve(t.get<std::string>())), s.schema);
            s.templates.insert(s.templates.end(), parsed.begin(), parsed.end());
        }
        const auto& spec = doc.at("spec");
        s.spec = spec.is_string() ? parse_spec(read_file(resolve(spec.get<std::string>()))) : spec_from_json(spec);
        s.workload = workload_from_json(doc.value("workload", nlohmann::json::object()));
        s.faults = faults_from_json(doc.value("faults", nlohmann::json::object()), s.duration_h);
        s.controller = controller_from_json(doc.value("controller", nlohmann::json::object()));
        s.acceptance = acceptance_from_json(doc.value("acceptance", nlohmann::json::object()));
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(std::string("scenario: ") + e.what());
    }

    std::set<std::string> names;
    for (const auto& t : s.templates) {
        if (!names.insert(t.name).second) throw ScenarioError("duplicate template '" + t.name + "'");
        auto admission = check_admissible(t, s.schema);
        if (const auto* r = std::get_if<Rejection>(&admission)) {
            throw ScenarioError("template '" + t.name + "' rejected: " + r->reason);
        }
    }
    for (const auto& r : s.workload.reads) {
        if (!names.contains(r.template_name)) throw ScenarioError("workload reads unknown template '" + r.template_name + "'");
    }
    for (const auto& w : s.workload.writes) {
        const auto* t = s.schema.find_table(w.table);
        if (!t) throw ScenarioError("workload writes unknown table '" + w.table + "'");
        if (!w.field.empty() && !t->field_index(w.field)) {
            throw ScenarioError("workload writes unknown field '" + w.table + "." + w.field + "'");
        }
    }
    if (s.controller.initial_nodes > s.controller.max_nodes) throw ScenarioError("initial_nodes exceeds max_nodes");
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError("scenario '" + path.string() + "': " + e.what());
    }
    auto s = parse_scenario(doc, path.parent_path());
    s.path = path;
    return s;
}

}  // namespace scalestore

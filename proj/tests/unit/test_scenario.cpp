#include <cmath>
#include <random>

#include <doctest.h>

#include "fixtures.hpp"
#include "scalestore/errors.hpp"
#include "scalestore/faults.hpp"
#include "scalestore/metrics.hpp"
#include "scalestore/simulator.hpp"
#include "scalestore/workload.hpp"

using namespace scalestore;

namespace {

nlohmann::json scenario_doc(const std::string& name) {
    return nlohmann::json::parse(read_file(fixtures::source("scenarios/" + name)));
}

Scenario scenario(const nlohmann::json& doc) { return parse_scenario(doc, fixtures::source("scenarios")); }

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("spike shape") {
    SpikeEvent s{12, 72, 12, 12, 68};
    CHECK(s.factor(0) == 1);
    CHECK(s.factor(12) == doctest::Approx(1));
    CHECK(s.factor(12 + 36) == doctest::Approx(std::sqrt(68.0)));
    CHECK(s.factor(84) == doctest::Approx(68));
    CHECK(s.factor(90) == doctest::Approx(68));
    CHECK(s.factor(96 + 6) == doctest::Approx(std::sqrt(68.0)));
    CHECK(s.factor(s.end_h()) == 1);
    for (double t = 12; t < 84; t += 0.5) CHECK(s.factor(t + 0.5) > s.factor(t));

    WorkloadSpec w;
    w.base_users = 70;
    w.spikes.push_back(s);
    CHECK(w.active_users(84) == doctest::Approx(70 * 68));
}

TEST_CASE("scenario validation") {
    auto doc = scenario_doc("trivial.json");
    CHECK_NOTHROW(scenario(doc));

    auto bad = doc;
    bad["surprise"] = true;
    CHECK_THROWS_AS(scenario(bad), ScenarioError);
    bad = doc;
    bad["workload"]["reads"][0]["template"] = "no_such_index";
    CHECK_THROWS_AS(scenario(bad), ScenarioError);
    bad = doc;
    bad["workload"]["writes"][0]["table"] = "followers";
    CHECK_THROWS_AS(scenario(bad), ScenarioError);
    bad = doc;
    bad["templates"] = nlohmann::json::array({"../scenarios/twitter.sql"});
    bad["schema"] = "twitter.schema";
    CHECK_THROWS_AS(scenario(bad), ScenarioError);
    bad = doc;
    bad["acceptance"]["max_deadline_misses"] = -1;
    CHECK_THROWS_AS(scenario(bad), ScenarioError);
    CHECK_THROWS(load_scenario(fixtures::source("scenarios/does_not_exist.json")));
}

TEST_CASE("no failures without a failure probability") {
    FaultSpec spec;
    std::mt19937_64 rng(3);
    std::vector<NodeId> nodes{0, 1, 2, 3, 4, 5};
    for (LogicalTime t = 0; t < 1000 * spec.epoch_ms(); t += spec.epoch_ms()) {
        auto ev = inject_faults(spec, t, nodes, rng);
        CHECK(ev.failed.empty());
        CHECK(ev.partition == nullptr);
    }
}

TEST_CASE("isolated side is the tail of the node list") {
    CHECK(isolated_side({1, 2, 3, 4}, 0.5) == std::set<NodeId>{3, 4});
    CHECK(isolated_side({1, 2, 3, 4}, 0.25) == std::set<NodeId>{4});
}

TEST_CASE("trivial scenario") {
    auto s = load_scenario(fixtures::source("scenarios/trivial.json"));
    auto first = run_scenario(s);
    auto sum = summarize(first.log);
    CHECK(first.log.rows.size() == 60);
    CHECK(sum.success_mean >= 0.999);
    CHECK(sum.deadline_misses == 0);
    CHECK(sum.failed_reads == 0);
    CHECK(sum.order_violations == 0);
    CHECK(first.max_task_ops <= first.max_op_budget);
    CHECK(to_csv(first.log) == to_csv(run_scenario(s).log));
}

TEST_CASE("arbitration only inside the partition window") {
    auto s = load_scenario(fixtures::source("scenarios/partition_available.json"));
    auto log = run_scenario(s).log;
    const auto& window = s.faults.partitions.at(0);
    std::int64_t inside = 0;
    for (const auto& r : log.rows) {
        double h = static_cast<double>(r.time_ms) / 3.6e6;
        CHECK(r.partition_active == (window.active(h) ? 1 : 0));
        if (r.arbitration_events > 0) {
            CAPTURE(h);
            CHECK(h >= window.start_h);
            CHECK(h <= window.end_h);
            inside += r.arbitration_events;
        }
        CHECK(r.unflagged_over_bound == 0);
    }
    CHECK(inside > 0);
}

TEST_CASE("node failures below the replica count lose nothing") {
    auto s = load_scenario(fixtures::source("scenarios/failures.json"));
    CHECK(s.replicas() == replicas_for(s.spec.durability_target, s.faults.node_failure_prob));
    auto sum = summarize(run_scenario(s).log);
    CHECK(sum.data_loss_events == 0);
}

TEST_CASE("durability model") {
    auto r = durability_monte_carlo(0.3, 0.9, 20000, 4, 99);
    CHECK(r.replicas == 2);
    CHECK(r.trials == 80000);
    CHECK(r.predicted == doctest::Approx(0.09));
    CHECK(r.within(3));
    CHECK_THROWS_AS(durability_monte_carlo(0.0, 0.9, 1000, 4, 99), ValidationError);
}

TEST_CASE("metrics csv round trip") {
    auto s = load_scenario(fixtures::source("scenarios/trivial.json"));
    auto log = run_scenario(s).log;
    auto csv = to_csv(log);
    CHECK(parse_csv(csv).rows.size() == log.rows.size());
    CHECK(to_csv(parse_csv(csv)) == csv);
    CHECK_THROWS_AS(parse_csv(""), SchemaMismatch);
    CHECK_THROWS_AS(parse_csv("tick,nodes\n1,2\n"), SchemaMismatch);
    auto truncated = csv.substr(0, csv.find('\n') + 1) + "1,2,3\n";
    CHECK_THROWS_AS(parse_csv(truncated), SchemaMismatch);
    CHECK(parse_csv(csv_header() + "\n").rows.empty());
    CHECK_FALSE(render_report(log).empty());
}

}  // TEST_SUITE

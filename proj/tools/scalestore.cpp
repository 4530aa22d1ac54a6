// scalestore: check query templates, run scenarios, render reports.
//
// Exit codes: 0 ok, 1 usage or input error, 2 template rejected,
// 3 scenario acceptance unmet, 4 internal invariant violated.

#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>

#include <CLI11.hpp>

#include "scalestore/errors.hpp"
#include "scalestore/log.hpp"
#include "scalestore/metrics.hpp"
#include "scalestore/query.hpp"
#include "scalestore/scenario.hpp"
#include "scalestore/simulator.hpp"

using namespace scalestore;

namespace {

enum Exit { ok = 0, usage = 1, rejected = 2, unmet = 3, invariant = 4 };

int cmd_check(const std::string& schema_file, const std::vector<std::string>& template_files, std::int64_t budget) {
    Schema schema = parse_schema(read_file(schema_file));
    std::vector<QueryTemplate> templates;
    for (const auto& f : template_files) {
        auto parsed = parse_templates(read_file(f), schema);
        templates.insert(templates.end(), parsed.begin(), parsed.end());
    }
    bool all_ok = true;
    MaintenanceTable table;
    for (const auto& t : templates) {
        auto admission = check_admissible(t, schema, budget);
        std::cout << format_fanout_report(admission) << "\n";
        if (std::holds_alternative<Rejection>(admission)) {
            all_ok = false;
            continue;
        }
        table.add(compile(t, schema));
    }
    std::cout << "\nmaintenance table\n" << table.dump();
    return all_ok ? ok : rejected;
}

int cmd_simulate(const std::string& scenario_file, const std::string& out, bool trace) {
    Scenario scenario = load_scenario(scenario_file);
    RunResult result = run_scenario(scenario, trace ? &std::cout : nullptr);
    {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw ScenarioError("cannot write '" + out + "'");
        f << to_csv(result.log);
    }
    Summary s = summarize(result.log);
    std::cout << format_summary(s);
    std::cout << "latency SLA         p" << scenario.spec.latency_sla.percentile * 100 << " <= "
              << scenario.spec.latency_sla.bound_ms << " ms, availability target "
              << scenario.spec.availability_sla << "\n";
    std::cout << "replicas            " << result.replicas << "\n";
    std::cout << "fitted capacity     " << result.model.capacity << " req/s per node (" << result.model.method
              << ", " << result.model.confidence << " observations)\n";
    std::cout << "metrics             " << out << "\n";

    int code = ok;
    if (scenario.acceptance.declared()) {
        for (const auto& c : evaluate_acceptance(result.log, scenario.acceptance)) {
            std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
            if (!c.pass) code = unmet;
        }
    }
    if (s.order_violations > 0 || s.unflagged_over_bound > 0 || result.max_task_ops > result.max_op_budget) {
        std::cerr << "invariant violated: " << s.order_violations << " deadline-order violations, "
                  << s.unflagged_over_bound << " unflagged over-bound reads\n";
        code = invariant;
    }
    return code;
}

int cmd_report(const std::string& csv, const std::string& out) {
    MetricsLog log = parse_csv(read_file(csv));
    std::string report = render_report(log);
    std::cout << report;
    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw ScenarioError("cannot write '" + out + "'");
        f << report;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    init_logging();
    CLI::App app{"scalestore: scale-independent storage simulator"};
    app.require_subcommand(1);

    std::string schema_file;
    std::vector<std::string> template_files;
    std::int64_t budget = default_fanout_budget;
    auto* check = app.add_subcommand("check", "Compile templates and report worst-case fan-out");
    check->add_option("schema", schema_file, "Schema file")->required();
    check->add_option("templates", template_files, "Template files")->required();
    check->add_option("--budget", budget, "Fan-out budget per write")->check(CLI::PositiveNumber);

    std::string scenario_file;
    std::string out = "metrics.csv";
    bool trace = false;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario and write the metrics CSV");
    simulate->add_option("scenario", scenario_file, "Scenario JSON file")->required();
    simulate->add_option("--out", out, "Metrics CSV path")->capture_default_str();
    simulate->add_flag("--trace", trace, "Print per-tick queue trace lines");

    std::string csv_file;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Render summary and plots from a metrics CSV");
    report->add_option("metrics", csv_file, "Metrics CSV file")->required();
    report->add_option("--out", report_out, "Also write the report to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        if (*check) return cmd_check(schema_file, template_files, budget);
        if (*simulate) return cmd_simulate(scenario_file, out, trace);
        if (*report) return cmd_report(csv_file, report_out);
    } catch (const InvariantViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invariant;
    } catch (const BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invariant;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    }
    return usage;
}

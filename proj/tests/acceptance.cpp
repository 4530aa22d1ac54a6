// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "harness.hpp"
#include "scalestore/errors.hpp"
#include "scalestore/faults.hpp"
#include "scalestore/log.hpp"
#include "scalestore/metrics.hpp"
#include "scalestore/simulator.hpp"

using namespace scalestore;
using harness::source;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string strf(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Deadline-order breaks seen by any pipeline or scenario run in this binary.
struct OrderLedger {
    std::uint64_t violations = 0;
    std::uint64_t runs = 0;
    void add(std::uint64_t v) {
        violations += v;
        ++runs;
    }
} order_ledger;

MetricsLog run_logged(const Scenario& s) {
    auto log = run_scenario(s).log;
    order_ledger.add(log.rows.empty() ? 0 : static_cast<std::uint64_t>(log.rows.back().order_violations));
    return log;
}

double hours(const MetricsRow& r) { return static_cast<double>(r.time_ms) / 3.6e6; }

// ---- 1: incremental indices equal the recomputed ones ---------------------

Outcome index_convergence() {
    auto t0 = Clock::now();
    int mismatched = 0;
    std::int64_t writes = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto s = harness::Store::social();
        std::mt19937_64 rng(seed);
        RandomWriter writer(s.schema, 16);
        LogicalTime t = 0;
        for (int i = 0; i < 1000; ++i) {
            auto op = writer.propose(rng, s.lookup(), harness::pick(rng, harness::social_mix()));
            if (!op) continue;
            s.apply(*op, 1, ++t);
            ++writes;
            if (rng() % 10 == 0) s.pipeline->drain(t, static_cast<std::int64_t>(rng() % 40));
        }
        s.pipeline->drain_all(t);
        if (s.indices() != oracle_indices(s.snapshot(), s.templates, s.table)) ++mismatched;
        order_ledger.add(s.pipeline->queue().order_violations());
    }
    double secs = seconds_since(t0);
    return {mismatched == 0 && secs < 30,
            strf("100 seeds, %lld writes, %d mismatched, %.1f s (limit 30 s)", static_cast<long long>(writes),
                mismatched, secs)};
}

// ---- 2: reported fan-out bounds observed fan-out --------------------------

struct RandomCase {
    Schema schema;
    QueryTemplate tmpl;
    std::string text;
};

std::optional<RandomCase> random_case(std::mt19937_64& rng, int n) {
    auto uni = [&](int k) { return static_cast<int>(rng() % static_cast<std::uint64_t>(k)); };
    const int tables = 2 + uni(3);
    std::vector<std::vector<std::string>> join_fields(tables);
    std::ostringstream schema;
    for (int t = 0; t < tables; ++t) {
        schema << "table t" << t << "\n  k string key\n";
        join_fields[t] = {"k", "a", "b"};
        if (uni(4) == 0) {
            schema << "  k2 string key\n";
            join_fields[t].push_back("k2");
        }
        schema << "  a string\n  b string\n  n integer\n  d date\n";
    }
    struct Rel {
        int from, to;
        std::string ff, tf;
    };
    std::vector<Rel> rels;
    const int nrels = 1 + uni(4);
    for (int r = 0; r < nrels; ++r) {
        Rel rel{uni(tables), uni(tables), "", ""};
        rel.ff = join_fields[rel.from][uni(static_cast<int>(join_fields[rel.from].size()))];
        rel.tf = join_fields[rel.to][uni(static_cast<int>(join_fields[rel.to].size()))];
        bool dup = rel.from == rel.to && rel.ff == rel.tf;
        for (const auto& o : rels) {
            dup |= (o.from == rel.from && o.to == rel.to && o.ff == rel.ff && o.tf == rel.tf) ||
                   (o.from == rel.to && o.to == rel.from && o.ff == rel.tf && o.tf == rel.ff);
        }
        if (dup) continue;
        schema << "relationship r" << r << " t" << rel.from << "." << rel.ff << " -> t" << rel.to << "." << rel.tf
               << " bound " << 1 + uni(6) << "\n";
        rels.push_back(rel);
    }

    if (rels.empty()) return std::nullopt;

    // Walk relationships out from a starting table.
    std::vector<int> alias_table{rels[uni(static_cast<int>(rels.size()))].from};
    std::ostringstream from;
    from << " FROM t" << alias_table[0] << " x0";
    const int joins = 1 + uni(3);
    for (int j = 0; j < joins; ++j) {
        std::vector<std::tuple<int, int, std::string, std::string>> options;  // (existing, table, new f, old f)
        for (int a = 0; a < static_cast<int>(alias_table.size()); ++a) {
            for (const auto& r : rels) {
                if (r.from == alias_table[a]) options.emplace_back(a, r.to, r.tf, r.ff);
                if (r.to == alias_table[a]) options.emplace_back(a, r.from, r.ff, r.tf);
            }
        }
        if (options.empty()) break;
        auto [a, table, nf, of] = options[uni(static_cast<int>(options.size()))];
        int added = static_cast<int>(alias_table.size());
        alias_table.push_back(table);
        from << " JOIN t" << table << " x" << added << " ON x" << added << "." << nf << " = x" << a << "." << of;
    }
    const int aliases = static_cast<int>(alias_table.size());
    if (aliases < 2) return std::nullopt;
    std::ostringstream text;
    text << "INDEX idx" << n << " AS SELECT x" << uni(aliases) << ".*" << from.str() << " WHERE x0."
         << join_fields[alias_table[0]][uni(static_cast<int>(join_fields[alias_table[0]].size()))] << " = <p>";
    if (uni(2) == 0) text << " ORDER BY x" << uni(aliases) << ".n";

    RandomCase c;
    try {
        c.schema = parse_schema(schema.str());
        c.tmpl = parse_template(text.str(), c.schema);
        c.text = schema.str() + text.str();
    } catch (const Error&) {
        return std::nullopt;
    }
    return c;
}

void apply_to(BaseSnapshot& base, std::map<std::string, Relation, std::less<>>& rels, const TableDef& def,
              const WriteOp& op, LogicalTime t) {
    auto& rows = base[op.table];
    auto& rel = rels.at(op.table);
    Tuple pk = op.kind == WriteMix::Kind::erase ? op.pk : def.primary_key_of(op.row);
    auto it = std::find_if(rows.begin(), rows.end(), [&](const StoredRow& r) { return def.primary_key_of(r.row) == pk; });
    if (op.kind == WriteMix::Kind::erase) {
        if (it != rows.end()) rows.erase(it);
        rel.remove(rel.key_of_pk(pk));
        return;
    }
    if (it != rows.end()) {
        *it = StoredRow{op.row, t};
    } else {
        rows.push_back(StoredRow{op.row, t});
    }
    rel.upsert(op.row, t);
}

Outcome admission_soundness() {
    auto t0 = Clock::now();
    std::mt19937_64 rng(4242);
    int cases = 0, attempts = 0, over = 0;
    std::int64_t writes = 0, worst_observed = 0;
    while (cases < 50 && attempts < 100000) {
        ++attempts;
        auto c = random_case(rng, attempts);
        if (!c) continue;
        auto admission = check_admissible(c->tmpl, c->schema);
        const auto* report = std::get_if<FanoutReport>(&admission);
        if (!report) continue;
        ++cases;
        std::map<std::string, std::int64_t> reported;
        for (const auto& f : report->fanouts) reported[f.table] = f.fanout;

        BaseSnapshot base;
        std::map<std::string, Relation, std::less<>> rels;
        std::vector<WriteMix> mix;
        for (const auto& t : c->schema.tables) {
            base[t.name];
            rels.emplace(t.name, Relation(t));
            mix.push_back({t.name, WriteMix::Kind::insert, "", 3});
            mix.push_back({t.name, WriteMix::Kind::update, "", 2});
            mix.push_back({t.name, WriteMix::Kind::erase, "", 1});
        }
        RelationLookup lookup = [&](const std::string& name) -> const Relation& { return rels.at(name); };
        RandomWriter writer(c->schema, 6);
        for (int i = 0; i < 10000; ++i) {
            auto op = writer.propose(rng, lookup, harness::pick(rng, mix));
            if (!op) continue;
            ++writes;
            const auto& def = c->schema.require_table(op->table);
            Tuple pk = op->kind == WriteMix::Kind::erase ? op->pk : def.primary_key_of(op->row);
            auto before = oracle_tuples_containing(base, c->tmpl, op->table, pk).size();
            apply_to(base, rels, def, *op, i + 1);
            auto after = oracle_tuples_containing(base, c->tmpl, op->table, pk).size();
            auto observed = static_cast<std::int64_t>(std::max(before, after));
            worst_observed = std::max(worst_observed, observed);
            auto it = reported.find(op->table);
            std::int64_t bound = it == reported.end() ? 0 : it->second;
            if (observed > bound) {
                if (over++ == 0) {
                    std::cerr << "fan-out exceeded (" << observed << " > " << bound << ") on write to " << op->table
                              << " in:\n" << c->text << "\n";
                }
            }
        }
    }

    auto tw_schema = parse_schema(read_file(source("scenarios/twitter.schema")));
    bool twitter_rejected = false;
    for (const auto& t : parse_templates(read_file(source("scenarios/twitter.sql")), tw_schema)) {
        auto a = check_admissible(t, tw_schema);
        if (auto* r = std::get_if<Rejection>(&a); r && r->relationship == "followed_by") twitter_rejected = true;
    }
    double secs = seconds_since(t0);
    return {cases == 50 && over == 0 && twitter_rejected && secs < 60,
            strf("%d templates, %lld writes, %d over the reported fan-out (worst observed %lld), unbounded "
                "followers template %s, %.1f s (limit 60 s)",
                cases, static_cast<long long>(writes), over, static_cast<long long>(worst_observed),
                twitter_rejected ? "rejected" : "ADMITTED", secs)};
}

// ---- 3: staleness bound under both arbitration branches -------------------

Outcome staleness_bound() {
    auto consistent = load_scenario(source("scenarios/partition_consistent.json"));
    const auto bound = consistent.spec.staleness_bound_ms;
    std::int64_t over = 0, worst = 0, arbitrations = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        consistent.seed = seed;
        for (const auto& r : run_logged(consistent).rows) {
            over += r.over_bound_reads;
            if (r.reads > 0) worst = std::max(worst, r.staleness_max_ms);
            arbitrations += r.arbitration_events;
        }
    }
    bool consistent_ok = over == 0 && worst <= bound && arbitrations > 0 &&
                         consistent.spec.outranks(Axis::read_consistency, Axis::availability);

    auto available = load_scenario(source("scenarios/partition_available.json"));
    std::int64_t stale = 0, unflagged = 0, over_avail = 0;
    for (const auto& r : run_logged(available).rows) {
        stale += r.stale_reads;
        unflagged += r.unflagged_over_bound;
        over_avail += r.over_bound_reads;
    }
    bool available_ok = stale > 0 && unflagged == 0 && over_avail == stale &&
                        available.spec.outranks(Axis::availability, Axis::read_consistency);
    return {consistent_ok && available_ok,
            strf("read_consistency first: 10 seeds, %lld over-bound data reads, max staleness %lld ms of %lld, "
                "%lld arbitrations; availability first: %lld stale reads, %lld unflagged",
                static_cast<long long>(over), static_cast<long long>(worst), static_cast<long long>(bound),
                static_cast<long long>(arbitrations), static_cast<long long>(stale),
                static_cast<long long>(unflagged))};
}

// ---- 4: session guarantees over random interleavings ---------------------

struct SessionWorld {
    Schema schema = parse_schema(read_file(source("scenarios/social.schema")));
    std::vector<QueryTemplate> templates = parse_templates(read_file(source("scenarios/social.sql")), schema);
    MaintenanceTable table;
    std::vector<ConsistencySpec> specs;
    QueryTemplate profile_lookup = parse_template("SELECT * FROM profiles WHERE id = <id>", schema);
    const QueryTemplate* birthday = nullptr;

    SessionWorld() {
        for (const auto& t : templates) {
            table.add(compile(t, schema));
            if (t.name == "birthday_index") birthday = &t;
        }
        for (const char* f : {"scenarios/social_spec.json", "scenarios/social_spec_available.json"}) {
            specs.push_back(parse_spec(read_file(source(f))));
        }
    }
};

struct TraceStats {
    std::int64_t reads = 0;
    std::int64_t data = 0;
    std::int64_t ryw_checked = 0;
    std::int64_t ryw_violations = 0;
    std::int64_t mr_violations = 0;
};

// One trace: three sessions writing birthdays and reading profiles and the
// birthday index while links to replicas come and go.
void run_trace(const SessionWorld& w, std::uint64_t seed, TraceStats& st) {
    std::mt19937_64 rng(seed);
    const auto& spec = w.specs[seed % w.specs.size()];
    StorageEngine engine(3, 1'000'000);
    UpdatePipeline p(w.schema, w.table, spec, engine);
    p.create_storage({0, 1, 2});

    constexpr int users = 6;
    auto uid = [](int i) { return "u" + std::to_string(i); };
    auto birthday = [&](int i) { return Row{uid(i), "n" + uid(i), Date{static_cast<std::int32_t>(rng() % 20000)}}; };
    std::map<int, std::set<int>> friends;  // user -> friends
    LogicalTime now = 1;
    for (int i = 0; i < users; ++i) p.write("profiles", birthday(i), 0, now);
    for (int i = 0; i < users; ++i) {
        for (int d : {1, 2}) {
            int f = (i + d) % users;
            p.write("friendships", Row{uid(i), uid(f)}, 0, now);
            friends[i].insert(f);
        }
    }
    p.drain_all(now);
    p.refresh_watermarks(now);

    constexpr int sessions = 3;
    std::vector<SessionToken> tokens(sessions);
    std::vector<std::map<int, LogicalTime>> wrote(sessions);                  // profile -> commit time
    std::vector<std::map<int, LogicalTime>> seen_profile(sessions);           // profile -> version
    std::vector<std::map<std::pair<int, int>, LogicalTime>> seen_entry(sessions);  // (user, friend) -> version
    const auto pk_kinds = w.schema.require_table("profiles").key_kinds();
    auto target_of = [&](const Entry& e) {
        auto pk = decode_key(CompositeKey(e.record.value), pk_kinds);
        return std::stoi(std::get<std::string>(pk[0]).substr(1));
    };

    for (int step = 0; step < 40; ++step) {
        now += 1 + static_cast<LogicalTime>(rng() % (rng() % 4 == 0 ? 700000 : 20000));
        int s = static_cast<int>(rng() % sessions);
        switch (rng() % 7) {
        case 0: {
            int x = static_cast<int>(rng() % users);
            p.write("profiles", birthday(x), s + 1, now, &tokens[s]);
            wrote[s][x] = now;
            break;
        }
        case 1: {
            int x = static_cast<int>(rng() % users);
            auto q = bind(w.profile_lookup, {{"id", Value{uid(x)}}});
            auto out = p.read(q, tokens[s], now);
            ++st.reads;
            if (out.kind != ReadOutcome::Kind::data) break;
            ++st.data;
            LogicalTime v = out.entries.empty() ? 0 : out.entries.front().record.version;
            if (auto it = wrote[s].find(x); it != wrote[s].end()) {
                ++st.ryw_checked;
                if (v < it->second) ++st.ryw_violations;
            }
            auto& m = seen_profile[s][x];
            if (v < m) ++st.mr_violations;
            m = std::max(m, v);
            break;
        }
        case 2: {
            int u = static_cast<int>(rng() % users);
            auto q = bind(*w.birthday, {{"user_id", Value{uid(u)}}});
            auto out = p.read(q, tokens[s], now);
            ++st.reads;
            if (out.kind != ReadOutcome::Kind::data) break;
            ++st.data;
            std::map<int, LogicalTime> got;
            for (const auto& e : out.entries) got[target_of(e)] = e.record.version;
            for (int f : friends[u]) {
                auto it = wrote[s].find(f);
                if (it == wrote[s].end()) continue;
                ++st.ryw_checked;
                auto g = got.find(f);
                if (g == got.end() || g->second < it->second) ++st.ryw_violations;
            }
            for (auto [f, v] : got) {
                auto& m = seen_entry[s][{u, f}];
                if (v < m) ++st.mr_violations;
                m = std::max(m, v);
            }
            break;
        }
        case 3:
            p.drain(now, static_cast<std::int64_t>(rng() % 12));
            p.refresh_watermarks(now);
            break;
        case 4: {
            // Cut a random node off from the others; clients keep to one side.
            NodeId cut = static_cast<NodeId>(rng() % 3);
            bool heal = rng() % 2 == 0;
            engine.set_connectivity([cut, heal](NodeId a, NodeId b) { return heal || a == b || (a != cut && b != cut); });
            p.set_client_reachability([cut, heal](NodeId n) { return heal || n != cut; });
            if (heal) engine.replay_backlogs();
            p.refresh_watermarks(now);
            break;
        }
        default:
            engine.replay_backlogs();
            p.refresh_watermarks(now);
            break;
        }
    }
    order_ledger.add(p.queue().order_violations());
}

Outcome session_guarantees() {
    SessionWorld world;
    TraceStats st;
    for (std::uint64_t seed = 1; seed <= 10000; ++seed) run_trace(world, seed, st);
    return {st.ryw_violations == 0 && st.mr_violations == 0 && st.ryw_checked > 0,
            strf("10000 traces, %lld reads (%lld served), %lld read-your-writes checks, %lld RYW violations, "
                "%lld monotonic-read violations",
                static_cast<long long>(st.reads), static_cast<long long>(st.data),
                static_cast<long long>(st.ryw_checked), static_cast<long long>(st.ryw_violations),
                static_cast<long long>(st.mr_violations))};
}

// ---- 6: scale up through the spike, scale back down after it -------------

Outcome spike_scaling() {
    auto s = load_scenario(source("scenarios/spike.json"));
    auto t0 = Clock::now();
    auto spike_log = run_logged(s);
    double spike_seconds = seconds_since(t0);
    const auto& spike = s.workload.spikes.at(0);
    const double ramp_end = spike.start_h + spike.ramp_h;
    const double hold_end = ramp_end + spike.hold_h;
    const double target = s.spec.availability_sla;

    // (a) request-weighted success over the plateau that follows the ramp.
    double ok = 0, total = 0;
    // (b) node count from 12 h after the spike peak ends vs the pre-spike baseline.
    int baseline = 0, late_max = 0;
    int prev = 0;
    bool monotone = true;
    for (const auto& r : spike_log.rows) {
        double h = hours(r);
        if (h >= ramp_end && h < hold_end) {
            ok += r.success_fraction * r.request_rate;
            total += r.request_rate;
        }
        if (h < spike.start_h) baseline = std::max(baseline, r.nodes);
        if (h >= hold_end + 12) late_max = std::max(late_max, r.nodes);
        if (h >= spike.start_h && h < ramp_end) {
            if (r.nodes < prev) monotone = false;
            prev = r.nodes;
        }
    }
    double success = total > 0 ? ok / total : 0;
    int peak = 0;
    for (const auto& r : spike_log.rows) peak = std::max(peak, r.nodes);
    bool declared = true;
    for (const auto& c : evaluate_acceptance(spike_log, s.acceptance)) declared &= c.pass;
    bool pass = total > 0 && success >= target && late_max <= 2 * baseline && monotone && declared &&
                peak <= s.controller.max_nodes && spike_seconds < 120;
    return {pass, strf("plateau success %.6f (target %.4f), nodes baseline %d peak %d, max %d from %.0f h "
                      "(limit %d), ramp monotone %s, %.1f s (limit 120 s)",
                      success, target, baseline, peak, late_max, hold_end + 12, 2 * baseline,
                      monotone ? "yes" : "no", spike_seconds)};
}

// ---- 7: cost per user does not grow with the user count -------------------

Outcome cost_per_user() {
    std::vector<double> costs;
    std::ostringstream detail;
    for (const char* f : {"scenarios/steady_500.json", "scenarios/steady_5000.json"}) {
        auto s = load_scenario(source(f));
        auto log = run_logged(s);
        // Converged half: node-hours over active-user-hours, ticks are equal length.
        double nodes = 0, users = 0;
        const double half = s.duration_h / 2;
        for (const auto& r : log.rows) {
            if (hours(r) < half) continue;
            nodes += r.nodes;
            users += r.active_users;
        }
        costs.push_back(users > 0 ? nodes / users : 0);
        detail << s.workload.base_users << " users " << strf("%.6f", costs.back()) << " node-h/user-h, ";
    }
    double lo = *std::min_element(costs.begin(), costs.end());
    double hi = *std::max_element(costs.begin(), costs.end());
    double ratio = lo > 0 ? hi / lo : INFINITY;
    detail << strf("ratio %.3f (limit 2)", ratio);
    return {ratio < 2, detail.str()};
}

// ---- 8: Monte Carlo data loss vs p^R --------------------------------------

Outcome durability_model() {
    const double p = 0.3, d = 0.9;
    const std::int64_t epochs = 10000;
    int r = 1;
    while (std::pow(p, r) > 1 - d) ++r;
    auto res = durability_monte_carlo(p, d, epochs, 8, 2024);
    double predicted = std::pow(p, r);
    double observed = static_cast<double>(res.losses) / static_cast<double>(res.trials);
    double se = std::sqrt(predicted * (1 - predicted) / static_cast<double>(res.trials));
    double z = std::abs(observed - predicted) / se;
    return {res.replicas == r && epochs >= 10000 && z <= 3,
            strf("p=%.2f R=%d, %lld group-epochs, loss rate %.5f vs p^R %.5f, %.2f standard errors", p, res.replicas,
                static_cast<long long>(res.trials), observed, predicted, z)};
}

// ---- 9: same seed, same bytes ---------------------------------------------

Outcome determinism() {
    std::ostringstream detail;
    bool all = true;
    for (const char* f : {"scenarios/trivial.json", "scenarios/partition_available.json", "scenarios/failures.json",
                          "scenarios/steady_500.json"}) {
        auto s = load_scenario(source(f));
        std::string a = to_csv(run_logged(s));
        std::string b = to_csv(run_logged(s));
        bool same = a == b;
        all &= same;
        detail << s.path.filename().string() << (same ? " identical" : " DIFFERS") << " (" << b.size() << " bytes); ";
    }
    return {all, detail.str()};
}

}  // namespace

int main() {
    init_logging();
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    // Criterion 5 reads the order ledger filled by every other run, so it goes last.
    std::vector<Criterion> criteria{
        {1, "index convergence", index_convergence},
        {2, "admission soundness", admission_soundness},
        {3, "staleness bound", staleness_bound},
        {4, "session guarantees", session_guarantees},
        {6, "scale up and down", spike_scaling},
        {7, "cost per user", cost_per_user},
        {8, "durability model", durability_model},
        {9, "determinism", determinism},
        {5, "deadline order",
         [] {
             return Outcome{order_ledger.violations == 0 && order_ledger.runs > 0,
                            strf("%llu pipelines and scenario runs, %llu pops below the previous deadline",
                                static_cast<unsigned long long>(order_ledger.runs),
                                static_cast<unsigned long long>(order_ledger.violations))};
         }},
    };
    std::map<int, std::string> lines;
    bool all = true;
    auto start = Clock::now();
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        all &= o.pass;
        lines[c.id] = strf("%s %d %s: ", o.pass ? "PASS" : "FAIL", c.id, c.name) + o.detail;
        std::cerr << strf("[%6.1f s] criterion %d done\n", seconds_since(start), c.id);
    }
    for (const auto& [id, line] : lines) std::cout << line << "\n";
    return all ? 0 : 1;
}

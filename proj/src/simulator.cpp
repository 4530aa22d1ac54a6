#include "scalestore/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <set>

#include "scalestore/errors.hpp"
#include <spdlog/spdlog.h>
#include "scalestore/pipeline.hpp"

namespace scalestore {

namespace {

// Independent stream per subsystem.
enum Stream : std::uint32_t { ops_stream = 1, writer_stream = 2, fault_stream = 3, latency_stream = 4, sweep_stream = 5 };

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    return std::mt19937_64(seq);
}

double nearest_rank(std::vector<double>& v, double q) {
    if (v.empty()) return 0;
    auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    k = std::clamp<std::size_t>(k, 1, v.size()) - 1;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

template <typename T>
const T& pick_weighted(std::mt19937_64& rng, const std::vector<T>& items) {
    double total = 0;
    for (const auto& i : items) total += i.weight;
    double x = std::uniform_real_distribution<double>(0, total)(rng);
    for (const auto& i : items) {
        if (x < i.weight) return i;
        x -= i.weight;
    }
    return items.back();
}

struct PendingRead {
    int user = 0;
    RangeQuery query;
    LogicalTime started = 0;
};

}  // namespace

double sample_latency_ms(std::mt19937_64& rng, double rate, double backlog, const ControllerConfig& c) {
    double mu = c.service_rate;
    double spare = std::max(mu - rate, 0.01 * mu);
    double wait_s = backlog / mu + std::exponential_distribution<double>(spare)(rng);
    return c.service_time_ms + 1000.0 * wait_s;
}

std::vector<Observation> profiling_sweep(const ControllerConfig& c, std::uint64_t seed) {
    auto rng = make_rng(seed, sweep_stream);
    std::vector<Observation> out;
    double step = c.bucket_width / 2;
    for (double rate = step / 2; rate < 1.5 * c.service_rate; rate += step) {
        for (int rep = 0; rep < 4; ++rep) {
            Observation o;
            o.node = -1;
            o.request_rate = rate;
            for (int i = 0; i < 100; ++i) o.latency_ms.push_back(sample_latency_ms(rng, rate, 0, c));
            out.push_back(std::move(o));
        }
    }
    return out;
}

namespace {

class Simulation {
public:
    Simulation(const Scenario& sc, std::ostream* trace)
        : sc_(sc),
          trace_(trace),
          cfg_(sc.controller),
          engine_(3),
          writer_(sc.schema, std::max(1, sc.workload.max_users(sc.duration_h, 0.25))),
          ops_rng_(make_rng(sc.seed, ops_stream)),
          writer_rng_(make_rng(sc.seed, writer_stream)),
          fault_rng_(make_rng(sc.seed, fault_stream)),
          latency_rng_(make_rng(sc.seed, latency_stream)),
          forecaster_(cfg_.half_life_min * 60000.0, cfg_.safety),
          sweep_(profiling_sweep(cfg_, sc.seed)) {
        for (const auto& t : sc_.templates) {
            auto compiled = compile(t, sc_.schema);
            for (const auto& r : compiled.rules) max_budget_ = std::max(max_budget_, r.op_budget);
            table_.add(compiled);
        }
        replicas_ = sc_.replicas();
        hysteresis_.window_ms = static_cast<std::int64_t>(cfg_.hysteresis_min * 60000.0);
        for (int i = 0; i < cfg_.initial_nodes; ++i) live_.push_back(next_node_++);
        pipeline_ = std::make_unique<UpdatePipeline>(sc_.schema, table_, sc_.spec, engine_, cfg_.headroom_fraction);
        pipeline_->create_storage(live_, split_keys());
        rebalance();
        model_ = fit_model(sweep_, sc_.spec.latency_sla, model_config());
    }

    RunResult run() {
        RunResult result;
        result.replicas = replicas_;
        const std::int64_t ticks = sc_.ticks();
        result.log.rows.reserve(static_cast<std::size_t>(ticks));
        for (std::int64_t t = 0; t < ticks; ++t) result.log.rows.push_back(step(t));
        result.model = model_;
        result.max_task_ops = pipeline_->max_task_ops();
        result.max_op_budget = max_budget_;
        return result;
    }

private:
    ModelConfig model_config() const { return ModelConfig{cfg_.bucket_width, cfg_.min_observations}; }

    std::string user_id(int u) const { return writer_.id(u); }

    Value user_value(int u, FieldKind kind) const {
        if (kind == FieldKind::string) return user_id(u);
        if (kind == FieldKind::integer) return static_cast<std::int64_t>(u);
        return Date{u};
    }

    // Split points on user ids spread over every user the run can activate.
    std::map<std::string, std::vector<CompositeKey>> split_keys() const {
        std::map<std::string, std::vector<CompositeKey>> out;
        const int users = writer_max_users();
        const int parts = std::min(cfg_.partitions_per_index, std::max(users, 1));
        auto keys_for = [&](FieldKind kind) {
            std::vector<CompositeKey> keys;
            for (int k = 1; k < parts; ++k) {
                int u = static_cast<int>(static_cast<std::int64_t>(k) * users / parts);
                Value v = user_value(u, kind);
                auto key = encode_key(std::span<const Value>(&v, 1), std::span<const FieldKind>(&kind, 1));
                if (keys.empty() || keys.back() < key) keys.push_back(key);
            }
            return keys;
        };
        for (const auto& t : sc_.schema.tables) out[t.name] = keys_for(t.fields[t.primary_key.front()].kind);
        for (const auto& name : table_.index_order()) {
            const auto& def = table_.index(name);
            if (def.key_fields.empty() || out.contains(name)) continue;
            out[name] = keys_for(def.key_fields.front().kind);
        }
        return out;
    }

    int writer_max_users() const { return std::max(1, sc_.workload.max_users(sc_.duration_h, 0.25)); }

    std::int64_t rebalance() {
        std::int64_t bytes = 0;
        std::size_t ordinal = 0;
        for (const auto& name : engine_.index_names()) {
            for (const auto& p : engine_.partitions_for(name, CompositeKey{}, CompositeKey{})) {
                auto target = place_replicas(ordinal++, live_, replicas_);
                if (target != p.nodes) bytes += engine_.assign_replicas(name, p.id, target);
            }
        }
        return bytes;
    }

    void set_partition(const PartitionInterval* interval) {
        if (interval == active_partition_) return;
        active_partition_ = interval;
        if (!interval) {
            engine_.set_connectivity({});
            pipeline_->set_client_reachability({});
            return;
        }
        auto side_b = std::make_shared<std::set<NodeId>>(isolated_side(live_, interval->isolate_fraction));
        engine_.set_connectivity([side_b](NodeId a, NodeId b) { return side_b->contains(a) == side_b->contains(b); });
        pipeline_->set_client_reachability([side_b](NodeId n) { return !side_b->contains(n); });
    }

    // Removes failed nodes; a partition whose every replica failed in the
    // same epoch counts as a data-loss event and is restored from its last
    // leader copy so the run can continue.
    std::int64_t fail_nodes(const std::vector<NodeId>& failed, MetricsRow& row) {
        std::set<NodeId> dead(failed.begin(), failed.end());
        for (const auto& name : engine_.index_names()) {
            for (const auto& p : engine_.partitions_for(name, CompositeKey{}, CompositeKey{})) {
                if (std::all_of(p.nodes.begin(), p.nodes.end(), [&](NodeId n) { return dead.contains(n); })) {
                    ++row.data_loss_events;
                }
            }
        }
        std::erase_if(live_, [&](NodeId n) { return dead.contains(n); });
        while (static_cast<int>(live_.size()) < cfg_.min_nodes) live_.push_back(next_node_++);
        spdlog::debug("tick {}: {} node(s) failed, {} live", row.tick, failed.size(), live_.size());
        return rebalance();
    }

    void handle_read(const PendingRead& r, LogicalTime now, MetricsRow& row, std::vector<double>& staleness) {
        auto outcome = pipeline_->read(r.query, sessions_[r.user], now, r.started);
        switch (outcome.kind) {
        case ReadOutcome::Kind::data: {
            ++row.reads;
            staleness.push_back(static_cast<double>(outcome.max_staleness_ms));
            bool over = outcome.max_staleness_ms > sc_.spec.staleness_bound_ms;
            if (outcome.stale) ++row.stale_reads;
            if (over) ++row.over_bound_reads;
            if (over && !outcome.stale) ++row.unflagged_over_bound;
            break;
        }
        case ReadOutcome::Kind::stalled:
            ++row.stalled_reads;
            stalled_.push_back(r);
            break;
        case ReadOutcome::Kind::failed:
            ++row.failed_reads;
            break;
        }
    }

    RangeQuery bind_for(const QueryTemplate& tmpl, int user) const {
        const auto& def = table_.index(tmpl.name);
        ParamMap params;
        for (const auto& slot : def.key_fields) {
            if (slot.role == KeySlot::Role::param) params[slot.param] = user_value(user, slot.kind);
        }
        return scalestore::bind(tmpl, params);
    }

    const QueryTemplate& template_named(const std::string& name) const {
        for (const auto& t : sc_.templates) {
            if (t.name == name) return t;
        }
        throw ScenarioError("unknown template '" + name + "'");
    }

    void write_op(const WriteOp& op, int user, LogicalTime now, MetricsRow& row) {
        SessionToken* session = &sessions_[user];
        if (op.kind == WriteMix::Kind::erase) {
            pipeline_->erase(op.table, op.pk, user, now, session);
        } else {
            pipeline_->write(op.table, op.row, user, now, session);
        }
        ++row.writes;
    }

    // A newly active user creates its own row in every entity table the
    // workload inserts into.
    void activate(int user, LogicalTime now, MetricsRow& row) {
        RelationLookup lookup = [this](const std::string& n) -> const Relation& {
            return pipeline_->maintainer().relation(n);
        };
        for (const auto& mix : sc_.workload.writes) {
            if (mix.kind != WriteMix::Kind::insert) continue;
            if (sc_.schema.require_table(mix.table).primary_key.size() != 1) continue;
            if (auto op = writer_.propose(writer_rng_, lookup, mix, user)) write_op(*op, user, now, row);
        }
    }

    void run_ops(LogicalTime now, double users, MetricsRow& row, std::vector<double>& staleness) {
        const auto& w = sc_.workload;
        const int active = static_cast<int>(std::lround(users));
        while (activated_ < active) activate(activated_++, now, row);

        std::deque<PendingRead> retry;
        retry.swap(stalled_);
        for (const auto& r : retry) handle_read(r, now, row, staleness);

        if (active == 0) return;
        double lambda = users * w.ops_per_user_per_s * static_cast<double>(sc_.tick_ms) / 1000.0;
        auto n = static_cast<std::int64_t>(std::poisson_distribution<std::int64_t>(lambda)(ops_rng_));
        RelationLookup lookup = [this](const std::string& name) -> const Relation& {
            return pipeline_->maintainer().relation(name);
        };
        std::uniform_int_distribution<int> pick_user(0, active - 1);
        std::bernoulli_distribution is_read(w.read_fraction);
        for (std::int64_t i = 0; i < n; ++i) {
            LogicalTime at = now + i * sc_.tick_ms / n;
            int user = pick_user(ops_rng_);
            bool read = is_read(ops_rng_);
            if (read && !w.reads.empty()) {
                const auto& mix = pick_weighted(ops_rng_, w.reads);
                handle_read({user, bind_for(template_named(mix.template_name), user), at}, at, row, staleness);
            } else if (!read && !w.writes.empty()) {
                const auto& mix = pick_weighted(ops_rng_, w.writes);
                if (auto op = writer_.propose(writer_rng_, lookup, mix, user)) write_op(*op, user, at, row);
            }
        }
    }

    void service_model(LogicalTime now, MetricsRow& row) {
        const double nodes = static_cast<double>(live_.size());
        const double rate = row.request_rate / nodes;
        const double tick_s = static_cast<double>(sc_.tick_ms) / 1000.0;
        backlog_ = std::max(0.0, backlog_ + (rate - cfg_.service_rate) * tick_s * nodes);
        const double per_node_backlog = backlog_ / nodes;

        std::vector<double> all;
        std::int64_t within = 0;
        for (NodeId node : live_) {
            Observation o;
            o.tick = row.tick;
            o.node = node;
            o.request_rate = rate;
            o.headroom_ms = row.min_headroom_ms;
            for (int s = 0; s < cfg_.samples_per_node; ++s) {
                double l = sample_latency_ms(latency_rng_, rate, per_node_backlog, cfg_);
                o.latency_ms.push_back(l);
                all.push_back(l);
                if (l <= static_cast<double>(sc_.spec.latency_sla.bound_ms)) ++within;
            }
            if (row.request_rate > 0) observations_.push_back(std::move(o));
        }
        while (observations_.size() > cfg_.observation_window) observations_.pop_front();

        double latency_ok = static_cast<double>(within) / static_cast<double>(all.size());
        std::int64_t attempted = row.reads + row.failed_reads;
        double not_failed = attempted > 0 ? 1.0 - static_cast<double>(row.failed_reads) / attempted : 1.0;
        row.success_fraction = latency_ok * not_failed;
        row.latency_p50_ms = nearest_rank(all, 0.5);
        row.latency_p99_ms = nearest_rank(all, sc_.spec.latency_sla.percentile);
        forecaster_.observe(row.request_rate, static_cast<double>(sc_.tick_ms));
        (void)now;
    }

    void control(LogicalTime now, MetricsRow& row) {
        if (!cfg_.autoscale || now == 0 || now % cfg_.interval_ms != 0) return;
        std::vector<Observation> obs = sweep_;
        obs.insert(obs.end(), observations_.begin(), observations_.end());
        model_ = fit_model(obs, sc_.spec.latency_sla, model_config());

        int current = static_cast<int>(live_.size());
        int target = std::min(target_node_count(forecaster_.forecast(), model_, cfg_.utilization_target,
                                                cfg_.min_nodes),
                              cfg_.max_nodes);
        bool alarm = pipeline_->lag_alarm(now).at_risk;
        auto action = plan_scaling(current, target, alarm, hysteresis_, now,
                                   static_cast<double>(cfg_.interval_ms) / 3.6e6);
        if (action.kind == ScalingAction::Kind::add_nodes) {
            int n = std::min(action.n, cfg_.max_nodes - current);
            if (n <= 0) return;
            for (int i = 0; i < n; ++i) live_.push_back(next_node_++);
            action.n = n;
        } else if (action.kind == ScalingAction::Kind::remove_nodes) {
            int n = std::min(action.n, current - cfg_.min_nodes);
            if (n <= 0) return;
            live_.resize(live_.size() - static_cast<std::size_t>(n));
            action.n = n;
        } else {
            return;
        }
        spdlog::debug("t={} ms: {} ({})", now, to_string(action), action.reason);
        row.action = to_string(action);
        row.bytes_moved += rebalance();
        // Nodes added while a partition is active sit on the client side.
        if (active_partition_) {
            const PartitionInterval* p = active_partition_;
            active_partition_ = nullptr;
            set_partition(p);
        }
    }

    MetricsRow step(std::int64_t t) {
        const LogicalTime now = t * sc_.tick_ms;
        const double t_h = static_cast<double>(now) / 3.6e6;
        MetricsRow row;
        row.tick = t;
        row.time_ms = now;

        auto faults = inject_faults(sc_.faults, now, live_, fault_rng_);
        if (!faults.failed.empty()) row.bytes_moved += fail_nodes(faults.failed, row);
        set_partition(faults.partition);
        row.partition_active = faults.partition ? 1 : 0;

        engine_.replay_backlogs();
        auto drained = pipeline_->drain(now, static_cast<std::int64_t>(live_.size()) * cfg_.ops_per_node_tick);
        row.tasks_applied = static_cast<std::int64_t>(drained.tasks_applied);
        row.deadline_misses = static_cast<std::int64_t>(drained.deadline_misses);
        row.min_headroom_ms = drained.min_headroom_ms;
        pipeline_->refresh_watermarks(now);

        const double users = sc_.workload.active_users(t_h);
        row.active_users = users;
        row.request_rate = users * sc_.workload.ops_per_user_per_s * sc_.workload.requests_per_op;

        const auto arbitration_before = pipeline_->arbitration_events();
        std::vector<double> staleness;
        run_ops(now, users, row, staleness);
        row.arbitration_events = static_cast<std::int64_t>(pipeline_->arbitration_events() - arbitration_before);
        row.staleness_p50_ms = static_cast<std::int64_t>(nearest_rank(staleness, 0.5));
        row.staleness_max_ms =
            staleness.empty() ? 0 : static_cast<std::int64_t>(*std::max_element(staleness.begin(), staleness.end()));

        service_model(now, row);
        control(now, row);

        row.nodes = static_cast<int>(live_.size());
        const double tick_h = static_cast<double>(sc_.tick_ms) / 3.6e6;
        node_hours_ += row.nodes * tick_h;
        user_hours_ += users * tick_h;
        row.node_hours = node_hours_;
        row.cost_per_user = user_hours_ > 0 ? node_hours_ / user_hours_ : 0.0;
        row.queue_depth = static_cast<std::int64_t>(pipeline_->queue().size());
        row.order_violations = static_cast<std::int64_t>(pipeline_->queue().order_violations());

        if (trace_) {
            *trace_ << row.tick << ',' << row.queue_depth << ',' << row.min_headroom_ms << ',' << row.tasks_applied
                    << ',' << row.deadline_misses << '\n';
        }
        return row;
    }

    const Scenario& sc_;
    std::ostream* trace_;
    ControllerConfig cfg_;
    MaintenanceTable table_;
    StorageEngine engine_;
    std::unique_ptr<UpdatePipeline> pipeline_;
    RandomWriter writer_;
    std::mt19937_64 ops_rng_;
    std::mt19937_64 writer_rng_;
    std::mt19937_64 fault_rng_;
    std::mt19937_64 latency_rng_;
    Forecaster forecaster_;
    HysteresisState hysteresis_;
    std::vector<Observation> sweep_;
    std::deque<Observation> observations_;
    PerfModel model_;
    std::vector<NodeId> live_;
    NodeId next_node_ = 0;
    int replicas_ = 1;
    std::int64_t max_budget_ = 0;
    const PartitionInterval* active_partition_ = nullptr;
    std::map<int, SessionToken> sessions_;
    std::deque<PendingRead> stalled_;
    int activated_ = 0;
    double backlog_ = 0;
    double node_hours_ = 0;
    double user_hours_ = 0;
};

}  // namespace

RunResult run_scenario(const Scenario& scenario, std::ostream* trace) {
    Simulation sim(scenario, trace);
    return sim.run();
}

}  // namespace scalestore

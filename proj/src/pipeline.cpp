#include "scalestore/pipeline.hpp"

#include <algorithm>
#include <limits>

#include "scalestore/errors.hpp"

namespace scalestore {

std::vector<UpdateTask> on_base_write(const RowChange& change, const MaintenanceTable& table,
                                      const TableDef& changed_def, LogicalTime now, LogicalTime deadline) {
    std::vector<UpdateTask> out;
    auto fields = change.changed_fields(changed_def);
    const auto& rules = table.rules();
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (rules[i].matches(change.table, fields)) out.push_back(UpdateTask{0, i, change, now, deadline});
    }
    return out;
}

// ---- DeadlineQueue --------------------------------------------------------

void DeadlineQueue::push(UpdateTask task) {
    task.seq = next_seq_++;
    if (task.rule < rule_index_.size()) pending_[rule_index_[task.rule]].insert(task.deadline);
    heap_.push(std::move(task));
}

UpdateTask DeadlineQueue::pop() {
    if (heap_.empty()) throw Error("pop from an empty deadline queue");
    UpdateTask task = heap_.top();
    heap_.pop();
    if (task.rule < rule_index_.size()) {
        auto& set = pending_[rule_index_[task.rule]];
        set.erase(set.find(task.deadline));
    }
    if (last_popped_ && task.deadline < *last_popped_) ++violations_;
    last_popped_ = task.deadline;
    return task;
}

std::optional<LogicalTime> DeadlineQueue::min_deadline() const {
    if (heap_.empty()) return std::nullopt;
    return heap_.top().deadline;
}

std::optional<LogicalTime> DeadlineQueue::min_deadline_for(const std::string& index) const {
    auto it = pending_.find(index);
    if (it == pending_.end() || it->second.empty()) return std::nullopt;
    return *it->second.begin();
}

// ---- SessionToken ---------------------------------------------------------

LogicalTime SessionToken::write_version(const std::string& index) const {
    auto it = write_versions.find(index);
    return it == write_versions.end() ? no_time : it->second;
}

void SessionToken::note_write(const std::string& index, LogicalTime version) {
    auto& v = write_versions.try_emplace(index, no_time).first->second;
    v = std::max(v, version);
}

// ---- UpdatePipeline -------------------------------------------------------

UpdatePipeline::UpdatePipeline(const Schema& schema, const MaintenanceTable& table, const ConsistencySpec& spec,
                               StorageEngine& engine, double headroom_fraction)
    : schema_(schema),
      table_(table),
      spec_(spec),
      engine_(engine),
      maintainer_(schema, table, engine),
      headroom_fraction_(headroom_fraction) {
    std::vector<std::string> names;
    for (const auto& r : table.rules()) names.push_back(r.index);
    queue_.set_rule_index_names(std::move(names));

    for (const auto& index : table.index_order()) {
        auto& up = upstream_[index];
        for (const auto& other : table.index_order()) {
            auto down = table.downstream(other);
            if (std::find(down.begin(), down.end(), index) != down.end()) up.push_back(other);
        }
    }
    for (const auto& t : schema.tables) {
        auto down = table.downstream(t.name);
        downstream_[t.name] = down;  // includes the table itself
    }
}

void UpdatePipeline::create_storage(const std::vector<NodeId>& replicas,
                                    const std::map<std::string, std::vector<CompositeKey>>& split_keys) {
    auto splits = [&](const std::string& name) {
        auto it = split_keys.find(name);
        return it == split_keys.end() ? std::vector<CompositeKey>{} : it->second;
    };
    for (const auto& t : schema_.tables) {
        if (!engine_.has_index(t.name)) engine_.create_index(t.name, replicas, splits(t.name));
    }
    for (const auto& name : table_.index_order()) {
        if (table_.index(name).base_table || engine_.has_index(name)) continue;
        engine_.create_index(name, replicas, splits(name));
    }
}

void UpdatePipeline::set_client_reachability(std::function<bool(NodeId)> reachable) {
    client_reachable_ = std::move(reachable);
}

bool UpdatePipeline::client_reaches(NodeId node) const {
    return engine_.node_up(node) && (!client_reachable_ || client_reachable_(node));
}

WriteResult UpdatePipeline::write(const std::string& table, const Row& row, WriterId writer, LogicalTime now,
                                  SessionToken* session) {
    const Relation& rel = maintainer_.relation(table);
    if (!maintainer_.is_base(table)) throw UnknownTable(table);
    CompositeKey pk = rel.key_of(row);
    auto kinds = rel.def().row_kinds();
    const LogicalTime deadline = now + spec_.staleness_bound_ms;

    Row incoming = row;
    WritePolicy policy = spec_.write_policy;
    if (policy.kind == WritePolicy::Kind::merge) {
        // Merge functions combine string fields; keys and other kinds take
        // the incoming value.
        if (auto stored = engine_.get(table, pk)) {
            Row current = decode_key(CompositeKey(stored->value), kinds);
            const auto& fn = MergeRegistry::builtin().get(policy.merge_fn);
            for (std::size_t f = 0; f < incoming.size(); ++f) {
                if (rel.def().is_primary_key(f) || kinds[f] != FieldKind::string) continue;
                VersionedRecord a{std::get<std::string>(current[f]), stored->version, stored->writer_id};
                VersionedRecord b{std::get<std::string>(incoming[f]), now, writer};
                incoming[f] = fn(a, b).value;
            }
        }
        policy = WritePolicy::serializable();
    }
    VersionedRecord rec{encode_key(incoming, kinds).bytes(), now, writer};
    PutResult status = engine_.put(table, pk, rec, policy, MergeRegistry::builtin(), std::nullopt, deadline);
    if (status != PutResult::ack) return WriteResult{status, {}, 0};
    auto stored = engine_.get(table, pk);
    return commit(table, pk, decode_key(CompositeKey(stored->value), kinds), now, status, session);
}

WriteResult UpdatePipeline::erase(const std::string& table, const Tuple& pk, WriterId writer, LogicalTime now,
                                  SessionToken* session) {
    (void)writer;
    const Relation& rel = maintainer_.relation(table);
    if (!maintainer_.is_base(table)) throw UnknownTable(table);
    CompositeKey key = rel.key_of_pk(pk);
    engine_.erase(table, key, now + spec_.staleness_bound_ms);
    return commit(table, key, std::nullopt, now, PutResult::ack, session);
}

WriteResult UpdatePipeline::commit(const std::string& table, const CompositeKey& pk, std::optional<Row> row,
                                   LogicalTime now, PutResult status, SessionToken* session) {
    const LogicalTime deadline = now + spec_.staleness_bound_ms;
    WriteResult out;
    out.status = status;
    out.changes = maintainer_.commit(table, pk, std::move(row), now);
    std::size_t before = queue_.size();
    for (const auto& c : out.changes) enqueue(c, now, deadline);
    out.tasks = queue_.size() - before;
    if (session) {
        for (const auto& name : downstream_[table]) session->note_write(name, deadline);
    }
    return out;
}

void UpdatePipeline::enqueue(const RowChange& change, LogicalTime now, LogicalTime deadline) {
    const TableDef& def = maintainer_.relation(change.table).def();
    for (auto& task : on_base_write(change, table_, def, now, deadline)) queue_.push(std::move(task));
}

DrainStats UpdatePipeline::drain(LogicalTime now, std::int64_t op_capacity) {
    DrainStats st;
    if (auto m = queue_.min_deadline()) st.min_headroom_ms = *m - now;
    std::map<std::string, LogicalTime> applied;  // index -> largest deadline applied this drain
    while (!queue_.empty() && st.ops < op_capacity) {
        UpdateTask task = queue_.pop();
        const MaintenanceRule& rule = table_.rules()[task.rule];
        TaskResult res = maintainer_.apply(rule, task.change, task.deadline);
        max_task_ops_ = std::max(max_task_ops_, res.ops);
        st.ops += res.ops;
        ++st.tasks_applied;
        if (now > task.deadline) ++st.deadline_misses;
        auto [it, fresh] = applied.emplace(rule.index, task.deadline);
        if (!fresh) it->second = std::max(it->second, task.deadline);
        for (const auto& c : res.cascades) enqueue(c, now, task.deadline);
    }
    for (const auto& [index, deadline] : applied) engine_.note_applied(index, deadline);
    return st;
}

DrainStats UpdatePipeline::drain_all(LogicalTime now) {
    return drain(now, std::numeric_limits<std::int64_t>::max());
}

LagStatus UpdatePipeline::lag_alarm(LogicalTime now) const {
    LagStatus out;
    auto m = queue_.min_deadline();
    if (!m) return out;
    out.empty = false;
    out.headroom_ms = *m - now;
    auto threshold = static_cast<std::int64_t>(headroom_fraction_ * static_cast<double>(spec_.staleness_bound_ms));
    out.at_risk = out.headroom_ms < threshold;
    return out;
}

LogicalTime UpdatePipeline::watermark(const std::string& index, const PartitionInfo& p, std::size_t replica,
                                      LogicalTime now) const {
    std::optional<LogicalTime> pending;
    if (auto it = upstream_.find(index); it != upstream_.end()) {
        for (const auto& up : it->second) {
            if (auto d = queue_.min_deadline_for(up)) pending = pending ? std::min(*pending, *d) : *d;
        }
    }
    if (p.backlog_min[replica] != no_time) {
        pending = pending ? std::min(*pending, p.backlog_min[replica]) : p.backlog_min[replica];
    }
    return pending ? *pending - 1 : now + spec_.staleness_bound_ms - 1;
}

void UpdatePipeline::refresh_watermarks(LogicalTime now) {
    for (const auto& name : engine_.index_names()) {
        for (const auto& p : engine_.partitions_for(name, CompositeKey{}, CompositeKey{})) {
            for (std::size_t i = 0; i < p.nodes.size(); ++i) {
                engine_.advance_watermark(name, p.id, p.nodes[i], watermark(name, p, i, now));
            }
        }
    }
}

ReadOutcome UpdatePipeline::read(const RangeQuery& query, SessionToken& session, LogicalTime now,
                                 LogicalTime started) {
    const std::int64_t bound = spec_.staleness_bound_ms;
    const bool ryw = spec_.requires_session(SessionGuarantee::read_your_writes);
    const bool mr = spec_.requires_session(SessionGuarantee::monotonic_reads);
    const bool timed_out = now - started >= spec_.latency_sla.bound_ms;

    auto parts = engine_.partitions_for(query.index, query.low, query.high);
    if (static_cast<int>(parts.size()) > engine_.max_partitions_per_read()) {
        throw RangeTooWide("range on '" + query.index + "' spans " + std::to_string(parts.size()) + " partitions");
    }
    auto fail = [](Axis reason) {
        ReadOutcome o;
        o.kind = ReadOutcome::Kind::failed;
        o.reason = reason;
        return o;
    };
    auto stall = [&](Axis reason) {
        if (timed_out) return fail(reason);
        ReadOutcome o;
        o.kind = ReadOutcome::Kind::stalled;
        o.until = now + 1;
        o.reason = reason;
        return o;
    };

    struct Choice {
        const PartitionInfo* part;
        std::size_t replica;
        LogicalTime w;
        std::int64_t staleness;
    };
    std::vector<Choice> plan;
    bool stale = false;
    for (const auto& p : parts) {
        std::vector<std::size_t> reachable;
        for (std::size_t i = 0; i < p.nodes.size(); ++i) {
            if (client_reaches(p.nodes[i])) reachable.push_back(i);
        }
        if (reachable.empty()) return fail(Axis::availability);

        LogicalTime need = ryw ? session.write_version(query.index) : no_time;
        SessionToken::ReadMark mark;
        if (mr) {
            if (auto it = session.read_versions.find({query.index, p.id}); it != session.read_versions.end()) {
                mark = it->second;
            }
        }
        std::optional<Choice> best;
        for (auto i : reachable) {
            LogicalTime w = watermark(query.index, p, i, now);
            if (w < need) continue;
            if (mr && w < mark.version && p.nodes[i] != mark.node) continue;
            if (!best || w > best->w) best = Choice{&p, i, w, std::max<std::int64_t>(0, now + bound - 1 - w)};
        }
        if (!best) return stall(Axis::read_consistency);

        if (best->staleness > bound) {
            ++arbitration_events_;
            auto disp = arbitrate({Axis::availability, Axis::read_consistency}, spec_.priority_order);
            if (disp[Axis::read_consistency] == Disposition::satisfied) return stall(Axis::read_consistency);
            stale = true;
        }
        plan.push_back(*best);
    }

    ReadOutcome out;
    out.stale = stale;
    for (const auto& c : plan) {
        std::int64_t remaining = query.limit - static_cast<std::int64_t>(out.entries.size());
        if (remaining <= 0) break;
        const auto& p = *c.part;
        CompositeKey lo = std::max(query.low, p.low);
        CompositeKey hi = query.high;
        if (hi.empty() || (!p.high.empty() && p.high < hi)) hi = p.high;
        auto entries = engine_.get_range(query.index, lo, hi, remaining, p.nodes[c.replica]);
        out.entries.insert(out.entries.end(), entries.begin(), entries.end());
        out.max_staleness_ms = std::max(out.max_staleness_ms, c.staleness);
        out.replicas.push_back(p.nodes[c.replica]);
        if (mr) {
            auto& mark = session.read_versions[{query.index, p.id}];
            mark.version = std::max({mark.version, c.w, p.applied_max[c.replica]});
            mark.node = p.nodes[c.replica];
        }
    }
    return out;
}

}  // namespace scalestore

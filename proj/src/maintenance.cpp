#include "scalestore/maintenance.hpp"

#include <algorithm>

#include "scalestore/errors.hpp"

namespace scalestore {

std::vector<std::string> RowChange::changed_fields(const TableDef& def) const {
    std::vector<std::string> out;
    for (std::size_t f = 0; f < def.fields.size(); ++f) {
        if (!old_row || !new_row || (*old_row)[f] != (*new_row)[f]) out.push_back(def.fields[f].name);
    }
    return out;
}

Maintainer::Maintainer(const Schema& schema, const MaintenanceTable& table, StorageEngine& engine)
    : schema_(schema), table_(table), engine_(engine) {
    for (const auto& t : schema.tables) {
        relations_.emplace(t.name, Relation(t));
        base_.insert(t.name);
    }
    for (const auto& name : table.index_order()) {
        const auto& def = table.index(name);
        if (!def.row_copy) continue;
        TableDef mirror = def.plan.tables[def.plan.target];
        mirror.name = def.name;
        relations_.emplace(def.name, Relation(mirror));
    }
    for (const auto& r : schema.relationships) {
        structural_[r.from_table].insert(schema.require_table(r.from_table).require_field(r.from_field));
        structural_[r.to_table].insert(schema.require_table(r.to_table).require_field(r.to_field));
    }
}

bool Maintainer::is_base(const std::string& relation) const { return base_.contains(relation); }

Relation& Maintainer::relation(const std::string& name) {
    auto it = relations_.find(name);
    if (it == relations_.end()) throw UnknownTable(name);
    return it->second;
}

const Relation& Maintainer::relation(const std::string& name) const {
    auto it = relations_.find(name);
    if (it == relations_.end()) throw UnknownTable(name);
    return it->second;
}

std::string Maintainer::identity(const std::string& relation, const CompositeKey& pk) const {
    return relation + '\x1f' + pk.bytes();
}

std::vector<RowChange> Maintainer::commit(const std::string& table, const CompositeKey& pk,
                                          std::optional<Row> new_row, LogicalTime commit_time) {
    Relation& rel = relation(table);
    std::optional<Row> old_row;
    if (const auto* cur = rel.find(pk)) old_row = cur->row;
    if (new_row) {
        if (!(rel.key_of(*new_row) == pk)) throw ValidationError("row does not match its primary key");
        rel.upsert(*new_row, commit_time);
    } else {
        rel.remove(pk);
    }
    if (!old_row && !new_row) return {};

    bool structural = false;
    if (old_row && new_row) {
        for (auto f : structural_[table]) structural = structural || (*old_row)[f] != (*new_row)[f];
    }
    if (structural) {
        return {RowChange{table, pk, old_row, std::nullopt, commit_time},
                RowChange{table, pk, std::nullopt, new_row, commit_time}};
    }
    return {RowChange{table, pk, std::move(old_row), std::move(new_row), commit_time}};
}

void Maintainer::count(std::int64_t& ops, std::int64_t budget, const MaintenanceRule& rule) const {
    if (++ops > budget && budget != unbounded_fanout) {
        throw BudgetExceeded(rule.update_fn + " exceeded its budget of " + std::to_string(budget) + " ops");
    }
}

std::vector<Maintainer::Binding> Maintainer::expand(const IndexDefinition& def, std::size_t alias,
                                                    const StoredRow& row, std::int64_t& ops, std::int64_t budget,
                                                    const MaintenanceRule& rule) const {
    const auto& plan = def.plan;
    const std::size_t n = plan.tables.size();
    std::vector<Binding> partial{Binding(n, nullptr)};
    partial[0][alias] = &row;
    std::vector<bool> bound(n, false);
    bound[alias] = true;

    for (std::size_t step = 1; step < n; ++step) {
        const JoinStep* hop = nullptr;
        for (const auto& j : plan.joins) {
            if (bound[j.added.alias] != bound[j.existing.alias]) {
                hop = &j;
                break;
            }
        }
        if (!hop) throw ValidationError("join graph of '" + def.name + "' is not connected");
        FieldRef from = bound[hop->added.alias] ? hop->added : hop->existing;
        FieldRef to = bound[hop->added.alias] ? hop->existing : hop->added;
        const Relation& rel = relation(plan.tables[to.alias].name);
        std::vector<Binding> next;
        for (const auto& p : partial) {
            count(ops, budget, rule);
            for (const StoredRow* r : rel.rows_where(to.field, p[from.alias]->row[from.field])) {
                Binding b = p;
                b[to.alias] = r;
                next.push_back(std::move(b));
            }
        }
        partial = std::move(next);
        bound[to.alias] = true;
    }

    // A parameter named by several predicates requires those fields to agree.
    std::erase_if(partial, [&](const Binding& b) {
        for (const auto& p : plan.predicates) {
            for (const auto& q : plan.predicates) {
                if (p.param == q.param &&
                    b[p.field.alias]->row[p.field.field] != b[q.field.alias]->row[q.field.field]) {
                    return true;
                }
            }
        }
        return false;
    });
    return partial;
}

Entry Maintainer::entry_for(const IndexDefinition& def, const Binding& b) const {
    Tuple key;
    for (const auto& slot : def.key_fields) key.push_back(b[slot.field.alias]->row[slot.field.field]);
    auto key_kinds = def.key_kinds();

    const auto& target_def = def.plan.tables[def.plan.target];
    const Row& target = b[def.plan.target]->row;
    std::string value;
    if (def.row_copy || def.base_table) {
        auto kinds = target_def.row_kinds();
        value = encode_key(target, kinds).bytes();
    } else {
        auto kinds = target_def.key_kinds();
        value = encode_key(target_def.primary_key_of(target), kinds).bytes();
    }
    LogicalTime version = 0;
    for (const StoredRow* r : b) version = std::max(version, r->version);
    return Entry{encode_key(key, key_kinds), VersionedRecord{std::move(value), version, 0}};
}

TaskResult Maintainer::apply(const MaintenanceRule& rule, const RowChange& change, LogicalTime deadline) {
    const IndexDefinition& def = table_.index(rule.index);
    const auto& plan = def.plan;
    const std::int64_t budget = rule.op_budget;
    TaskResult res;
    auto& reverse = reverse_[def.name];
    auto& participants = participants_[def.name];

    // Remove every entry the changed row participates in.
    count(res.ops, budget, rule);
    if (auto it = reverse.find(identity(rule.table, change.pk)); it != reverse.end()) {
        std::set<CompositeKey> keys = it->second;
        for (const auto& key : keys) {
            count(res.ops, budget, rule);
            engine_.erase(def.name, key, deadline);
            for (const auto& id : participants[key]) {
                auto r = reverse.find(id);
                if (r == reverse.end()) continue;
                r->second.erase(key);
                if (r->second.empty()) reverse.erase(r);
            }
            participants.erase(key);
            ++res.entries_removed;
        }
    }

    // Re-derive entries from the row's current state, once per position
    // the relation occupies in the plan.
    const Relation& source = relation(rule.table);
    if (const StoredRow* current = source.find(change.pk)) {
        for (std::size_t a = 0; a < plan.tables.size(); ++a) {
            if (plan.tables[a].name != rule.table) continue;
            for (const auto& b : expand(def, a, *current, res.ops, budget, rule)) {
                Entry e = entry_for(def, b);
                count(res.ops, budget, rule);
                engine_.set(def.name, e.key, e.record, deadline);
                ++res.entries_written;
                if (participants.contains(e.key)) continue;
                std::vector<std::string> ids;
                for (std::size_t x = 0; x < b.size(); ++x) {
                    const Relation& rel = relation(plan.tables[x].name);
                    ids.push_back(identity(rel.def().name, rel.key_of(b[x]->row)));
                }
                for (const auto& id : ids) reverse[id].insert(e.key);
                participants.emplace(e.key, std::move(ids));
            }
        }
    }

    if (def.row_copy) {
        Relation& mirror = relation(def.name);
        std::optional<StoredRow> before;
        if (const auto* m = mirror.find(change.pk)) before = *m;
        std::optional<StoredRow> after;
        if (const auto* cur = source.find(change.pk)) after = *cur;
        bool same = before.has_value() == after.has_value() &&
                    (!before || (before->row == after->row && before->version == after->version));
        if (!same) {
            if (after) {
                mirror.upsert(after->row, after->version);
            } else {
                mirror.remove(change.pk);
            }
            RowChange cascade{def.name, change.pk, std::nullopt, std::nullopt, change.commit};
            if (before) cascade.old_row = before->row;
            if (after) cascade.new_row = after->row;
            res.cascades.push_back(std::move(cascade));
        }
    }
    return res;
}

}  // namespace scalestore

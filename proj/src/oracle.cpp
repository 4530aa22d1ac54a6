#include "scalestore/oracle.hpp"

#include <functional>

namespace scalestore {

namespace {

using Bound = std::vector<const StoredRow*>;

void enumerate(const BaseSnapshot& base, const QueryTemplate& t, std::optional<std::size_t> fixed_alias,
               const StoredRow* fixed_row, const std::function<void(const Bound&)>& emit) {
    const std::size_t n = t.tables.size();
    Bound bound(n, nullptr);
    static const std::vector<StoredRow> none;

    std::function<void(std::size_t)> level = [&](std::size_t i) {
        if (i == n) {
            emit(bound);
            return;
        }
        auto it = base.find(t.tables[i].name);
        const auto& rows = it == base.end() ? none : it->second;
        auto consider = [&](const StoredRow& r) {
            bound[i] = &r;
            for (const auto& j : t.joins) {
                if (std::max(j.added.alias, j.existing.alias) != i) continue;
                if (bound[j.added.alias]->row[j.added.field] != bound[j.existing.alias]->row[j.existing.field]) {
                    return;
                }
            }
            for (const auto& p : t.predicates) {
                for (const auto& q : t.predicates) {
                    if (p.param != q.param || p.field.alias > i || q.field.alias > i) continue;
                    if (bound[p.field.alias]->row[p.field.field] != bound[q.field.alias]->row[q.field.field]) return;
                }
            }
            level(i + 1);
        };
        if (fixed_alias && *fixed_alias == i) {
            consider(*fixed_row);
        } else {
            for (const auto& r : rows) consider(r);
        }
        bound[i] = nullptr;
    };
    level(0);
}

std::vector<Tuple> identity_of(const QueryTemplate& t, const Bound& b) {
    std::vector<Tuple> out;
    for (std::size_t a = 0; a < b.size(); ++a) out.push_back(t.tables[a].primary_key_of(b[a]->row));
    return out;
}

void fill(const BaseSnapshot& base, const QueryTemplate& evaluated, const IndexDefinition& def, IndexContents& out) {
    const auto& target_def = evaluated.tables[evaluated.target];
    enumerate(base, evaluated, std::nullopt, nullptr, [&](const Bound& b) {
        Tuple key;
        std::vector<FieldKind> kinds;
        for (const auto& slot : def.key_fields) {
            key.push_back(b[slot.field.alias]->row[slot.field.field]);
            kinds.push_back(evaluated.tables[slot.field.alias].fields[slot.field.field].kind);
        }
        const Row& target = b[evaluated.target]->row;
        std::string value;
        if (def.row_copy) {
            auto rk = target_def.row_kinds();
            value = encode_key(target, rk).bytes();
        } else {
            auto pk = target_def.primary_key_of(target);
            auto pkk = target_def.key_kinds();
            value = encode_key(pk, pkk).bytes();
        }
        LogicalTime version = 0;
        for (const auto* r : b) version = std::max(version, r->version);
        out[encode_key(key, kinds)] = OracleEntry{std::move(value), version};
    });
}

}  // namespace

std::map<std::string, IndexContents> oracle_indices(const BaseSnapshot& base,
                                                    const std::vector<QueryTemplate>& templates,
                                                    const MaintenanceTable& table) {
    std::map<std::string, IndexContents> out;
    for (const auto& name : table.index_order()) {
        const auto& def = table.index(name);
        if (def.base_table) continue;
        if (def.row_copy) {
            fill(base, def.plan, def, out[name]);  // single alias over the base table
            continue;
        }
        for (const auto& t : templates) {
            if (t.name == name) {
                fill(base, t, def, out[name]);
                break;
            }
        }
    }
    return out;
}

std::set<std::vector<Tuple>> oracle_tuples(const BaseSnapshot& base, const QueryTemplate& tmpl) {
    std::set<std::vector<Tuple>> out;
    enumerate(base, tmpl, std::nullopt, nullptr, [&](const Bound& b) { out.insert(identity_of(tmpl, b)); });
    return out;
}

std::set<std::vector<Tuple>> oracle_tuples_containing(const BaseSnapshot& base, const QueryTemplate& tmpl,
                                                      const std::string& table, const Tuple& pk) {
    std::set<std::vector<Tuple>> out;
    auto it = base.find(table);
    if (it == base.end()) return out;
    const StoredRow* row = nullptr;
    for (const auto& r : it->second) {
        if (tmpl.tables.empty()) break;
        const TableDef* def = nullptr;
        for (const auto& t : tmpl.tables) {
            if (t.name == table) def = &t;
        }
        if (!def) return out;
        if (def->primary_key_of(r.row) == pk) {
            row = &r;
            break;
        }
    }
    if (!row) return out;
    for (std::size_t a = 0; a < tmpl.tables.size(); ++a) {
        if (tmpl.tables[a].name != table) continue;
        enumerate(base, tmpl, a, row, [&](const Bound& b) { out.insert(identity_of(tmpl, b)); });
    }
    return out;
}

}  // namespace scalestore

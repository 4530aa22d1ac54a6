#include <algorithm>
#include <deque>
#include <limits>
#include <set>
#include <sstream>

#include "scalestore/errors.hpp"
#include "scalestore/query.hpp"

namespace scalestore {

namespace {

constexpr std::int64_t fanout_cap = std::numeric_limits<std::int64_t>::max() / 4;

std::int64_t sat_mul(std::int64_t a, std::int64_t b) {
    if (a == unbounded_fanout || b == unbounded_fanout) return unbounded_fanout;
    if (a != 0 && b > fanout_cap / a) return fanout_cap;
    return a * b;
}

std::int64_t sat_pow(std::int64_t base, std::size_t exp) {
    std::int64_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) out = sat_mul(out, base);
    return out;
}

// Entries of the plan's index that one change to `relation` can touch.
// Each alias reading the relation can hold the changed row; from a fixed
// alias every hop extends a partial result by at most its bound, so the
// direct count is m * prod(bounds). Repeated relations are also charged as
// an m-level cascade, prod(bounds)^m, and the larger figure is reported.
std::int64_t edge_fanout(const QueryTemplate& plan, std::string_view relation) {
    std::int64_t hops = 1;
    for (const auto& j : plan.joins) {
        if (!j.bound) return unbounded_fanout;
        hops = sat_mul(hops, *j.bound);
    }
    auto m = static_cast<std::int64_t>(plan.occurrences(relation));
    if (m == 0) return 0;
    return std::max(sat_mul(m, hops), sat_pow(hops, static_cast<std::size_t>(m)));
}

std::vector<KeySlot> key_layout(const QueryTemplate& t) {
    std::vector<KeySlot> slots;
    if (t.is_primary_key_lookup()) {
        for (auto f : t.base().primary_key) {
            for (const auto& p : t.predicates) {
                if (p.field.field == f) {
                    slots.push_back({KeySlot::Role::param, p.param, t.base().fields[f].kind,
                                     p.field, p.param});
                    break;
                }
            }
        }
        return slots;
    }
    for (const auto& param : t.params) {
        for (const auto& p : t.predicates) {
            if (p.param == param) {
                slots.push_back({KeySlot::Role::param, param,
                                 t.tables[p.field.alias].fields[p.field.field].kind, p.field, param});
                break;
            }
        }
    }
    if (t.order_by) {
        slots.push_back({KeySlot::Role::order_by, t.aliases[t.order_by->alias] + "." + t.field_name(*t.order_by),
                         t.tables[t.order_by->alias].fields[t.order_by->field].kind, *t.order_by, {}});
    }
    for (std::size_t a = 0; a < t.tables.size(); ++a) {
        for (auto f : t.tables[a].primary_key) {
            FieldRef ref{a, f};
            slots.push_back({KeySlot::Role::tiebreak, t.aliases[a] + "." + t.field_name(ref),
                             t.tables[a].fields[f].kind, ref, {}});
        }
    }
    return slots;
}

struct Plan {
    std::vector<IndexDefinition> intermediates;
    IndexDefinition index;
};

IndexDefinition make_index(const QueryTemplate& plan, bool row_copy, const std::string& source) {
    IndexDefinition def;
    def.name = plan.name;
    def.plan = plan;
    def.row_copy = row_copy;
    def.base_table = plan.is_primary_key_lookup();
    def.key_fields = key_layout(plan);
    def.source_templates.push_back(source);
    return def;
}

// Relations read more than once are first re-materialized as an
// intermediate index (a re-keyed copy of the table). Every alias of that
// table then reads the copy, so changes reach the final index as a cascade.
Plan plan_template(const QueryTemplate& t) {
    Plan plan;
    QueryTemplate final_plan = t;
    std::set<std::string> handled;
    for (std::size_t a = 0; a < t.tables.size(); ++a) {
        const std::string& table = t.tables[a].name;
        if (t.occurrences(table) < 2 || handled.contains(table)) continue;
        handled.insert(table);

        const JoinStep* hop = nullptr;
        std::size_t join_field = 0;
        for (const auto& j : t.joins) {
            if (j.added.alias == a || j.existing.alias == a) {
                hop = &j;
                join_field = j.added.alias == a ? j.added.field : j.existing.field;
                break;
            }
        }
        QueryTemplate copy;
        copy.name = (hop ? hop->relationship : table) + "_index";
        copy.text = t.text;
        copy.aliases = {t.aliases[a]};
        copy.tables = {t.tables[a]};
        for (const auto& p : t.predicates) {
            if (p.field.alias != a) continue;
            copy.predicates.push_back({FieldRef{0, p.field.field}, p.param});
            if (std::find(copy.params.begin(), copy.params.end(), p.param) == copy.params.end()) {
                copy.params.push_back(p.param);
            }
        }
        copy.target = 0;
        copy.order_by = FieldRef{0, join_field};
        plan.intermediates.push_back(make_index(copy, true, t.name));

        for (auto& rel : final_plan.tables) {
            if (rel.name == table) rel.name = copy.name;
        }
    }
    plan.index = make_index(final_plan, false, t.name);
    return plan;
}

std::vector<MaintenanceRule> rules_for(const IndexDefinition& def) {
    std::vector<MaintenanceRule> specific, wildcard;
    if (def.base_table) return {};
    const auto& plan = def.plan;
    std::set<std::string> seen;
    for (std::size_t a = 0; a < plan.tables.size(); ++a) {
        const TableDef& rel = plan.tables[a];
        if (!seen.insert(rel.name).second) continue;

        std::set<std::size_t> relevant;
        for (std::size_t b = 0; b < plan.tables.size(); ++b) {
            if (plan.tables[b].name != rel.name) continue;
            for (auto f : rel.primary_key) relevant.insert(f);
            for (const auto& j : plan.joins) {
                if (j.added.alias == b) relevant.insert(j.added.field);
                if (j.existing.alias == b) relevant.insert(j.existing.field);
            }
            for (const auto& p : plan.predicates) {
                if (p.field.alias == b) relevant.insert(p.field.field);
            }
            if (plan.order_by && plan.order_by->alias == b) relevant.insert(plan.order_by->field);
            if (def.row_copy && plan.target == b) {
                for (std::size_t f = 0; f < rel.fields.size(); ++f) relevant.insert(f);
            }
        }

        std::int64_t fanout = edge_fanout(plan, rel.name);
        std::int64_t budget = fanout == unbounded_fanout
                                  ? unbounded_fanout
                                  : 1 + sat_mul(fanout, static_cast<std::int64_t>(plan.joins.size()) + 2);
        auto make = [&](std::string field) {
            MaintenanceRule r;
            r.index = def.name;
            r.table = rel.name;
            r.update_fn = "maintain_" + def.name + "_from_" + rel.name +
                          (field == wildcard_field ? std::string{} : "_" + field);
            r.field = std::move(field);
            r.op_budget = budget;
            r.fanout = fanout;
            return r;
        };

        if (relevant.size() == rel.fields.size()) {
            wildcard.push_back(make(std::string(wildcard_field)));
            continue;
        }
        bool any = false;
        for (auto f : relevant) {
            if (rel.is_primary_key(f)) continue;
            specific.push_back(make(rel.fields[f].name));
            any = true;
        }
        if (!any) specific.push_back(make(rel.fields[rel.primary_key.front()].name));
    }
    specific.insert(specific.end(), wildcard.begin(), wildcard.end());
    return specific;
}

}  // namespace

std::vector<FieldKind> IndexDefinition::key_kinds() const {
    std::vector<FieldKind> out;
    for (const auto& s : key_fields) out.push_back(s.kind);
    return out;
}

std::size_t IndexDefinition::param_slots() const {
    return static_cast<std::size_t>(std::count_if(key_fields.begin(), key_fields.end(), [](const KeySlot& s) {
        return s.role == KeySlot::Role::param;
    }));
}

std::vector<FieldKind> IndexDefinition::value_kinds() const {
    const auto& target = plan.tables[plan.target];
    return (row_copy || base_table) ? target.row_kinds() : target.key_kinds();
}

bool MaintenanceRule::matches(std::string_view changed_table,
                              const std::vector<std::string>& changed_fields) const {
    if (changed_table != table) return false;
    if (field == wildcard_field) return true;
    return std::find(changed_fields.begin(), changed_fields.end(), field) != changed_fields.end();
}

Admission check_admissible(const QueryTemplate& tmpl, const Schema& schema, std::int64_t budget) {
    (void)schema;  // templates are already resolved against it
    FanoutReport report;
    report.template_name = tmpl.name;
    report.budget = budget;
    Plan plan = plan_template(tmpl);
    report.index = plan.index.name;

    if (plan.index.base_table) {
        report.fanouts.push_back({tmpl.base().name, 1});
        return report;
    }

    // Unbounded hops reject outright.
    for (const auto& j : tmpl.joins) {
        if (!j.bound) {
            return Rejection{tmpl.name, j.relationship, unbounded_fanout,
                             "relationship '" + j.relationship +
                                 "' has no cardinality bound; one write could touch an unbounded "
                                 "number of index entries"};
        }
    }

    std::vector<std::string> base_tables;
    for (const auto& t : tmpl.tables) {
        if (std::find(base_tables.begin(), base_tables.end(), t.name) == base_tables.end()) {
            base_tables.push_back(t.name);
        }
    }
    for (const auto& table : base_tables) {
        std::int64_t worst = edge_fanout(plan.index.plan, table);
        for (const auto& mid : plan.intermediates) {
            std::int64_t first = edge_fanout(mid.plan, table);
            if (first == 0) continue;
            worst = std::max(worst, sat_mul(first, edge_fanout(plan.index.plan, mid.name)));
        }
        report.fanouts.push_back({table, worst});
    }

    for (const auto& f : report.fanouts) {
        if (f.fanout > budget) {
            const JoinStep* widest = &tmpl.joins.front();
            for (const auto& j : tmpl.joins) {
                if (*j.bound > *widest->bound) widest = &j;
            }
            return Rejection{tmpl.name, widest->relationship, f.fanout,
                             "a write to '" + f.table + "' may touch " + std::to_string(f.fanout) +
                                 " entries, over the budget of " + std::to_string(budget)};
        }
    }
    return report;
}

CompiledTemplate compile(const QueryTemplate& tmpl, const Schema& schema) {
    auto admission = check_admissible(tmpl, schema, fanout_cap);
    if (auto* r = std::get_if<Rejection>(&admission)) {
        throw ValidationError("template '" + tmpl.name + "' is not admissible: " + r->reason);
    }
    Plan plan = plan_template(tmpl);
    CompiledTemplate out;
    for (const auto& mid : plan.intermediates) {
        auto rules = rules_for(mid);
        out.rules.insert(out.rules.end(), rules.begin(), rules.end());
    }
    auto rules = rules_for(plan.index);
    out.rules.insert(out.rules.end(), rules.begin(), rules.end());
    out.intermediates = std::move(plan.intermediates);
    out.index = std::move(plan.index);
    return out;
}

RangeQuery bind(const QueryTemplate& tmpl, const ParamMap& params) {
    RangeQuery q;
    q.index = tmpl.is_primary_key_lookup() ? tmpl.base().name : tmpl.name;
    q.limit = tmpl.limit.value_or(default_read_limit);
    Tuple prefix;
    std::vector<FieldKind> kinds;
    for (const auto& slot : key_layout(tmpl)) {
        if (slot.role != KeySlot::Role::param) break;
        auto it = params.find(slot.param);
        if (it == params.end()) throw MissingParameter(slot.param);
        if (kind_of(it->second) != slot.kind) {
            throw TypeMismatch("parameter <" + slot.param + "> expects " +
                               std::string(to_string(slot.kind)) + ", got " +
                               std::string(to_string(kind_of(it->second))));
        }
        prefix.push_back(it->second);
        kinds.push_back(slot.kind);
    }
    q.low = encode_key(prefix, kinds);
    q.high = prefix.empty() ? CompositeKey{} : prefix_successor(q.low);
    return q;
}

// ---- maintenance table ----------------------------------------------------

void MaintenanceTable::add(const CompiledTemplate& compiled) {
    auto add_index = [&](const IndexDefinition& def) {
        auto it = indices_.find(def.name);
        if (it != indices_.end()) {
            for (const auto& s : def.source_templates) {
                auto& srcs = it->second.source_templates;
                if (std::find(srcs.begin(), srcs.end(), s) == srcs.end()) srcs.push_back(s);
            }
            return;
        }
        indices_.emplace(def.name, def);
        order_.push_back(def.name);
    };
    for (const auto& mid : compiled.intermediates) add_index(mid);
    add_index(compiled.index);
    for (const auto& r : compiled.rules) {
        bool dup = std::any_of(rules_.begin(), rules_.end(), [&](const MaintenanceRule& x) {
            return x.index == r.index && x.table == r.table && x.field == r.field;
        });
        if (!dup) rules_.push_back(r);
    }
}

const IndexDefinition* MaintenanceTable::find_index(std::string_view name) const {
    auto it = indices_.find(name);
    return it == indices_.end() ? nullptr : &it->second;
}

const IndexDefinition& MaintenanceTable::index(std::string_view name) const {
    if (auto* d = find_index(name)) return *d;
    throw UnknownTable(std::string(name));
}

std::vector<std::string> MaintenanceTable::downstream(std::string_view name) const {
    std::vector<std::string> out{std::string(name)};
    std::deque<std::string> todo{std::string(name)};
    while (!todo.empty()) {
        auto cur = todo.front();
        todo.pop_front();
        for (const auto& r : rules_) {
            if (r.table == cur && std::find(out.begin(), out.end(), r.index) == out.end()) {
                out.push_back(r.index);
                todo.push_back(r.index);
            }
        }
    }
    return out;
}

std::vector<std::string> MaintenanceTable::sources_of(std::string_view index) const {
    std::vector<std::string> out;
    for (const auto& r : rules_) {
        if (r.index == index && std::find(out.begin(), out.end(), r.table) == out.end()) {
            out.push_back(r.table);
        }
    }
    return out;
}

std::string MaintenanceTable::dump() const {
    std::size_t w_index = 5, w_table = 5;
    for (const auto& r : rules_) {
        w_index = std::max(w_index, r.index.size());
        w_table = std::max(w_table, r.table.size());
    }
    auto pad = [](std::string s, std::size_t width) {
        s.resize(width + 2, ' ');
        return s;
    };
    std::string out = pad("Index", w_index) + pad("Table", w_table) + "Field\n";
    for (const auto& r : rules_) {
        out += pad(r.index, w_index) + pad(r.table, w_table) + r.field + "\n";
    }
    return out;
}

std::string format_fanout_report(const Admission& admission) {
    std::ostringstream out;
    if (const auto* r = std::get_if<Rejection>(&admission)) {
        out << "template " << r->template_name << ": REJECTED via relationship '" << r->relationship
            << "' (fan-out " << (r->fanout == unbounded_fanout ? std::string("unbounded") : std::to_string(r->fanout))
            << "): " << r->reason << "\n";
        return out.str();
    }
    const auto& rep = std::get<FanoutReport>(admission);
    out << "template " << rep.template_name << ": admissible (index " << rep.index << ", budget "
        << rep.budget << ")\n";
    for (const auto& f : rep.fanouts) {
        out << "  write to " << f.table << " -> fan-out " << f.fanout << "\n";
    }
    return out.str();
}

}  // namespace scalestore

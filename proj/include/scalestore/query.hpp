#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scalestore/key_encoding.hpp"
#include "scalestore/schema.hpp"

namespace scalestore {

inline constexpr std::int64_t default_fanout_budget = 10000;
inline constexpr std::int64_t default_read_limit = 1000;
inline constexpr std::string_view wildcard_field = "*";

struct FieldRef {
    std::size_t alias = 0;
    std::size_t field = 0;
    friend bool operator==(const FieldRef&, const FieldRef&) = default;
};

// Joins alias `added` to an earlier alias along a declared relationship.
struct JoinStep {
    FieldRef added;
    FieldRef existing;
    std::string relationship;
    std::optional<int> bound;
};

struct ParamPredicate {
    FieldRef field;
    std::string param;
};

// A parsed, name-resolved query template. `tables[i]` is the relation read
// by alias i; after compilation a relation may be an intermediate index that
// carries a copy of a base table's rows.
struct QueryTemplate {
    std::string name;  // index name
    std::string text;
    std::vector<std::string> aliases;
    std::vector<TableDef> tables;
    std::vector<JoinStep> joins;  // joins[j].added == j + 1
    std::vector<ParamPredicate> predicates;
    std::vector<std::string> params;  // distinct, first-appearance order
    std::size_t target = 0;
    std::vector<std::size_t> select_fields;  // on target; empty = all
    std::optional<FieldRef> order_by;
    std::optional<std::int64_t> limit;

    const TableDef& base() const { return tables.front(); }
    std::string field_name(const FieldRef& f) const;
    // A lookup whose params are exactly the base table's primary key; the
    // table itself is the index.
    bool is_primary_key_lookup() const;
    // Number of aliases reading `relation`.
    std::size_t occurrences(std::string_view relation) const;
};

QueryTemplate parse_template(std::string_view text, const Schema& schema);

// Templates file: several templates separated by ';'.
std::vector<QueryTemplate> parse_templates(std::string_view text, const Schema& schema);

struct KeySlot {
    enum class Role { param, order_by, tiebreak };
    Role role = Role::param;
    std::string name;
    FieldKind kind = FieldKind::string;
    FieldRef field;     // source field (first predicate for params)
    std::string param;  // for Role::param
};

struct IndexDefinition {
    std::string name;
    std::vector<KeySlot> key_fields;
    bool base_table = false;  // served by the table's own primary-key storage
    bool row_copy = false;    // value is the full target row (intermediate index)
    QueryTemplate plan;
    std::vector<std::string> source_templates;

    std::vector<FieldKind> key_kinds() const;
    std::size_t param_slots() const;
    std::vector<FieldKind> value_kinds() const;
};

struct MaintenanceRule {
    std::string index;
    std::string table;  // base table or index name
    std::string field;  // field name or "*"
    std::string update_fn;
    std::int64_t op_budget = 0;
    std::int64_t fanout = 0;  // entries of `index` one change may touch

    bool matches(std::string_view changed_table, const std::vector<std::string>& changed_fields) const;
};

inline constexpr std::int64_t unbounded_fanout = -1;

struct TableFanout {
    std::string table;
    std::int64_t fanout = 0;  // unbounded_fanout if some hop is UNBOUNDED
};

struct FanoutReport {
    std::string template_name;
    std::string index;
    std::vector<TableFanout> fanouts;
    std::int64_t budget = 0;
};

struct Rejection {
    std::string template_name;
    std::string relationship;
    std::int64_t fanout = unbounded_fanout;
    std::string reason;
};

using Admission = std::variant<FanoutReport, Rejection>;

// Worst-case fan-out per base table; admissible iff every fan-out is finite
// and <= budget.
Admission check_admissible(const QueryTemplate& tmpl, const Schema& schema,
                           std::int64_t budget = default_fanout_budget);

struct CompiledTemplate {
    IndexDefinition index;
    std::vector<IndexDefinition> intermediates;  // materialized before `index`
    std::vector<MaintenanceRule> rules;
};

CompiledTemplate compile(const QueryTemplate& tmpl, const Schema& schema);

using ParamMap = std::map<std::string, Value>;

// One contiguous range read on one index.
struct RangeQuery {
    std::string index;
    CompositeKey low;
    CompositeKey high;  // exclusive; empty = end of key space
    std::int64_t limit = default_read_limit;
};

RangeQuery bind(const QueryTemplate& tmpl, const ParamMap& params);

// Union of compiled templates: the table scanned on every base write.
class MaintenanceTable {
public:
    void add(const CompiledTemplate& compiled);

    const std::vector<MaintenanceRule>& rules() const { return rules_; }
    const IndexDefinition* find_index(std::string_view name) const;
    const IndexDefinition& index(std::string_view name) const;
    // Indices in materialization order (intermediates before dependents).
    const std::vector<std::string>& index_order() const { return order_; }
    // `name` plus every index whose contents derive from it.
    std::vector<std::string> downstream(std::string_view name) const;
    // Index name -> rule sources (tables or indices).
    std::vector<std::string> sources_of(std::string_view index) const;

    // Aligned text table: Index / Table / Field.
    std::string dump() const;

private:
    std::map<std::string, IndexDefinition, std::less<>> indices_;
    std::vector<std::string> order_;
    std::vector<MaintenanceRule> rules_;
};

std::string format_fanout_report(const Admission& admission);

}  // namespace scalestore

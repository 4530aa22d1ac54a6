#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scalestore/query.hpp"
#include "scalestore/relation.hpp"
#include "scalestore/storage.hpp"

namespace scalestore {

// One row-level change to a base table or to an intermediate index.
struct RowChange {
    std::string table;
    CompositeKey pk;
    std::optional<Row> old_row;
    std::optional<Row> new_row;
    LogicalTime commit = 0;  // commit time of the originating base write

    bool is_insert() const { return !old_row && new_row; }
    bool is_delete() const { return old_row && !new_row; }
    // All fields for inserts and deletes; differing fields for updates.
    std::vector<std::string> changed_fields(const TableDef& def) const;
};

struct TaskResult {
    std::int64_t ops = 0;
    std::size_t entries_removed = 0;
    std::size_t entries_written = 0;
    std::vector<RowChange> cascades;  // changes to an intermediate index
};

// Executes maintenance rules incrementally. Entries are deleted by row
// identity (a reverse map from participating row to entry keys) and
// re-derived by joining the row's current state with the current state of
// the other relations, so the result converges once every queued task has
// run.
class Maintainer {
public:
    Maintainer(const Schema& schema, const MaintenanceTable& table, StorageEngine& engine);

    bool is_base(const std::string& relation) const;
    Relation& relation(const std::string& name);
    const Relation& relation(const std::string& name) const;

    // Commits a base write to the relation state. An update that alters a
    // relationship field is split into a delete and an insert so each
    // change touches a bounded set of entries.
    std::vector<RowChange> commit(const std::string& table, const CompositeKey& pk, std::optional<Row> new_row,
                                  LogicalTime commit_time);

    TaskResult apply(const MaintenanceRule& rule, const RowChange& change, LogicalTime deadline);

    const MaintenanceTable& table() const { return table_; }

private:
    using Binding = std::vector<const StoredRow*>;

    void count(std::int64_t& ops, std::int64_t budget, const MaintenanceRule& rule) const;
    std::vector<Binding> expand(const IndexDefinition& def, std::size_t alias, const StoredRow& row,
                                std::int64_t& ops, std::int64_t budget, const MaintenanceRule& rule) const;
    Entry entry_for(const IndexDefinition& def, const Binding& b) const;
    std::string identity(const std::string& relation, const CompositeKey& pk) const;

    const Schema& schema_;
    const MaintenanceTable& table_;
    StorageEngine& engine_;
    std::map<std::string, Relation, std::less<>> relations_;
    std::set<std::string, std::less<>> base_;
    std::map<std::string, std::set<std::size_t>> structural_;  // relationship fields per base table
    // index -> participating row identity -> entry keys
    std::map<std::string, std::map<std::string, std::set<CompositeKey>>> reverse_;
    // index -> entry key -> participating row identities
    std::map<std::string, std::map<CompositeKey, std::vector<std::string>>> participants_;
};

}  // namespace scalestore

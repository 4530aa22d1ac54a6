#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "scalestore/key_encoding.hpp"
#include "scalestore/record.hpp"
#include "scalestore/schema.hpp"

namespace scalestore {

struct StoredRow {
    Row row;
    LogicalTime version = 0;
};

// Rows of one table (or of an intermediate index holding table rows), keyed
// by primary key, with an equality lookup on every field.
class Relation {
public:
    explicit Relation(TableDef def);

    const TableDef& def() const { return def_; }
    CompositeKey key_of(const Row& row) const;
    CompositeKey key_of_pk(const Tuple& pk) const;

    // Return the row previously stored under the same primary key.
    std::optional<StoredRow> upsert(Row row, LogicalTime version);
    std::optional<StoredRow> remove(const CompositeKey& pk);

    const StoredRow* find(const CompositeKey& pk) const;
    std::vector<const StoredRow*> rows_where(std::size_t field, const Value& value) const;
    std::size_t count_where(std::size_t field, const Value& value) const;

    std::size_t size() const { return rows_.size(); }
    const std::map<CompositeKey, StoredRow>& rows() const { return rows_; }

private:
    TableDef def_;
    std::map<CompositeKey, StoredRow> rows_;
    std::vector<std::map<Value, std::set<CompositeKey>>> by_field_;
};

}  // namespace scalestore

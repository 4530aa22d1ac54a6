#include "scalestore/relation.hpp"

#include "scalestore/errors.hpp"

namespace scalestore {

Relation::Relation(TableDef def) : def_(std::move(def)), by_field_(def_.fields.size()) {}

CompositeKey Relation::key_of(const Row& row) const {
    if (row.size() != def_.fields.size()) {
        throw TypeMismatch("row for '" + def_.name + "' has " + std::to_string(row.size()) + " values, expected " +
                           std::to_string(def_.fields.size()));
    }
    auto kinds = def_.row_kinds();
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (kind_of(row[i]) != kinds[i]) {
            throw TypeMismatch("field " + def_.name + "." + def_.fields[i].name + " expects " +
                               std::string(to_string(kinds[i])));
        }
    }
    return key_of_pk(def_.primary_key_of(row));
}

CompositeKey Relation::key_of_pk(const Tuple& pk) const {
    auto kinds = def_.key_kinds();
    return encode_key(pk, kinds);
}

std::optional<StoredRow> Relation::upsert(Row row, LogicalTime version) {
    auto pk = key_of(row);
    auto previous = remove(pk);
    for (std::size_t f = 0; f < row.size(); ++f) by_field_[f][row[f]].insert(pk);
    rows_.emplace(pk, StoredRow{std::move(row), version});
    return previous;
}

std::optional<StoredRow> Relation::remove(const CompositeKey& pk) {
    auto it = rows_.find(pk);
    if (it == rows_.end()) return std::nullopt;
    StoredRow old = std::move(it->second);
    rows_.erase(it);
    for (std::size_t f = 0; f < old.row.size(); ++f) {
        auto& m = by_field_[f];
        auto bucket = m.find(old.row[f]);
        bucket->second.erase(pk);
        if (bucket->second.empty()) m.erase(bucket);
    }
    return old;
}

const StoredRow* Relation::find(const CompositeKey& pk) const {
    auto it = rows_.find(pk);
    return it == rows_.end() ? nullptr : &it->second;
}

std::vector<const StoredRow*> Relation::rows_where(std::size_t field, const Value& value) const {
    std::vector<const StoredRow*> out;
    auto bucket = by_field_[field].find(value);
    if (bucket == by_field_[field].end()) return out;
    for (const auto& pk : bucket->second) out.push_back(&rows_.at(pk));
    return out;
}

std::size_t Relation::count_where(std::size_t field, const Value& value) const {
    auto bucket = by_field_[field].find(value);
    return bucket == by_field_[field].end() ? 0 : bucket->second.size();
}

}  // namespace scalestore

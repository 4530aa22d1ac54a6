#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scalestore/value.hpp"

namespace scalestore {

struct FieldDef {
    std::string name;
    FieldKind kind = FieldKind::string;
};

struct TableDef {
    std::string name;
    std::vector<FieldDef> fields;
    std::vector<std::size_t> primary_key;  // positions into fields

    std::optional<std::size_t> field_index(std::string_view field) const;
    std::size_t require_field(std::string_view field) const;  // throws UnknownField
    bool is_primary_key(std::size_t field) const;
    std::vector<FieldKind> key_kinds() const;
    std::vector<FieldKind> row_kinds() const;
    Tuple primary_key_of(const Row& row) const;
};

// A declared join path with a symmetric cardinality bound: every row on
// either side matches at most `bound` rows on the other side.
struct Relationship {
    std::string name;
    std::string from_table;
    std::string from_field;
    std::string to_table;
    std::string to_field;
    std::optional<int> bound;  // nullopt = UNBOUNDED
};

struct Schema {
    std::vector<TableDef> tables;
    std::vector<Relationship> relationships;

    const TableDef* find_table(std::string_view name) const;
    const TableDef& require_table(std::string_view name) const;  // throws UnknownTable
    const Relationship* find_relationship(std::string_view name) const;

    // Throws ValidationError / UnknownTable / UnknownField.
    void validate() const;
};

// Plain-text schema format, one declaration per line, '#' comments:
//
//   table profiles
//     id string key
//     name string
//     birthday date
//   relationship friend_profile friendships.f2 -> profiles.id bound 4
//   relationship followed_by follows.followee -> users.id unbounded
Schema parse_schema(std::string_view text);

}  // namespace scalestore

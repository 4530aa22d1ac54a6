#include "scalestore/schema.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "scalestore/errors.hpp"

namespace scalestore {

std::optional<std::size_t> TableDef::field_index(std::string_view field) const {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].name == field) return i;
    }
    return std::nullopt;
}

std::size_t TableDef::require_field(std::string_view field) const {
    auto i = field_index(field);
    if (!i) throw UnknownField(name + "." + std::string(field));
    return *i;
}

bool TableDef::is_primary_key(std::size_t field) const {
    return std::find(primary_key.begin(), primary_key.end(), field) != primary_key.end();
}

std::vector<FieldKind> TableDef::key_kinds() const {
    std::vector<FieldKind> out;
    for (auto i : primary_key) out.push_back(fields[i].kind);
    return out;
}

std::vector<FieldKind> TableDef::row_kinds() const {
    std::vector<FieldKind> out;
    for (const auto& f : fields) out.push_back(f.kind);
    return out;
}

Tuple TableDef::primary_key_of(const Row& row) const {
    Tuple out;
    for (auto i : primary_key) out.push_back(row[i]);
    return out;
}

const TableDef* Schema::find_table(std::string_view name) const {
    for (const auto& t : tables) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

const TableDef& Schema::require_table(std::string_view name) const {
    if (auto* t = find_table(name)) return *t;
    throw UnknownTable(std::string(name));
}

const Relationship* Schema::find_relationship(std::string_view name) const {
    for (const auto& r : relationships) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

void Schema::validate() const {
    std::set<std::string> names;
    for (const auto& t : tables) {
        if (!names.insert(t.name).second) throw ValidationError("duplicate table '" + t.name + "'");
        if (t.primary_key.empty()) throw ValidationError("table '" + t.name + "' has no primary key");
        std::set<std::string> fields;
        for (const auto& f : t.fields) {
            if (!fields.insert(f.name).second) {
                throw ValidationError("duplicate field '" + t.name + "." + f.name + "'");
            }
        }
    }
    std::set<std::string> rels;
    for (const auto& r : relationships) {
        if (!rels.insert(r.name).second) {
            throw ValidationError("duplicate relationship '" + r.name + "'");
        }
        const auto& from = require_table(r.from_table);
        const auto& to = require_table(r.to_table);
        auto fi = from.require_field(r.from_field);
        auto ti = to.require_field(r.to_field);
        if (from.fields[fi].kind != to.fields[ti].kind) {
            throw ValidationError("relationship '" + r.name + "' joins fields of different kinds");
        }
        if (r.bound && *r.bound <= 0) {
            throw ValidationError("relationship '" + r.name + "' bound must be positive");
        }
    }
}

namespace {

std::vector<std::string> words_of(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::pair<std::string, std::string> split_dotted(const std::string& s, std::size_t pos) {
    auto dot = s.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == s.size()) {
        throw SyntaxError(pos, "expected table.field, got '" + s + "'");
    }
    return {s.substr(0, dot), s.substr(dot + 1)};
}

}  // namespace

Schema parse_schema(std::string_view text) {
    Schema schema;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t offset = 0;
    TableDef* current = nullptr;
    while (std::getline(in, line)) {
        std::size_t line_start = offset;
        offset += line.size() + 1;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        auto w = words_of(line);
        if (w.empty()) continue;

        if (w[0] == "table") {
            if (w.size() != 2) throw SyntaxError(line_start, "expected 'table <name>'");
            schema.tables.push_back(TableDef{w[1], {}, {}});
            current = &schema.tables.back();
        } else if (w[0] == "relationship") {
            // relationship <name> <from.t> -> <to.t> bound <K>|unbounded
            bool ok = (w.size() == 7 && w[3] == "->" && w[5] == "bound") ||
                      (w.size() == 6 && w[3] == "->" && w[5] == "unbounded");
            if (!ok) {
                throw SyntaxError(line_start,
                                  "expected 'relationship <name> <t.f> -> <t.f> bound <K>|unbounded'");
            }
            Relationship r;
            r.name = w[1];
            std::tie(r.from_table, r.from_field) = split_dotted(w[2], line_start);
            std::tie(r.to_table, r.to_field) = split_dotted(w[4], line_start);
            if (w.size() == 7) {
                if (w[6] == "unbounded" || w[6] == "UNBOUNDED") {
                    r.bound = std::nullopt;
                } else {
                    int k = 0;
                    auto [ptr, ec] = std::from_chars(w[6].data(), w[6].data() + w[6].size(), k);
                    if (ec != std::errc{} || ptr != w[6].data() + w[6].size()) {
                        throw SyntaxError(line_start, "bad cardinality bound '" + w[6] + "'");
                    }
                    r.bound = k;
                }
            }
            schema.relationships.push_back(std::move(r));
            current = nullptr;
        } else {
            if (!current) throw SyntaxError(line_start, "field declared outside a table");
            if (w.size() < 2 || w.size() > 3 || (w.size() == 3 && w[2] != "key")) {
                throw SyntaxError(line_start, "expected '<field> <kind> [key]'");
            }
            current->fields.push_back(FieldDef{w[0], parse_field_kind(w[1])});
            if (w.size() == 3) current->primary_key.push_back(current->fields.size() - 1);
        }
    }
    schema.validate();
    return schema;
}

}  // namespace scalestore

#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace scalestore {

enum class FieldKind { string, integer, date };

std::string_view to_string(FieldKind kind);
FieldKind parse_field_kind(std::string_view text);

// Calendar date stored as days since 1970-01-01.
struct Date {
    std::int32_t days = 0;

    auto operator<=>(const Date&) const = default;

    static Date from_ymd(int year, unsigned month, unsigned day);
    static Date parse(std::string_view iso);  // YYYY-MM-DD
    std::string iso() const;
};

// Variant alternative order matches FieldKind.
using Value = std::variant<std::string, std::int64_t, Date>;
using Row = std::vector<Value>;
using Tuple = std::vector<Value>;

FieldKind kind_of(const Value& value);
std::string format_value(const Value& value);
Value parse_value(FieldKind kind, std::string_view text);
std::string format_row(const Row& row);

}  // namespace scalestore

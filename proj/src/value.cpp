#include "scalestore/value.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "scalestore/errors.hpp"

namespace scalestore {

std::string_view to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::string: return "string";
        case FieldKind::integer: return "int";
        case FieldKind::date: return "date";
    }
    return "?";
}

FieldKind parse_field_kind(std::string_view text) {
    if (text == "string") return FieldKind::string;
    if (text == "int" || text == "integer") return FieldKind::integer;
    if (text == "date") return FieldKind::date;
    throw ValidationError("unknown field kind '" + std::string(text) + "'");
}

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok()) throw TypeMismatch("invalid calendar date");
    return Date{static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count())};
}

Date Date::parse(std::string_view iso) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        throw TypeMismatch("expected YYYY-MM-DD date, got '" + std::string(iso) + "'");
    }
    auto parse_part = [&](std::string_view part, auto& out) {
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        if (ec != std::errc{} || ptr != part.data() + part.size()) {
            throw TypeMismatch("expected YYYY-MM-DD date, got '" + std::string(iso) + "'");
        }
    };
    parse_part(iso.substr(0, 4), y);
    parse_part(iso.substr(5, 2), m);
    parse_part(iso.substr(8, 2), d);
    return from_ymd(y, m, d);
}

std::string Date::iso() const {
    using namespace std::chrono;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

FieldKind kind_of(const Value& value) {
    return static_cast<FieldKind>(value.index());
}

std::string format_value(const Value& value) {
    switch (kind_of(value)) {
        case FieldKind::string: return std::get<std::string>(value);
        case FieldKind::integer: return std::to_string(std::get<std::int64_t>(value));
        case FieldKind::date: return std::get<Date>(value).iso();
    }
    return {};
}

Value parse_value(FieldKind kind, std::string_view text) {
    switch (kind) {
        case FieldKind::string: return std::string(text);
        case FieldKind::integer: {
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || ptr != text.data() + text.size()) {
                throw TypeMismatch("expected integer, got '" + std::string(text) + "'");
            }
            return v;
        }
        case FieldKind::date: return Date::parse(text);
    }
    throw TypeMismatch("bad kind");
}

std::string format_row(const Row& row) {
    std::string out = "(";
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ", ";
        out += format_value(row[i]);
    }
    return out + ")";
}

}  // namespace scalestore

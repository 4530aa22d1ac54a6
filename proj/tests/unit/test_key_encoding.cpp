#include <random>

#include <doctest.h>

#include "scalestore/key_encoding.hpp"

using namespace scalestore;

namespace {

Value random_value(std::mt19937_64& rng, FieldKind kind) {
    switch (kind) {
    case FieldKind::string: {
        // Short strings over a tiny alphabet, including NUL and 0xFF, so
        // prefixes and escapes collide often.
        static const char alphabet[] = {'\0', '\x01', 'a', 'b', '\xff'};
        std::string s(rng() % 4, 'a');
        for (auto& c : s) c = alphabet[rng() % sizeof alphabet];
        return s;
    }
    case FieldKind::integer: {
        static const std::int64_t edges[] = {INT64_MIN, -1, 0, 1, INT64_MAX};
        if (rng() % 3 == 0) return edges[rng() % 5];
        return static_cast<std::int64_t>(rng() % 21) - 10;
    }
    case FieldKind::date: return Date{static_cast<std::int32_t>(rng() % 41) - 20};
    }
    return std::string();
}

}  // namespace

TEST_SUITE("key_encoding") {

TEST_CASE("date order within a user prefix") {
    std::vector<FieldKind> kinds{FieldKind::string, FieldKind::date};
    Tuple a{std::string("u1"), Date::parse("1980-05-12")};
    Tuple b{std::string("u1"), Date::parse("1981-01-01")};
    CHECK(encode_key(a, kinds) < encode_key(b, kinds));
    CHECK(encode_key(a, kinds) == encode_key(Tuple{std::string("u1"), Date::from_ymd(1980, 5, 12)}, kinds));
}

TEST_CASE("random tuple pairs order like the tuples") {
    std::mt19937_64 rng(20240501);
    const std::vector<std::vector<FieldKind>> shapes{
        {FieldKind::string},
        {FieldKind::integer},
        {FieldKind::string, FieldKind::date},
        {FieldKind::string, FieldKind::integer, FieldKind::string},
        {FieldKind::date, FieldKind::string}};
    for (int i = 0; i < 1000; ++i) {
        const auto& kinds = shapes[rng() % shapes.size()];
        Tuple a, b;
        for (auto k : kinds) {
            a.push_back(random_value(rng, k));
            b.push_back(rng() % 4 == 0 ? a.back() : random_value(rng, k));
        }
        auto ka = encode_key(a, kinds);
        auto kb = encode_key(b, kinds);
        auto expected = compare_tuples(a, b);
        CAPTURE(ka.hex());
        CAPTURE(kb.hex());
        CHECK((ka <=> kb) == expected);
        CHECK(decode_key(ka, kinds) == a);
    }
}

TEST_CASE("prefix successor bounds every extension") {
    std::vector<FieldKind> one{FieldKind::string};
    std::vector<FieldKind> two{FieldKind::string, FieldKind::integer};
    auto prefix = encode_key(Tuple{std::string("u1")}, one);
    auto next = prefix_successor(prefix);
    for (std::int64_t n : {INT64_MIN, std::int64_t{0}, INT64_MAX}) {
        auto k = encode_key(Tuple{std::string("u1"), n}, two);
        CHECK(prefix <= k);
        CHECK(k < next);
    }
    CHECK(encode_key(Tuple{std::string("u1\x01"), std::int64_t{0}}, two) >= next);
    CHECK(prefix_successor(CompositeKey(std::string(3, '\xff'))).empty());
}

}  // TEST_SUITE

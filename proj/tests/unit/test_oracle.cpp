#include <sstream>

#include <doctest.h>

#include "../harness.hpp"

using namespace scalestore;

TEST_SUITE("oracle") {

TEST_CASE("empty base tables give empty indices") {
    auto s = harness::Store::social();
    auto oracle = oracle_indices(s.snapshot(), s.templates, s.table);
    CHECK(oracle.size() == 3);
    for (const auto& [name, contents] : oracle) CHECK(contents.empty());
    CHECK(s.indices() == oracle);
}

TEST_CASE("toy birthday graph matches the hand enumeration") {
    auto s = harness::Store::social();
    auto& p = *s.pipeline;
    const std::vector<std::pair<std::string, std::string>> people{
        {"u1", "1990-03-14"}, {"u2", "1985-07-01"}, {"u3", "1992-01-20"},
        {"u4", "1988-11-05"}, {"u5", "1990-03-14"}, {"u6", "1979-12-31"}};
    const std::vector<std::pair<std::string, std::string>> edges{
        {"u1", "u2"}, {"u1", "u3"}, {"u1", "u5"}, {"u1", "u6"}, {"u2", "u1"}, {"u2", "u4"},
        {"u3", "u1"}, {"u4", "u2"}, {"u4", "u5"}, {"u4", "u6"}, {"u5", "u3"}};
    LogicalTime t = 0;
    for (const auto& [id, day] : people) p.write("profiles", Row{id, "n" + id, Date::parse(day)}, 1, ++t);
    for (const auto& [a, b] : edges) p.write("friendships", Row{a, b}, 1, ++t);
    p.drain_all(t);

    const auto& def = s.table.index("birthday_index");
    auto key_kinds = def.key_kinds();
    auto pk_kinds = s.schema.require_table("profiles").key_kinds();
    std::ostringstream got;
    for (const auto& e : s.engine.get_range("birthday_index", {}, {}, 1000)) {
        auto key = decode_key(e.key, key_kinds);
        auto target = decode_key(CompositeKey(e.record.value), pk_kinds);
        got << format_value(key[0]) << " " << format_value(key[1]) << " " << format_value(target[0]) << "\n";
    }
    CHECK(got.str() == read_file(harness::source("tests/golden/toy_birthday_index.txt")));
    CHECK(s.indices() == oracle_indices(s.snapshot(), s.templates, s.table));
}

TEST_CASE("random writes then drain converge to the oracle") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        CAPTURE(seed);
        auto s = harness::Store::social();
        std::mt19937_64 rng(seed);
        RandomWriter writer(s.schema, 12);
        LogicalTime t = 0;
        for (int i = 0; i < 500; ++i) {
            if (auto op = writer.propose(rng, s.lookup(), harness::pick(rng, harness::social_mix()))) {
                s.apply(*op, 1, ++t);
            }
            if (rng() % 7 == 0) s.pipeline->drain(t, 5);
        }
        s.pipeline->drain_all(t);
        CHECK(s.indices() == oracle_indices(s.snapshot(), s.templates, s.table));
        CHECK(s.pipeline->queue().order_violations() == 0);
    }
}

}  // TEST_SUITE

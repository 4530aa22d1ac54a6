#include <algorithm>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include <doctest.h>

#include "fixtures.hpp"
#include "scalestore/errors.hpp"
#include "scalestore/query.hpp"

using namespace scalestore;

namespace {

std::int64_t fanout_of(const Admission& a, const std::string& table) {
    const auto& rep = std::get<FanoutReport>(a);
    for (const auto& f : rep.fanouts) {
        if (f.table == table) return f.fanout;
    }
    return -2;
}

std::set<std::tuple<std::string, std::string, std::string>> rule_set(const CompiledTemplate& c) {
    std::set<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& r : c.rules) out.insert({r.index, r.table, r.field});
    return out;
}

// Toy directed friendship graph on six users; every user has at most four
// friends and at most four users list them.
const std::vector<std::pair<int, int>> toy_edges = {
    {1, 2}, {1, 3}, {1, 4}, {1, 5}, {2, 1}, {2, 3}, {3, 1}, {3, 6},
    {4, 2}, {4, 5}, {5, 6}, {6, 2}, {6, 3}, {6, 5}, {5, 2}};

}  // namespace

TEST_SUITE("query") {

TEST_CASE("friends-birthday template") {
    auto schema = fixtures::social_schema();
    auto t = parse_template(fixtures::birthday_text, schema);
    CHECK(t.name == "birthday_index");
    CHECK(t.base().name == "friendships");
    REQUIRE(t.joins.size() == 1);
    CHECK(t.tables[1].name == "profiles");
    CHECK(t.params == std::vector<std::string>{"user_id"});
    REQUIRE(t.order_by);
    CHECK(t.order_by->alias == 1);
    CHECK(t.field_name(*t.order_by) == "birthday");
}

TEST_CASE("primary-key lookup has no joins") {
    auto schema = fixtures::social_schema();
    auto t = parse_template("SELECT * FROM profiles WHERE id = <id>", schema);
    CHECK(t.joins.empty());
    CHECK(t.is_primary_key_lookup());
    CHECK(compile(t, schema).rules.empty());
}

TEST_CASE("unknown tables and fields") {
    auto schema = fixtures::social_schema();
    CHECK_THROWS_AS(parse_template("SELECT * FROM followers WHERE id = <id>", schema), UnknownTable);
    CHECK_THROWS_AS(parse_template("SELECT * FROM profiles WHERE nickname = <id>", schema), UnknownField);
    CHECK_THROWS_AS(parse_template("SELECT * FROM profiles WHERE", schema), SyntaxError);
}

TEST_CASE("birthday fan-out matches the toy graph") {
    auto schema = fixtures::social_schema();
    auto t = parse_template(fixtures::birthday_text, schema);
    auto a = check_admissible(t, schema, 100);
    REQUIRE(std::holds_alternative<FanoutReport>(a));
    CHECK(fanout_of(a, "profiles") == 4);
    CHECK(fanout_of(a, "friendships") == 4);

    // Entries (f1, p) per changed profile p: users listing p as a friend.
    std::map<int, int> per_profile;
    for (auto [f1, f2] : toy_edges) ++per_profile[f2];
    int worst_profile = 0;
    for (auto [u, n] : per_profile) worst_profile = std::max(worst_profile, n);
    CHECK(worst_profile == 4);
    // A friendship row joins exactly one profile.
    CHECK(worst_profile <= fanout_of(a, "profiles"));
}

TEST_CASE("friends-of-friends fan-out bounds the toy graph") {
    auto schema = fixtures::social_schema();
    auto t = parse_template(fixtures::fof_text, schema);
    auto a = check_admissible(t, schema, 16);
    REQUIRE(std::holds_alternative<FanoutReport>(a));
    CHECK(fanout_of(a, "friendships") == 16);
    CHECK(std::holds_alternative<Rejection>(check_admissible(t, schema, 15)));

    // (a, b) with a.f2 == b.f1; count pairs containing each edge.
    int worst = 0;
    for (auto e : toy_edges) {
        int n = 0;
        for (auto x : toy_edges) {
            for (auto y : toy_edges) {
                if (x.second == y.first && (x == e || y == e)) ++n;
            }
        }
        worst = std::max(worst, n);
    }
    CHECK(worst > 4);
    CHECK(worst <= 16);
}

TEST_CASE("unbounded relationship is rejected") {
    auto schema = parse_schema(read_file(fixtures::source("scenarios/twitter.schema")));
    auto templates = parse_templates(read_file(fixtures::source("scenarios/twitter.sql")), schema);
    bool rejected = false;
    for (const auto& t : templates) {
        auto a = check_admissible(t, schema);
        if (auto* r = std::get_if<Rejection>(&a)) {
            CHECK(r->relationship == "followed_by");
            CHECK(format_fanout_report(a).find("followed_by") != std::string::npos);
            rejected = true;
        }
    }
    CHECK(rejected);
}

TEST_CASE("maintenance rules") {
    auto schema = fixtures::social_schema();
    auto birthday = compile(parse_template(fixtures::birthday_text, schema), schema);
    CHECK(rule_set(birthday) == std::set<std::tuple<std::string, std::string, std::string>>{
                                    {"birthday_index", "profiles", "birthday"},
                                    {"birthday_index", "friendships", "*"}});
    auto fof = compile(parse_template(fixtures::fof_text, schema), schema);
    CHECK(rule_set(fof) == std::set<std::tuple<std::string, std::string, std::string>>{
                               {"friend_index", "friendships", "*"},
                               {"friends_of_friends_index", "friend_index", "*"}});
    for (const auto& r : birthday.rules) CHECK(r.op_budget > 0);
}

TEST_CASE("maintenance table matches the golden file and is deterministic") {
    auto schema = fixtures::social_schema();
    auto build = [&] {
        MaintenanceTable table;
        for (const auto& t : parse_templates(read_file(fixtures::source("scenarios/social.sql")), schema)) {
            table.add(compile(t, schema));
        }
        return table.dump();
    };
    std::string dump = build();
    CHECK(dump == read_file(fixtures::source("tests/golden/maintenance_table.txt")));
    CHECK(dump == build());
}

TEST_CASE("bind produces one contiguous range") {
    auto schema = fixtures::social_schema();
    auto t = parse_template(fixtures::birthday_text, schema);
    auto q = bind(t, {{"user_id", Value{std::string("u1")}}});
    CHECK(q.index == "birthday_index");
    CHECK(q.limit == default_read_limit);

    std::vector<FieldKind> kinds{FieldKind::string, FieldKind::date, FieldKind::string};
    auto key = [&](const char* user, int year) {
        Tuple t{std::string(user), Date::from_ymd(year, 1, 1), std::string("x")};
        return encode_key(t, kinds);
    };
    for (int year : {1900, 1980, 2100}) {
        auto k = key("u1", year);
        CHECK(q.low <= k);
        CHECK(k < q.high);
    }
    CHECK_FALSE(key("u0", 2100) >= q.low);
    CHECK_FALSE(key("u2", 1900) < q.high);
    CHECK_FALSE(key("u10", 1900) < q.high);

    CHECK_THROWS_AS(bind(t, {}), MissingParameter);
    CHECK_THROWS_AS(bind(t, {{"user_id", Value{std::int64_t{1}}}}), TypeMismatch);

    auto limited = parse_template(std::string(fixtures::birthday_text) + " LIMIT 10", schema);
    CHECK(bind(limited, {{"user_id", Value{std::string("u1")}}}).limit == 10);
}

}  // TEST_SUITE

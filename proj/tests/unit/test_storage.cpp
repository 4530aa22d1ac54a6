#include <map>
#include <random>
#include <set>

#include <doctest.h>

#include "scalestore/errors.hpp"
#include "scalestore/storage.hpp"

using namespace scalestore;

namespace {

CompositeKey k(const std::string& s) { return encode_key(Tuple{s}); }

VersionedRecord rec(std::string value, LogicalTime version, WriterId writer = 0) {
    return VersionedRecord{std::move(value), version, writer};
}

std::map<CompositeKey, std::string> contents(const StorageEngine& e, const std::string& index) {
    std::map<CompositeKey, std::string> out;
    for (const auto& en : e.get_range(index, {}, {}, e.max_limit())) out[en.key] = en.record.value;
    return out;
}

// Every partition boundary matches its neighbour's and the ends are open.
void check_coverage(const StorageEngine& e, const std::string& index) {
    auto parts = e.partitions(index);
    REQUIRE_FALSE(parts.empty());
    CHECK(parts.front().low.empty());
    CHECK(parts.back().high.empty());
    for (std::size_t i = 1; i < parts.size(); ++i) CHECK(parts[i - 1].high == parts[i].low);
}

}  // namespace

TEST_SUITE("storage") {

TEST_CASE("range reads are half open") {
    StorageEngine e;
    e.create_index("t", {0});
    CHECK(e.get_range("t", k("a"), k("z"), 10).empty());
    for (const char* s : {"k1", "k2", "k3"}) e.set("t", k(s), rec(s, 1));
    auto got = e.get_range("t", k("k1"), k("k3"), 10);
    REQUIRE(got.size() == 2);
    CHECK(got[0].key == k("k1"));
    CHECK(got[1].key == k("k2"));
    CHECK(e.get_range("t", k("k1"), k("k3"), 1).size() == 1);
}

TEST_CASE("last write wins keeps the largest version") {
    StorageEngine e;
    e.create_index("t", {0});
    auto lww = WritePolicy::last_write_wins();
    CHECK(e.put("t", k("x"), rec("a", 3), lww) == PutResult::ack);
    CHECK(e.put("t", k("x"), rec("b", 5), lww) == PutResult::ack);
    CHECK(e.put("t", k("x"), rec("c", 2), lww) == PutResult::ignored);
    CHECK(e.get("t", k("x"))->value == "b");
    CHECK(e.get("t", k("x"))->version == 5);
}

TEST_CASE("merge with set union") {
    StorageEngine e;
    e.create_index("t", {0});
    auto merge = WritePolicy::merge("set-union");
    e.put("t", k("x"), rec("1,2", 1), merge);
    e.put("t", k("x"), rec("2,3", 2), merge);
    auto v = split_set(e.get("t", k("x"))->value);
    CHECK(std::set<std::string>(v.begin(), v.end()) == std::set<std::string>{"1", "2", "3"});
}

TEST_CASE("serializable writes get increasing versions") {
    StorageEngine e;
    e.create_index("t", {0});
    auto ser = WritePolicy::serializable();
    e.put("t", k("x"), rec("first", 4), ser);
    auto v1 = e.get("t", k("x"))->version;
    e.put("t", k("x"), rec("second", 4), ser);
    auto v2 = e.get("t", k("x"))->version;
    CHECK(e.get("t", k("x"))->value == "second");
    CHECK(v2 > v1);
    CHECK(e.put("t", k("x"), rec("stale", 9), ser, MergeRegistry::builtin(), v1) == PutResult::conflict);
}

TEST_CASE("split and merge are inverse") {
    StorageEngine e;
    e.create_index("t", {0, 1});
    for (const char* s : {"a", "c", "m", "q", "y"}) e.set("t", k(s), rec(s, 1));
    auto before = contents(e, "t");
    auto id = e.partitions("t").front().id;
    auto split = e.split_partition("t", id, k("m"));
    auto parts = e.partitions("t");
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].high == k("m"));
    CHECK(parts[1].low == k("m"));
    CHECK(parts[0].entries == 2);
    CHECK(parts[1].entries == 3);
    CHECK(split.bytes_moved > 0);
    CHECK_THROWS_AS(e.split_partition("t", split.left, k("z")), InvalidSplitKey);

    e.merge_partitions("t", split.left, split.right);
    CHECK(e.partitions("t").size() == 1);
    CHECK(contents(e, "t") == before);
}

TEST_CASE("random workload against a shadow map") {
    std::mt19937_64 rng(77);
    StorageEngine e(64);
    e.create_index("t", {0, 1, 2});
    std::map<CompositeKey, std::string> shadow;
    auto key = [&] { return k("k" + std::to_string(rng() % 200)); };
    for (int step = 0; step < 5000; ++step) {
        switch (rng() % 6) {
        case 0:
        case 1: {
            auto kk = key();
            auto v = std::to_string(step);
            e.set("t", kk, rec(v, step));
            shadow[kk] = v;
            break;
        }
        case 2: {
            auto kk = key();
            e.erase("t", kk);
            shadow.erase(kk);
            break;
        }
        case 3: {
            auto parts = e.partitions("t");
            std::size_t i = rng() % parts.size();
            if ((rng() % 2 == 0 || parts.size() >= 40) && i + 1 < parts.size()) {
                e.merge_partitions("t", parts[i].id, parts[i + 1].id);
            } else {
                auto kk = key();
                bool inside = parts[i].low < kk && (parts[i].high.empty() || kk < parts[i].high);
                if (inside) {
                    e.split_partition("t", parts[i].id, kk);
                } else {
                    CHECK_THROWS_AS(e.split_partition("t", parts[i].id, kk), InvalidSplitKey);
                }
            }
            check_coverage(e, "t");
            CHECK(contents(e, "t") == shadow);
            break;
        }
        default: {
            auto a = key(), b = key();
            if (b < a) std::swap(a, b);
            std::int64_t limit = 1 + static_cast<std::int64_t>(rng() % 20);
            auto got = e.get_range("t", a, b, limit);
            std::vector<std::pair<CompositeKey, std::string>> want;
            for (auto it = shadow.lower_bound(a); it != shadow.end() && it->first < b; ++it) {
                if (static_cast<std::int64_t>(want.size()) == limit) break;
                want.emplace_back(it->first, it->second);
            }
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].key == want[i].first);
                CHECK(got[i].record.value == want[i].second);
            }
        }
        }
    }
}

}  // TEST_SUITE

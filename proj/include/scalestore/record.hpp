#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace scalestore {

using LogicalTime = std::int64_t;  // simulation milliseconds
using NodeId = std::int32_t;
using WriterId = std::int32_t;

struct VersionedRecord {
    std::string value;
    LogicalTime version = 0;
    WriterId writer_id = 0;

    // (version, writer) order; the writer id breaks ties between same-ms writes.
    std::strong_ordering stamp_order(const VersionedRecord& other) const {
        if (auto c = version <=> other.version; c != 0) return c;
        return writer_id <=> other.writer_id;
    }

    friend bool operator==(const VersionedRecord&, const VersionedRecord&) = default;
};

using MergeFn = std::function<VersionedRecord(const VersionedRecord& stored,
                                              const VersionedRecord& incoming)>;

// Named merge functions so specs stay serializable. Ships with
// last-write-wins, set-union and numeric-max.
class MergeRegistry {
public:
    MergeRegistry();

    static const MergeRegistry& builtin();

    void add(std::string name, MergeFn fn);
    bool contains(const std::string& name) const;
    const MergeFn& get(const std::string& name) const;  // throws UnknownMergeFunction
    std::vector<std::string> names() const;

private:
    std::map<std::string, MergeFn> fns_;
};

// Set values are comma-separated element lists.
std::vector<std::string> split_set(const std::string& value);
std::string join_set(const std::vector<std::string>& elements);

}  // namespace scalestore

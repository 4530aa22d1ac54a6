#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "scalestore/consistency.hpp"
#include "scalestore/key_encoding.hpp"
#include "scalestore/record.hpp"

namespace scalestore {

inline constexpr LogicalTime no_time = std::numeric_limits<LogicalTime>::min();

struct Entry {
    CompositeKey key;
    VersionedRecord record;
};

// A write the replica has not received yet because it cannot reach the
// leader. Replayed in order once the link heals.
struct PendingOp {
    CompositeKey key;
    std::optional<VersionedRecord> record;  // nullopt = erase
    LogicalTime deadline = 0;
};

struct Replica {
    NodeId node = 0;
    std::map<CompositeKey, VersionedRecord> data;
    std::deque<PendingOp> backlog;
    LogicalTime watermark = no_time;
    LogicalTime applied_max = no_time;  // largest deadline of any op applied here
};

struct Partition {
    std::uint64_t id = 0;
    CompositeKey low;   // inclusive
    CompositeKey high;  // exclusive; empty = end of key space
    std::vector<Replica> replicas;  // replicas.front() is the leader
    mutable std::mutex mu;

    bool contains(const CompositeKey& key) const;
    bool intersects(const CompositeKey& lo, const CompositeKey& hi) const;
    std::int64_t bytes() const;  // leader's key + value bytes
    const Replica* replica_on(NodeId node) const;
    std::vector<NodeId> nodes() const;
};

enum class PutResult { ack, conflict, ignored };

struct SplitResult {
    std::uint64_t left = 0;
    std::uint64_t right = 0;
    std::int64_t bytes_moved = 0;
};

struct MergeResult {
    std::uint64_t merged = 0;
    std::int64_t bytes_moved = 0;
};

// Read-only view of one partition's placement and progress.
struct PartitionInfo {
    std::uint64_t id = 0;
    CompositeKey low;
    CompositeKey high;
    std::vector<NodeId> nodes;
    std::vector<LogicalTime> watermarks;
    std::vector<LogicalTime> applied_max;
    std::vector<std::size_t> backlog;
    std::vector<LogicalTime> backlog_min;  // smallest queued deadline, or no_time
    std::size_t entries = 0;
    std::int64_t bytes = 0;
};

// Ordered, range-partitioned, replicated in-memory key-value store. Each
// named index (base tables included) is a sorted key space cut into
// contiguous partitions [low, high) that together cover every key.
class StorageEngine {
public:
    explicit StorageEngine(int max_partitions_per_read = 3, std::int64_t max_limit = default_max_limit);

    static constexpr std::int64_t default_max_limit = 1000;

    int max_partitions_per_read() const { return max_parts_per_read_; }
    std::int64_t max_limit() const { return max_limit_; }

    // Creates an index with one partition per gap between `split_keys`
    // (sorted, distinct), each replicated on `replicas`.
    void create_index(const std::string& name, const std::vector<NodeId>& replicas,
                      const std::vector<CompositeKey>& split_keys = {});
    bool has_index(const std::string& name) const;
    std::vector<std::string> index_names() const;

    // Applied at the partition leader, then copied to every replica that can
    // reach it; unreachable replicas queue the result in their backlog.
    PutResult put(const std::string& index, const CompositeKey& key, const VersionedRecord& record,
                  const WritePolicy& policy, const MergeRegistry& merges = MergeRegistry::builtin(),
                  std::optional<LogicalTime> expected_version = std::nullopt, LogicalTime deadline = 0);
    void erase(const std::string& index, const CompositeKey& key, LogicalTime deadline = 0);
    // Unconditional overwrite, used by index maintenance (which is already
    // ordered by deadline).
    void set(const std::string& index, const CompositeKey& key, const VersionedRecord& record,
             LogicalTime deadline = 0);

    // Entries of [low, high) in key order, at most `limit`. With `replica`
    // set, every intersecting partition must be served by that node;
    // otherwise each partition is read at its leader.
    std::vector<Entry> get_range(const std::string& index, const CompositeKey& low, const CompositeKey& high,
                                 std::int64_t limit, std::optional<NodeId> replica = std::nullopt) const;
    std::optional<VersionedRecord> get(const std::string& index, const CompositeKey& key) const;

    std::vector<PartitionInfo> partitions(const std::string& index) const;
    // Intersecting partitions only; `bytes` is left 0.
    std::vector<PartitionInfo> partitions_for(const std::string& index, const CompositeKey& low,
                                              const CompositeKey& high) const;

    SplitResult split_partition(const std::string& index, std::uint64_t partition, const CompositeKey& split_key);
    MergeResult merge_partitions(const std::string& index, std::uint64_t left, std::uint64_t right);
    // Replaces the replica set. New replicas are copied from the leader;
    // returns bytes copied.
    std::int64_t assign_replicas(const std::string& index, std::uint64_t partition,
                                 const std::vector<NodeId>& nodes);

    void set_node_up(NodeId node, bool up);
    bool node_up(NodeId node) const;
    // Link predicate between nodes; default: everything connected.
    void set_connectivity(std::function<bool(NodeId, NodeId)> connected);
    bool connected(NodeId a, NodeId b) const;
    // Replays backlogs of replicas that can reach their leader again.
    std::size_t replay_backlogs();

    void advance_watermark(const std::string& index, std::uint64_t partition, NodeId node, LogicalTime w);
    // Records that an op with `deadline` reached every caught-up replica of
    // every partition of `index`.
    void note_applied(const std::string& index, LogicalTime deadline);

    // (index, hex key, version, value) lines sorted by key.
    std::string dump(const std::string& index) const;
    std::size_t size(const std::string& index) const;

private:
    struct IndexStore {
        std::vector<std::unique_ptr<Partition>> parts;  // sorted by low
        mutable std::shared_mutex structure;
    };

    IndexStore& store(const std::string& index);
    const IndexStore& store(const std::string& index) const;
    static std::size_t locate(const IndexStore& s, const CompositeKey& key);
    void apply_to_replicas(Partition& p, const CompositeKey& key, const std::optional<VersionedRecord>& rec,
                           LogicalTime deadline);

    int max_parts_per_read_;
    std::int64_t max_limit_;
    std::uint64_t next_partition_id_ = 1;
    std::map<std::string, std::unique_ptr<IndexStore>> indices_;
    std::set<NodeId> down_;
    std::function<bool(NodeId, NodeId)> connected_;
    mutable std::mutex meta_;
};

}  // namespace scalestore

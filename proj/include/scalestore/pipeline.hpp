#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "scalestore/arbitration.hpp"
#include "scalestore/consistency.hpp"
#include "scalestore/maintenance.hpp"
#include "scalestore/query.hpp"
#include "scalestore/storage.hpp"

namespace scalestore {

struct UpdateTask {
    std::uint64_t seq = 0;
    std::size_t rule = 0;  // position in MaintenanceTable::rules()
    RowChange change;
    LogicalTime enqueue_time = 0;
    LogicalTime deadline = 0;
};

// Tasks for every rule whose (Table, Field) matches the change.
std::vector<UpdateTask> on_base_write(const RowChange& change, const MaintenanceTable& table,
                                      const TableDef& changed_def, LogicalTime now, LogicalTime deadline);

// Min-heap on (deadline, enqueue sequence).
class DeadlineQueue {
public:
    void push(UpdateTask task);
    UpdateTask pop();
    const UpdateTask& top() const { return heap_.top(); }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }

    std::optional<LogicalTime> min_deadline() const;
    // Smallest deadline among queued tasks that write `index`.
    std::optional<LogicalTime> min_deadline_for(const std::string& index) const;

    // Pops whose deadline was below the previously popped one.
    std::uint64_t order_violations() const { return violations_; }

    void set_rule_index_names(std::vector<std::string> names) { rule_index_ = std::move(names); }

private:
    struct Later {
        bool operator()(const UpdateTask& a, const UpdateTask& b) const {
            return a.deadline != b.deadline ? a.deadline > b.deadline : a.seq > b.seq;
        }
    };
    std::priority_queue<UpdateTask, std::vector<UpdateTask>, Later> heap_;
    std::map<std::string, std::multiset<LogicalTime>> pending_;
    std::vector<std::string> rule_index_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t violations_ = 0;
    std::optional<LogicalTime> last_popped_;
};

// Per-session version vectors. Write versions are kept per index, read
// versions per (index, partition).
struct SessionToken {
    struct ReadMark {
        LogicalTime version = no_time;
        NodeId node = -1;
    };
    std::map<std::string, LogicalTime> write_versions;
    std::map<std::pair<std::string, std::uint64_t>, ReadMark> read_versions;

    LogicalTime write_version(const std::string& index) const;
    void note_write(const std::string& index, LogicalTime version);
};

struct ReadOutcome {
    enum class Kind { data, stalled, failed };
    Kind kind = Kind::data;
    std::vector<Entry> entries;
    std::int64_t max_staleness_ms = 0;
    bool stale = false;  // served past the staleness bound
    LogicalTime until = 0;
    Axis reason = Axis::availability;
    std::vector<NodeId> replicas;
};

struct LagStatus {
    bool at_risk = false;
    std::int64_t headroom_ms = 0;  // min deadline - now; meaningless when queue empty
    bool empty = true;
};

struct DrainStats {
    std::size_t tasks_applied = 0;
    std::int64_t ops = 0;
    std::size_t deadline_misses = 0;
    std::int64_t min_headroom_ms = 0;
};

struct WriteResult {
    PutResult status = PutResult::ack;
    std::vector<RowChange> changes;
    std::size_t tasks = 0;
};

// Turns base writes into deadline-stamped maintenance tasks, drains them in
// deadline order and serves reads under the consistency spec.
class UpdatePipeline {
public:
    UpdatePipeline(const Schema& schema, const MaintenanceTable& table, const ConsistencySpec& spec,
                   StorageEngine& engine, double headroom_fraction = 0.2);

    // Creates storage for every base table and index on `replicas`.
    void create_storage(const std::vector<NodeId>& replicas,
                        const std::map<std::string, std::vector<CompositeKey>>& split_keys = {});

    WriteResult write(const std::string& table, const Row& row, WriterId writer, LogicalTime now,
                      SessionToken* session = nullptr);
    WriteResult erase(const std::string& table, const Tuple& pk, WriterId writer, LogicalTime now,
                      SessionToken* session = nullptr);

    // Pops tasks in deadline order until `op_capacity` primitive ops have
    // been spent (at least one task when the queue is non-empty and
    // capacity > 0). Cascaded tasks join the queue with their parent's
    // deadline.
    DrainStats drain(LogicalTime now, std::int64_t op_capacity);
    DrainStats drain_all(LogicalTime now);

    LagStatus lag_alarm(LogicalTime now) const;

    // Recomputes every replica watermark after a drain.
    void refresh_watermarks(LogicalTime now);
    LogicalTime watermark(const std::string& index, const PartitionInfo& p, std::size_t replica,
                          LogicalTime now) const;

    // `started` is when the read was first issued (stalled reads retry).
    ReadOutcome read(const RangeQuery& query, SessionToken& session, LogicalTime now, LogicalTime started);
    ReadOutcome read(const RangeQuery& query, SessionToken& session, LogicalTime now) {
        return read(query, session, now, now);
    }

    // Which nodes clients can currently reach (default: all up nodes).
    void set_client_reachability(std::function<bool(NodeId)> reachable);

    const DeadlineQueue& queue() const { return queue_; }
    Maintainer& maintainer() { return maintainer_; }
    const ConsistencySpec& spec() const { return spec_; }
    const MaintenanceTable& table() const { return table_; }
    StorageEngine& engine() { return engine_; }
    std::uint64_t arbitration_events() const { return arbitration_events_; }
    std::int64_t max_task_ops() const { return max_task_ops_; }

private:
    WriteResult commit(const std::string& table, const CompositeKey& pk, std::optional<Row> row, LogicalTime now,
                       PutResult status, SessionToken* session);
    void enqueue(const RowChange& change, LogicalTime now, LogicalTime deadline);
    bool client_reaches(NodeId node) const;

    const Schema& schema_;
    const MaintenanceTable& table_;
    ConsistencySpec spec_;
    StorageEngine& engine_;
    Maintainer maintainer_;
    DeadlineQueue queue_;
    double headroom_fraction_;
    std::map<std::string, std::vector<std::string>> upstream_;    // index -> indices feeding it (incl. itself)
    std::map<std::string, std::vector<std::string>> downstream_;  // base table -> indices it feeds
    std::function<bool(NodeId)> client_reachable_;
    std::uint64_t arbitration_events_ = 0;
    std::int64_t max_task_ops_ = 0;
};

}  // namespace scalestore

#include "scalestore/storage.hpp"

#include <algorithm>
#include <sstream>

#include "scalestore/errors.hpp"

namespace scalestore {

bool Partition::contains(const CompositeKey& key) const {
    return key >= low && (high.empty() || key < high);
}

bool Partition::intersects(const CompositeKey& lo, const CompositeKey& hi) const {
    bool below_high = high.empty() || lo < high;
    bool above_low = hi.empty() || hi > low;
    return below_high && above_low;
}

std::int64_t Partition::bytes() const {
    std::int64_t total = 0;
    if (replicas.empty()) return 0;
    for (const auto& [k, rec] : replicas.front().data) {
        total += static_cast<std::int64_t>(k.size() + rec.value.size() + sizeof(LogicalTime));
    }
    return total;
}

const Replica* Partition::replica_on(NodeId node) const {
    for (const auto& r : replicas) {
        if (r.node == node) return &r;
    }
    return nullptr;
}

std::vector<NodeId> Partition::nodes() const {
    std::vector<NodeId> out;
    for (const auto& r : replicas) out.push_back(r.node);
    return out;
}

namespace {

PartitionInfo info_of(const Partition& p, bool with_bytes = true) {
    PartitionInfo out;
    out.id = p.id;
    out.low = p.low;
    out.high = p.high;
    for (const auto& r : p.replicas) {
        out.nodes.push_back(r.node);
        out.watermarks.push_back(r.watermark);
        out.applied_max.push_back(r.applied_max);
        out.backlog.push_back(r.backlog.size());
        LogicalTime m = no_time;
        for (const auto& op : r.backlog) m = m == no_time ? op.deadline : std::min(m, op.deadline);
        out.backlog_min.push_back(m);
    }
    out.entries = p.replicas.empty() ? 0 : p.replicas.front().data.size();
    if (with_bytes) out.bytes = p.bytes();
    return out;
}

void apply_op(Replica& r, const CompositeKey& key, const std::optional<VersionedRecord>& rec, LogicalTime deadline) {
    if (rec) {
        r.data[key] = *rec;
    } else {
        r.data.erase(key);
    }
    r.applied_max = std::max(r.applied_max, deadline);
}

}  // namespace

StorageEngine::StorageEngine(int max_partitions_per_read, std::int64_t max_limit)
    : max_parts_per_read_(max_partitions_per_read), max_limit_(max_limit) {}

StorageEngine::IndexStore& StorageEngine::store(const std::string& index) {
    std::lock_guard lock(meta_);
    auto it = indices_.find(index);
    if (it == indices_.end()) throw UnknownTable(index);
    return *it->second;
}

const StorageEngine::IndexStore& StorageEngine::store(const std::string& index) const {
    std::lock_guard lock(meta_);
    auto it = indices_.find(index);
    if (it == indices_.end()) throw UnknownTable(index);
    return *it->second;
}

std::size_t StorageEngine::locate(const IndexStore& s, const CompositeKey& key) {
    auto it = std::upper_bound(s.parts.begin(), s.parts.end(), key,
                               [](const CompositeKey& k, const auto& p) { return k < p->low; });
    return static_cast<std::size_t>(it - s.parts.begin()) - 1;
}

void StorageEngine::create_index(const std::string& name, const std::vector<NodeId>& replicas,
                                 const std::vector<CompositeKey>& split_keys) {
    if (replicas.empty()) throw ValidationError("index '" + name + "' needs at least one replica");
    for (std::size_t i = 0; i < split_keys.size(); ++i) {
        if (split_keys[i].empty() || (i > 0 && !(split_keys[i - 1] < split_keys[i]))) {
            throw InvalidSplitKey("split keys for '" + name + "' must be non-empty, sorted and distinct");
        }
    }
    auto s = std::make_unique<IndexStore>();
    CompositeKey low;
    for (std::size_t i = 0; i <= split_keys.size(); ++i) {
        auto p = std::make_unique<Partition>();
        std::lock_guard lock(meta_);
        p->id = next_partition_id_++;
        p->low = low;
        p->high = i < split_keys.size() ? split_keys[i] : CompositeKey{};
        for (auto n : replicas) p->replicas.push_back(Replica{n, {}, {}, no_time, no_time});
        low = p->high;
        s->parts.push_back(std::move(p));
    }
    std::lock_guard lock(meta_);
    if (indices_.contains(name)) throw ValidationError("index '" + name + "' already exists");
    indices_.emplace(name, std::move(s));
}

bool StorageEngine::has_index(const std::string& name) const {
    std::lock_guard lock(meta_);
    return indices_.contains(name);
}

std::vector<std::string> StorageEngine::index_names() const {
    std::lock_guard lock(meta_);
    std::vector<std::string> out;
    for (const auto& [name, s] : indices_) out.push_back(name);
    return out;
}

void StorageEngine::apply_to_replicas(Partition& p, const CompositeKey& key,
                                      const std::optional<VersionedRecord>& rec, LogicalTime deadline) {
    NodeId leader = p.replicas.front().node;
    for (std::size_t i = 0; i < p.replicas.size(); ++i) {
        Replica& r = p.replicas[i];
        bool reachable = i == 0 || (r.backlog.empty() && connected(leader, r.node));
        if (reachable) {
            apply_op(r, key, rec, deadline);
        } else {
            r.backlog.push_back(PendingOp{key, rec, deadline});
        }
    }
}

PutResult StorageEngine::put(const std::string& index, const CompositeKey& key, const VersionedRecord& record,
                             const WritePolicy& policy, const MergeRegistry& merges,
                             std::optional<LogicalTime> expected_version, LogicalTime deadline) {
    auto& s = store(index);
    std::shared_lock structure(s.structure);
    Partition& p = *s.parts[locate(s, key)];
    std::lock_guard lock(p.mu);
    auto& data = p.replicas.front().data;
    auto it = data.find(key);
    const VersionedRecord* stored = it == data.end() ? nullptr : &it->second;

    VersionedRecord result = record;
    switch (policy.kind) {
    case WritePolicy::Kind::serializable: {
        LogicalTime current = stored ? stored->version : 0;
        if (expected_version && *expected_version != current) return PutResult::conflict;
        if (stored) result.version = std::max(record.version, stored->version + 1);
        break;
    }
    case WritePolicy::Kind::last_write_wins:
        if (stored && record.stamp_order(*stored) <= 0) return PutResult::ignored;
        break;
    case WritePolicy::Kind::merge:
        if (stored) result = merges.get(policy.merge_fn)(*stored, record);
        break;
    }
    apply_to_replicas(p, key, result, deadline);
    return PutResult::ack;
}

void StorageEngine::set(const std::string& index, const CompositeKey& key, const VersionedRecord& record,
                        LogicalTime deadline) {
    auto& s = store(index);
    std::shared_lock structure(s.structure);
    Partition& p = *s.parts[locate(s, key)];
    std::lock_guard lock(p.mu);
    apply_to_replicas(p, key, record, deadline);
}

void StorageEngine::erase(const std::string& index, const CompositeKey& key, LogicalTime deadline) {
    auto& s = store(index);
    std::shared_lock structure(s.structure);
    Partition& p = *s.parts[locate(s, key)];
    std::lock_guard lock(p.mu);
    if (!p.replicas.front().data.contains(key)) {
        p.replicas.front().applied_max = std::max(p.replicas.front().applied_max, deadline);
        return;
    }
    apply_to_replicas(p, key, std::nullopt, deadline);
}

std::vector<Entry> StorageEngine::get_range(const std::string& index, const CompositeKey& low,
                                            const CompositeKey& high, std::int64_t limit,
                                            std::optional<NodeId> replica) const {
    if (limit <= 0 || limit > max_limit_) {
        throw ValidationError("read limit must be in [1, " + std::to_string(max_limit_) + "]");
    }
    const auto& s = store(index);
    std::shared_lock structure(s.structure);
    std::vector<const Partition*> hit;
    for (std::size_t i = locate(s, low); i < s.parts.size() && s.parts[i]->intersects(low, high); ++i) {
        hit.push_back(s.parts[i].get());
    }
    if (!high.empty() && !(low < high)) return {};
    if (static_cast<int>(hit.size()) > max_parts_per_read_) {
        throw RangeTooWide("range on '" + index + "' spans " + std::to_string(hit.size()) +
                           " partitions (max " + std::to_string(max_parts_per_read_) + ")");
    }
    std::vector<Entry> out;
    for (const Partition* p : hit) {
        std::lock_guard lock(p->mu);
        const Replica* r = replica ? p->replica_on(*replica) : &p->replicas.front();
        if (!r) {
            throw ReplicaUnavailable("node " + std::to_string(*replica) + " holds no replica of partition " +
                                     std::to_string(p->id) + " of '" + index + "'");
        }
        if (!node_up(r->node)) {
            throw ReplicaUnavailable("node " + std::to_string(r->node) + " is down");
        }
        auto it = r->data.lower_bound(low);
        for (; it != r->data.end() && static_cast<std::int64_t>(out.size()) < limit; ++it) {
            if (!high.empty() && !(it->first < high)) break;
            out.push_back({it->first, it->second});
        }
        if (static_cast<std::int64_t>(out.size()) >= limit) break;
    }
    return out;
}

std::optional<VersionedRecord> StorageEngine::get(const std::string& index, const CompositeKey& key) const {
    const auto& s = store(index);
    std::shared_lock structure(s.structure);
    const Partition& p = *s.parts[locate(s, key)];
    std::lock_guard lock(p.mu);
    const auto& data = p.replicas.front().data;
    auto it = data.find(key);
    if (it == data.end()) return std::nullopt;
    return it->second;
}

std::vector<PartitionInfo> StorageEngine::partitions(const std::string& index) const {
    const auto& s = store(index);
    std::shared_lock structure(s.structure);
    std::vector<PartitionInfo> out;
    for (const auto& p : s.parts) {
        std::lock_guard lock(p->mu);
        out.push_back(info_of(*p));
    }
    return out;
}

std::vector<PartitionInfo> StorageEngine::partitions_for(const std::string& index, const CompositeKey& low,
                                                         const CompositeKey& high) const {
    const auto& s = store(index);
    std::shared_lock structure(s.structure);
    std::vector<PartitionInfo> out;
    for (std::size_t i = locate(s, low); i < s.parts.size() && s.parts[i]->intersects(low, high); ++i) {
        std::lock_guard lock(s.parts[i]->mu);
        out.push_back(info_of(*s.parts[i], false));
    }
    return out;
}

SplitResult StorageEngine::split_partition(const std::string& index, std::uint64_t partition,
                                           const CompositeKey& split_key) {
    auto& s = store(index);
    std::unique_lock structure(s.structure);
    auto it = std::find_if(s.parts.begin(), s.parts.end(), [&](const auto& p) { return p->id == partition; });
    if (it == s.parts.end()) throw ValidationError("no partition " + std::to_string(partition));
    Partition& left = **it;
    if (!(left.low < split_key) || !(left.high.empty() || split_key < left.high)) {
        throw InvalidSplitKey("split key " + split_key.hex() + " is not strictly inside partition " +
                              std::to_string(partition));
    }
    auto right = std::make_unique<Partition>();
    {
        std::lock_guard lock(meta_);
        right->id = next_partition_id_++;
    }
    right->low = split_key;
    right->high = left.high;
    left.high = split_key;
    std::int64_t moved = 0;
    for (auto& r : left.replicas) {
        Replica copy{r.node, {}, {}, r.watermark, r.applied_max};
        auto first = r.data.lower_bound(split_key);
        for (auto e = first; e != r.data.end(); ++e) {
            if (&r == &left.replicas.front()) {
                moved += static_cast<std::int64_t>(e->first.size() + e->second.value.size() + sizeof(LogicalTime));
            }
            copy.data.insert(*e);
        }
        r.data.erase(first, r.data.end());
        for (auto op = r.backlog.begin(); op != r.backlog.end();) {
            if (!(op->key < split_key)) {
                copy.backlog.push_back(*op);
                op = r.backlog.erase(op);
            } else {
                ++op;
            }
        }
        right->replicas.push_back(std::move(copy));
    }
    SplitResult result{left.id, right->id, moved};
    s.parts.insert(it + 1, std::move(right));
    return result;
}

MergeResult StorageEngine::merge_partitions(const std::string& index, std::uint64_t left, std::uint64_t right) {
    auto& s = store(index);
    std::unique_lock structure(s.structure);
    auto li = std::find_if(s.parts.begin(), s.parts.end(), [&](const auto& p) { return p->id == left; });
    if (li == s.parts.end() || li + 1 == s.parts.end() || (*(li + 1))->id != right) {
        throw NonAdjacent("partitions " + std::to_string(left) + " and " + std::to_string(right) +
                          " are not adjacent");
    }
    Partition& l = **li;
    Partition& r = **(li + 1);
    std::int64_t moved = r.bytes();
    // The merged partition keeps the left replica set; right-side data is
    // copied onto it.
    for (std::size_t i = 0; i < l.replicas.size(); ++i) {
        Replica& dst = l.replicas[i];
        const Replica& src = i < r.replicas.size() ? r.replicas[i] : r.replicas.front();
        dst.data.insert(src.data.begin(), src.data.end());
        dst.backlog.insert(dst.backlog.end(), src.backlog.begin(), src.backlog.end());
        dst.watermark = std::min(dst.watermark, src.watermark);
        dst.applied_max = std::max(dst.applied_max, src.applied_max);
    }
    l.high = r.high;
    s.parts.erase(li + 1);
    return {left, moved};
}

std::int64_t StorageEngine::assign_replicas(const std::string& index, std::uint64_t partition,
                                            const std::vector<NodeId>& nodes) {
    if (nodes.empty()) throw ValidationError("replica set must not be empty");
    auto& s = store(index);
    std::shared_lock structure(s.structure);
    auto it = std::find_if(s.parts.begin(), s.parts.end(), [&](const auto& p) { return p->id == partition; });
    if (it == s.parts.end()) throw ValidationError("no partition " + std::to_string(partition));
    Partition& p = **it;
    std::lock_guard lock(p.mu);
    std::int64_t bytes = p.bytes();
    std::int64_t moved = 0;
    const Replica src = p.replicas.front();  // the most caught-up copy
    std::vector<Replica> next;
    for (auto n : nodes) {
        auto old = std::find_if(p.replicas.begin(), p.replicas.end(), [&](const Replica& r) { return r.node == n; });
        if (old != p.replicas.end()) {
            next.push_back(std::move(*old));
            old->node = -1;
        } else {
            next.push_back(Replica{n, src.data, src.backlog, src.watermark, src.applied_max});
            moved += bytes;
        }
    }
    p.replicas = std::move(next);
    return moved;
}

void StorageEngine::set_node_up(NodeId node, bool up) {
    std::lock_guard lock(meta_);
    if (up) {
        down_.erase(node);
    } else {
        down_.insert(node);
    }
}

bool StorageEngine::node_up(NodeId node) const {
    std::lock_guard lock(meta_);
    return !down_.contains(node);
}

void StorageEngine::set_connectivity(std::function<bool(NodeId, NodeId)> connected) {
    std::lock_guard lock(meta_);
    connected_ = std::move(connected);
}

bool StorageEngine::connected(NodeId a, NodeId b) const {
    std::lock_guard lock(meta_);
    return !connected_ || connected_(a, b);
}

std::size_t StorageEngine::replay_backlogs() {
    std::size_t replayed = 0;
    for (const auto& name : index_names()) {
        auto& s = store(name);
        std::shared_lock structure(s.structure);
        for (auto& p : s.parts) {
            std::lock_guard lock(p->mu);
            NodeId leader = p->replicas.front().node;
            for (std::size_t i = 1; i < p->replicas.size(); ++i) {
                Replica& r = p->replicas[i];
                if (r.backlog.empty() || !connected(leader, r.node)) continue;
                for (const auto& op : r.backlog) apply_op(r, op.key, op.record, op.deadline);
                replayed += r.backlog.size();
                r.backlog.clear();
            }
        }
    }
    return replayed;
}

void StorageEngine::advance_watermark(const std::string& index, std::uint64_t partition, NodeId node,
                                      LogicalTime w) {
    auto& s = store(index);
    std::shared_lock structure(s.structure);
    for (auto& p : s.parts) {
        if (p->id != partition) continue;
        std::lock_guard lock(p->mu);
        for (auto& r : p->replicas) {
            if (r.node == node) r.watermark = std::max(r.watermark, w);
        }
    }
}

void StorageEngine::note_applied(const std::string& index, LogicalTime deadline) {
    auto& s = store(index);
    std::shared_lock structure(s.structure);
    for (auto& p : s.parts) {
        std::lock_guard lock(p->mu);
        for (auto& r : p->replicas) {
            if (r.backlog.empty()) r.applied_max = std::max(r.applied_max, deadline);
        }
    }
}

std::string StorageEngine::dump(const std::string& index) const {
    const auto& s = store(index);
    std::shared_lock structure(s.structure);
    std::ostringstream out;
    for (const auto& p : s.parts) {
        std::lock_guard lock(p->mu);
        for (const auto& [k, rec] : p->replicas.front().data) {
            out << index << ' ' << k.hex() << ' ' << rec.version << ' ' << CompositeKey(rec.value).hex() << '\n';
        }
    }
    return out.str();
}

std::size_t StorageEngine::size(const std::string& index) const {
    const auto& s = store(index);
    std::shared_lock structure(s.structure);
    std::size_t n = 0;
    for (const auto& p : s.parts) {
        std::lock_guard lock(p->mu);
        n += p->replicas.front().data.size();
    }
    return n;
}

}  // namespace scalestore

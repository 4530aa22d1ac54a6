#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "scalestore/relation.hpp"
#include "scalestore/schema.hpp"

namespace scalestore {

// Load multiplier that rises geometrically from 1 to `multiplier` over the
// ramp, holds, then falls geometrically back to 1.
struct SpikeEvent {
    double start_h = 0;
    double ramp_h = 72;
    double hold_h = 0;
    double decay_h = 0;
    double multiplier = 1;

    double end_h() const { return start_h + ramp_h + hold_h + decay_h; }
    double factor(double t_h) const;
};

struct ReadMix {
    std::string template_name;
    double weight = 1;
};

struct WriteMix {
    enum class Kind { insert, update, erase };
    std::string table;
    Kind kind = Kind::insert;
    std::string field;  // update: the field to change; empty = any non-key field
    double weight = 1;
};

struct WorkloadSpec {
    int base_users = 1;
    double diurnal_amplitude = 0;  // fraction of base
    double diurnal_period_h = 24;
    double ops_per_user_per_s = 0.005;
    double read_fraction = 0.8;
    double requests_per_op = 50;  // client requests one simulated op stands for
    std::vector<ReadMix> reads;
    std::vector<WriteMix> writes;
    std::vector<SpikeEvent> spikes;

    double active_users(double t_h) const;
    int max_users(double duration_h, double step_h) const;
};

WorkloadSpec workload_from_json(const nlohmann::json& doc);

using RelationLookup = std::function<const Relation&(const std::string&)>;

struct WriteOp {
    WriteMix::Kind kind = WriteMix::Kind::insert;
    std::string table;
    Row row;   // insert / update
    Tuple pk;  // erase
};

// Random base writes that keep every relationship within its cardinality
// bound. String values that take part in a key or a relationship come from
// a shared id pool ("u<n>") so joins actually connect; other strings are
// short tokens.
class RandomWriter {
public:
    RandomWriter(const Schema& schema, int id_pool);

    void set_id_pool(int id_pool) { id_pool_ = id_pool; }
    std::string id(int n) const;

    // A write of the given kind, or nullopt if none fits the bounds (or, for
    // update/erase, no row exists). `owner` pins the table's first key
    // field.
    std::optional<WriteOp> propose(std::mt19937_64& rng, const RelationLookup& state, const WriteMix& mix,
                                   std::optional<int> owner = std::nullopt) const;

    // Would replacing `old_row` by `new_row` (either may be absent) keep
    // every bound?
    bool within_bounds(const RelationLookup& state, const std::string& table, const std::optional<Row>& old_row,
                       const std::optional<Row>& new_row) const;

private:
    Value random_value(std::mt19937_64& rng, const TableDef& t, std::size_t field) const;
    bool pooled(const TableDef& t, std::size_t field) const;

    const Schema& schema_;
    int id_pool_;
};

}  // namespace scalestore

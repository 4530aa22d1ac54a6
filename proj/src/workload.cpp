#include "scalestore/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "scalestore/errors.hpp"

namespace scalestore {

double SpikeEvent::factor(double t_h) const {
    if (t_h < start_h || multiplier <= 1) return 1;
    double t = t_h - start_h;
    if (t < ramp_h) return std::pow(multiplier, t / ramp_h);
    t -= ramp_h;
    if (t < hold_h) return multiplier;
    t -= hold_h;
    if (t < decay_h) return std::pow(multiplier, 1 - t / decay_h);
    return 1;
}

double WorkloadSpec::active_users(double t_h) const {
    double diurnal = 1 + diurnal_amplitude * std::sin(2 * std::numbers::pi * t_h / diurnal_period_h);
    double users = base_users * diurnal;
    for (const auto& s : spikes) users *= s.factor(t_h);
    return std::max(users, 0.0);
}

int WorkloadSpec::max_users(double duration_h, double step_h) const {
    double best = 0;
    for (double t = 0; t <= duration_h; t += step_h) best = std::max(best, active_users(t));
    return static_cast<int>(std::ceil(best));
}

namespace {

WriteMix::Kind parse_kind(const std::string& s) {
    if (s == "insert") return WriteMix::Kind::insert;
    if (s == "update") return WriteMix::Kind::update;
    if (s == "erase" || s == "delete") return WriteMix::Kind::erase;
    throw ScenarioError("unknown write kind '" + s + "'");
}

}  // namespace

WorkloadSpec workload_from_json(const nlohmann::json& doc) {
    static const std::set<std::string> known{"base_users",       "diurnal_amplitude", "diurnal_period_h",
                                             "ops_per_user_per_s", "read_fraction",   "requests_per_op",
                                             "reads",            "writes",            "spikes"};
    WorkloadSpec w;
    try {
        for (const auto& [k, v] : doc.items()) {
            if (!known.contains(k)) throw ScenarioError("unknown workload key '" + k + "'");
        }
        w.base_users = doc.value("base_users", w.base_users);
        w.diurnal_amplitude = doc.value("diurnal_amplitude", w.diurnal_amplitude);
        w.diurnal_period_h = doc.value("diurnal_period_h", w.diurnal_period_h);
        w.ops_per_user_per_s = doc.value("ops_per_user_per_s", w.ops_per_user_per_s);
        w.read_fraction = doc.value("read_fraction", w.read_fraction);
        w.requests_per_op = doc.value("requests_per_op", w.requests_per_op);
        for (const auto& r : doc.value("reads", nlohmann::json::array())) {
            w.reads.push_back({r.at("template").get<std::string>(), r.value("weight", 1.0)});
        }
        for (const auto& r : doc.value("writes", nlohmann::json::array())) {
            w.writes.push_back({r.at("table").get<std::string>(), parse_kind(r.at("op").get<std::string>()),
                                r.value("field", std::string{}), r.value("weight", 1.0)});
        }
        for (const auto& s : doc.value("spikes", nlohmann::json::array())) {
            SpikeEvent e;
            e.start_h = s.at("start_h").get<double>();
            e.ramp_h = s.value("ramp_h", e.ramp_h);
            e.hold_h = s.value("hold_h", e.hold_h);
            e.decay_h = s.value("decay_h", e.decay_h);
            e.multiplier = s.at("multiplier").get<double>();
            w.spikes.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(std::string("workload: ") + e.what());
    }
    if (w.base_users < 0 || w.ops_per_user_per_s < 0 || w.requests_per_op <= 0 || w.read_fraction < 0 ||
        w.read_fraction > 1 || w.diurnal_amplitude < 0 || w.diurnal_amplitude >= 1 || w.diurnal_period_h <= 0) {
        throw ScenarioError("workload: rates must be non-negative and fractions within [0, 1]");
    }
    for (const auto& s : w.spikes) {
        if (s.multiplier < 1) throw ScenarioError("workload: spike multiplier must be >= 1");
        if (s.ramp_h <= 0 || s.hold_h < 0 || s.decay_h < 0) throw ScenarioError("workload: bad spike durations");
    }
    return w;
}

// ---- RandomWriter ---------------------------------------------------------

RandomWriter::RandomWriter(const Schema& schema, int id_pool) : schema_(schema), id_pool_(id_pool) {}

std::string RandomWriter::id(int n) const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "u%05d", n);
    return buf;
}

bool RandomWriter::pooled(const TableDef& t, std::size_t field) const {
    if (t.is_primary_key(field)) return true;
    const auto& name = t.fields[field].name;
    for (const auto& r : schema_.relationships) {
        if ((r.from_table == t.name && r.from_field == name) || (r.to_table == t.name && r.to_field == name)) {
            return true;
        }
    }
    return false;
}

Value RandomWriter::random_value(std::mt19937_64& rng, const TableDef& t, std::size_t field) const {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(n, 1))); };
    switch (t.fields[field].kind) {
    case FieldKind::string:
        if (pooled(t, field)) return id(pick(id_pool_));
        return "t" + std::to_string(pick(8));
    case FieldKind::integer:
        return static_cast<std::int64_t>(pooled(t, field) ? pick(id_pool_) : pick(100));
    case FieldKind::date:
        return Date{pick(3650)};
    }
    return std::string{};
}

bool RandomWriter::within_bounds(const RelationLookup& state, const std::string& table,
                                 const std::optional<Row>& old_row, const std::optional<Row>& new_row) const {
    auto count_after = [&](const std::string& t, std::size_t f, const Value& v) {
        auto n = static_cast<std::int64_t>(state(t).count_where(f, v));
        if (t == table) {
            if (old_row && (*old_row)[f] == v) --n;
            if (new_row && (*new_row)[f] == v) ++n;
        }
        return n;
    };
    for (const auto& r : schema_.relationships) {
        if (!r.bound) continue;
        if (r.from_table != table && r.to_table != table) continue;
        const auto& a = schema_.require_table(r.from_table);
        const auto& b = schema_.require_table(r.to_table);
        std::size_t fa = a.require_field(r.from_field);
        std::size_t fb = b.require_field(r.to_field);
        std::vector<Value> values;
        for (const auto* row : {&old_row, &new_row}) {
            if (!*row) continue;
            if (r.from_table == table) values.push_back((**row)[fa]);
            if (r.to_table == table) values.push_back((**row)[fb]);
        }
        for (const auto& v : values) {
            auto ca = count_after(a.name, fa, v);
            auto cb = count_after(b.name, fb, v);
            if ((cb > 0 && ca > *r.bound) || (ca > 0 && cb > *r.bound)) return false;
        }
    }
    return true;
}

std::optional<WriteOp> RandomWriter::propose(std::mt19937_64& rng, const RelationLookup& state, const WriteMix& mix,
                                             std::optional<int> owner) const {
    const TableDef& t = schema_.require_table(mix.table);
    const Relation& rel = state(mix.table);
    const std::size_t owner_field = t.primary_key.front();

    auto existing = [&]() -> const StoredRow* {
        if (owner) {
            auto rows = rel.rows_where(owner_field, t.fields[owner_field].kind == FieldKind::string
                                                        ? Value{id(*owner)}
                                                        : Value{static_cast<std::int64_t>(*owner)});
            if (rows.empty()) return nullptr;
            return rows[rng() % rows.size()];
        }
        if (rel.size() == 0) return nullptr;
        auto it = rel.rows().begin();
        std::advance(it, static_cast<std::ptrdiff_t>(rng() % rel.size()));
        return &it->second;
    };

    constexpr int attempts = 8;
    switch (mix.kind) {
    case WriteMix::Kind::insert:
        for (int i = 0; i < attempts; ++i) {
            Row row;
            for (std::size_t f = 0; f < t.fields.size(); ++f) row.push_back(random_value(rng, t, f));
            if (owner) {
                row[owner_field] = t.fields[owner_field].kind == FieldKind::string
                                       ? Value{id(*owner)}
                                       : Value{static_cast<std::int64_t>(*owner)};
            }
            std::optional<Row> old;
            if (const auto* cur = rel.find(rel.key_of(row))) old = cur->row;
            if (within_bounds(state, t.name, old, row)) return WriteOp{mix.kind, t.name, row, {}};
        }
        return std::nullopt;
    case WriteMix::Kind::update: {
        std::vector<std::size_t> candidates;
        if (!mix.field.empty()) {
            candidates.push_back(t.require_field(mix.field));
        } else {
            for (std::size_t f = 0; f < t.fields.size(); ++f) {
                if (!t.is_primary_key(f)) candidates.push_back(f);
            }
        }
        if (candidates.empty()) return std::nullopt;
        for (int i = 0; i < attempts; ++i) {
            const StoredRow* cur = existing();
            if (!cur) return std::nullopt;
            Row row = cur->row;
            std::size_t f = candidates[rng() % candidates.size()];
            row[f] = random_value(rng, t, f);
            if (within_bounds(state, t.name, cur->row, row)) return WriteOp{mix.kind, t.name, row, {}};
        }
        return std::nullopt;
    }
    case WriteMix::Kind::erase: {
        const StoredRow* cur = existing();
        if (!cur) return std::nullopt;
        return WriteOp{mix.kind, t.name, {}, t.primary_key_of(cur->row)};
    }
    }
    return std::nullopt;
}

}  // namespace scalestore

#pragma once

// Shared setup for tests that drive the update pipeline directly.

#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "scalestore/oracle.hpp"
#include "scalestore/pipeline.hpp"
#include "scalestore/scenario.hpp"
#include "scalestore/workload.hpp"

namespace harness {

using namespace scalestore;

inline std::filesystem::path source(const std::string& rel) {
    return std::filesystem::path(SCALESTORE_SOURCE_DIR) / rel;
}

struct Store {
    Schema schema;
    std::vector<QueryTemplate> templates;
    MaintenanceTable table;
    ConsistencySpec spec;
    StorageEngine engine{3, 1'000'000};
    std::unique_ptr<UpdatePipeline> pipeline;

    Store(const std::string& schema_file, const std::string& templates_file, const std::string& spec_file,
          const std::vector<NodeId>& nodes = {0}) {
        schema = parse_schema(read_file(source(schema_file)));
        templates = parse_templates(read_file(source(templates_file)), schema);
        for (const auto& t : templates) table.add(compile(t, schema));
        spec = parse_spec(read_file(source(spec_file)));
        pipeline = std::make_unique<UpdatePipeline>(schema, table, spec, engine);
        pipeline->create_storage(nodes);
    }

    static Store social(const std::vector<NodeId>& nodes = {0}) {
        return Store("scenarios/social.schema", "scenarios/social.sql", "scenarios/social_spec.json", nodes);
    }

    RelationLookup lookup() {
        return [this](const std::string& name) -> const Relation& { return pipeline->maintainer().relation(name); };
    }

    BaseSnapshot snapshot() {
        BaseSnapshot base;
        for (const auto& t : schema.tables) {
            auto& rows = base[t.name];
            for (const auto& [k, r] : pipeline->maintainer().relation(t.name).rows()) rows.push_back(r);
        }
        return base;
    }

    // Leader contents of every derived index.
    std::map<std::string, IndexContents> indices() const {
        std::map<std::string, IndexContents> out;
        for (const auto& name : table.index_order()) {
            if (table.index(name).base_table) continue;
            auto& c = out[name];
            for (const auto& e : engine.get_range(name, {}, {}, engine.max_limit())) {
                c[e.key] = OracleEntry{e.record.value, e.record.version};
            }
        }
        return out;
    }

    void apply(const WriteOp& op, WriterId writer, LogicalTime now, SessionToken* session = nullptr) {
        if (op.kind == WriteMix::Kind::erase) {
            pipeline->erase(op.table, op.pk, writer, now, session);
        } else {
            pipeline->write(op.table, op.row, writer, now, session);
        }
    }
};

inline const std::vector<WriteMix>& social_mix() {
    static const std::vector<WriteMix> mix{
        {"profiles", WriteMix::Kind::insert, "", 2},
        {"profiles", WriteMix::Kind::update, "birthday", 2},
        {"profiles", WriteMix::Kind::update, "name", 1},
        {"profiles", WriteMix::Kind::erase, "", 1},
        {"friendships", WriteMix::Kind::insert, "", 4},
        {"friendships", WriteMix::Kind::erase, "", 2}};
    return mix;
}

inline const WriteMix& pick(std::mt19937_64& rng, const std::vector<WriteMix>& mix) {
    double total = 0;
    for (const auto& m : mix) total += m.weight;
    double x = std::uniform_real_distribution<double>(0, total)(rng);
    for (const auto& m : mix) {
        if (x < m.weight) return m;
        x -= m.weight;
    }
    return mix.back();
}

}  // namespace harness

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "scalestore/query.hpp"
#include "scalestore/relation.hpp"

namespace scalestore {

using BaseSnapshot = std::map<std::string, std::vector<StoredRow>>;

struct OracleEntry {
    std::string value;
    LogicalTime version = 0;
    friend bool operator==(const OracleEntry&, const OracleEntry&) = default;
};

using IndexContents = std::map<CompositeKey, OracleEntry>;

// Recomputes every index from scratch by nested loops over the base tables:
// each template's own index plus every intermediate index in `table`.
// Deliberately shares nothing with the incremental path beyond the key
// layout recorded in the index definitions.
std::map<std::string, IndexContents> oracle_indices(const BaseSnapshot& base,
                                                    const std::vector<QueryTemplate>& templates,
                                                    const MaintenanceTable& table);

// Result tuples of `tmpl` over `base`, as lists of per-alias primary keys.
std::set<std::vector<Tuple>> oracle_tuples(const BaseSnapshot& base, const QueryTemplate& tmpl);

// The subset of those tuples in which some alias reading `table` holds the
// row with primary key `pk`.
std::set<std::vector<Tuple>> oracle_tuples_containing(const BaseSnapshot& base, const QueryTemplate& tmpl,
                                                      const std::string& table, const Tuple& pk);

}  // namespace scalestore

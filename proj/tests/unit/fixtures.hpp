#pragma once

#include <filesystem>
#include <string>

#include "scalestore/query.hpp"
#include "scalestore/scenario.hpp"

namespace fixtures {

inline std::filesystem::path source(const std::string& rel) {
    return std::filesystem::path(SCALESTORE_SOURCE_DIR) / rel;
}

inline scalestore::Schema social_schema() {
    return scalestore::parse_schema(scalestore::read_file(source("scenarios/social.schema")));
}

inline const char* birthday_text =
    "INDEX birthday_index AS SELECT p.* FROM friendships f JOIN profiles p ON p.id = f.f2 "
    "WHERE f.f1 = <user_id> ORDER BY p.birthday";

inline const char* fof_text =
    "INDEX friends_of_friends_index AS SELECT b.* FROM friendships a JOIN friendships b ON b.f1 = a.f2 "
    "WHERE a.f1 = <user_id> ORDER BY b.f2";

}  // namespace fixtures

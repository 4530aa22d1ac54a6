#pragma once

#include <array>
#include <map>
#include <set>

#include "scalestore/consistency.hpp"

namespace scalestore {

enum class Disposition { satisfied, sacrificed };

std::string_view to_string(Disposition d);

// Axes that cannot both be honored while their requirement is threatened.
bool axes_conflict(Axis a, Axis b);

// Walks axes in priority order. A threatened axis is kept unless it
// conflicts with a threatened axis already kept, in which case it is
// sacrificed. Unthreatened axes are always satisfied.
std::map<Axis, Disposition> arbitrate(const std::set<Axis>& active_violations,
                                      const std::array<Axis, 4>& priority_order);

}  // namespace scalestore

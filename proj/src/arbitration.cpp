#include "scalestore/arbitration.hpp"

#include <vector>

namespace scalestore {

std::string_view to_string(Disposition d) {
    return d == Disposition::satisfied ? "satisfied" : "sacrificed";
}

bool axes_conflict(Axis a, Axis b) {
    auto pair = [&](Axis x, Axis y) { return (a == x && b == y) || (a == y && b == x); };
    return pair(Axis::availability, Axis::read_consistency) || pair(Axis::latency, Axis::read_consistency) ||
           pair(Axis::availability, Axis::durability);
}

std::map<Axis, Disposition> arbitrate(const std::set<Axis>& active_violations,
                                      const std::array<Axis, 4>& priority_order) {
    std::map<Axis, Disposition> out;
    std::vector<Axis> kept;
    for (Axis axis : priority_order) {
        if (!active_violations.contains(axis)) {
            out[axis] = Disposition::satisfied;
            continue;
        }
        bool blocked = false;
        for (Axis k : kept) blocked = blocked || axes_conflict(axis, k);
        out[axis] = blocked ? Disposition::sacrificed : Disposition::satisfied;
        if (!blocked) kept.push_back(axis);
    }
    return out;
}

}  // namespace scalestore

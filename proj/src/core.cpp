#include "departnet/core.hpp"

#include <algorithm>
#include <numeric>

namespace departnet {

EmployeeId Roster::intern(std::string_view name) {
    std::string key(name);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    auto id = static_cast<EmployeeId>(names_.size());
    names_.push_back(key);
    index_.emplace(std::move(key), id);
    return id;
}

bool Roster::contains(std::string_view name) const {
    return index_.find(std::string(name)) != index_.end();
}

EmployeeId Roster::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw DataError("unknown employee id '" + std::string(name) + "'");
    return it->second;
}

std::vector<EmployeeId> Roster::canonicalize() {
    std::vector<EmployeeId> order(names_.size());
    std::iota(order.begin(), order.end(), EmployeeId{0});
    std::sort(order.begin(), order.end(),
              [&](EmployeeId a, EmployeeId b) { return names_[a] < names_[b]; });
    std::vector<EmployeeId> remap(names_.size());
    std::vector<std::string> sorted;
    sorted.reserve(names_.size());
    for (EmployeeId fresh = 0; fresh < order.size(); ++fresh) {
        remap[order[fresh]] = fresh;
        sorted.push_back(std::move(names_[order[fresh]]));
    }
    names_ = std::move(sorted);
    index_.clear();
    for (EmployeeId id = 0; id < names_.size(); ++id) index_.emplace(names_[id], id);
    return remap;
}

bool Roster::is_canonical() const {
    return std::is_sorted(names_.begin(), names_.end());
}

}  // namespace departnet

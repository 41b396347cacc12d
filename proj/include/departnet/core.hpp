#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace departnet {

// Input data is malformed or inconsistent (exit code 2 at the CLI).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Estimation failed: rank deficiency, non-convergence, empty period (exit code 3).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or usage (exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense index into a Roster. Ids are assigned in lexicographic name order
// once a roster is canonicalized, so comparing ids compares names.
using EmployeeId = std::uint32_t;

// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

class Roster {
public:
    EmployeeId intern(std::string_view name);
    [[nodiscard]] const std::string& name(EmployeeId id) const { return names_.at(id); }
    [[nodiscard]] bool contains(std::string_view name) const;
    [[nodiscard]] EmployeeId find(std::string_view name) const;  // throws DataError
    [[nodiscard]] std::size_t size() const { return names_.size(); }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }

    // Renumbers ids into sorted name order. Returns old id -> new id.
    std::vector<EmployeeId> canonicalize();
    [[nodiscard]] bool is_canonical() const;

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, EmployeeId> index_;
};

}  // namespace departnet

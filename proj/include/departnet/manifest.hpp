#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace departnet {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);  // throws DataError when unreadable

// Files are recorded by name relative to `root` with their SHA-256.
nlohmann::json build_manifest(const std::string& stage, const std::string& root,
                              const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                              const nlohmann::json& config);

void write_manifest(const std::string& path, const nlohmann::json& manifest);

}  // namespace departnet

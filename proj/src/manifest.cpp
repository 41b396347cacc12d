#include "departnet/manifest.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "departnet/core.hpp"

namespace departnet {

namespace fs = std::filesystem;

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("SHA-256 initialization failed");
    }
    void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len);
        std::string out;
        char buf[3];
        for (unsigned int i = 0; i < len; ++i) {
            std::snprintf(buf, sizeof buf, "%02x", digest[i]);
            out += buf;
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

nlohmann::json build_manifest(const std::string& stage, const std::string& root,
                              const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                              const nlohmann::json& config) {
    auto files = [&](const std::vector<std::string>& paths) {
        auto arr = nlohmann::json::array();
        for (const auto& p : paths) {
            const auto rel = fs::path(p).lexically_relative(root);
            const auto name = rel.empty() || rel.string().starts_with("..") ? fs::path(p).filename().string() : rel.string();
            arr.push_back({{"path", name}, {"sha256", sha256_file(p)}});
        }
        return arr;
    };
    return {{"stage", stage},
            {"inputs", files(inputs)},
            {"outputs", files(outputs)},
            {"config_sha256", sha256_hex(config.dump())}};
}

void write_manifest(const std::string& path, const nlohmann::json& manifest) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << manifest.dump(2) << '\n';
}

}  // namespace departnet

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace relground::cli {

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Digest of a file, or of a directory as the digest over its sorted
/// (relative path, file digest) list.
std::string digest_path(const std::filesystem::path& path);

/// Per-command record of what was read and written. Written as
/// manifest.json next to the outputs; contains no timestamps.
class Manifest {
public:
    Manifest(std::string command, nlohmann::json resolved_config);

    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    void add_seed(const std::string& name, std::uint64_t seed);

    /// Writes resolved_config.json and manifest.json into `dir`.
    void write(const std::filesystem::path& dir) const;
    nlohmann::json to_json(const std::filesystem::path& dir) const;

private:
    std::string command_;
    nlohmann::json config_;
    std::vector<std::filesystem::path> inputs_;
    std::vector<std::filesystem::path> outputs_;
    std::map<std::string, std::uint64_t> seeds_;
};

}  // namespace relground::cli

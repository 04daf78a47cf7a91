#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "relground/array_io.hpp"

namespace relground {

/// Versioned file holding JSON metadata and named float32 arrays. Model and
/// regressor checkpoints both use it, told apart by `kind`.
struct Container {
    std::string kind;
    std::uint32_t version = 1;
    std::string meta = "{}";
    std::map<std::string, ArrayRecord> arrays;
};

inline constexpr std::uint32_t kContainerFormat = 1;

void write_container(const std::filesystem::path& path, const Container& container);

/// Throws DataError if the file is not a container of `expected_kind`.
Container read_container(const std::filesystem::path& path, const std::string& expected_kind);

}  // namespace relground

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "relground/common.hpp"

namespace relground {

/// A float32 array as stored on disk: 16-byte header followed by the payload.
///
/// Header layout (all little-endian uint32): rank, extent0, extent1, extent2.
/// Unused extents are 1. Payload is row-major little-endian float32.
struct ArrayRecord {
    std::uint32_t rank = 1;
    std::array<std::uint32_t, 3> extents{1, 1, 1};
    std::vector<float> values;

    std::size_t element_count() const { return static_cast<std::size_t>(extents[0]) * extents[1] * extents[2]; }
    bool operator==(const ArrayRecord&) const = default;
};

inline constexpr std::size_t kArrayHeaderBytes = 16;

void write_array(std::ostream& out, std::span<const float> values, std::span<const std::uint32_t> extents);
void write_array(std::ostream& out, const ArrayRecord& record);
ArrayRecord read_array(std::istream& in);

void write_u32(std::ostream& out, std::uint32_t v);
std::uint32_t read_u32(std::istream& in);

/// Length-prefixed UTF-8 blob, used for JSON metadata inside binary records.
void write_blob(std::ostream& out, const std::string& text);
std::string read_blob(std::istream& in);

ArrayRecord image_record(const Image& image);
Image record_image(const ArrayRecord& record);
ArrayRecord mask_stack_record(const std::vector<Mask>& masks, int height, int width);
std::vector<Mask> record_mask_stack(const ArrayRecord& record);

}  // namespace relground

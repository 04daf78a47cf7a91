#include "relground/array_io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace relground {

namespace {

void put_le32(char* dst, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) dst[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
}

std::uint32_t get_le32(const char* src) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(src[i])) << (8 * i);
    return v;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    put_le32(buf, v);
    out.write(buf, 4);
}

std::uint32_t read_u32(std::istream& in) {
    char buf[4];
    if (!in.read(buf, 4)) throw DataError("unexpected end of stream reading u32");
    return get_le32(buf);
}

void write_blob(std::ostream& out, const std::string& text) {
    write_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_blob(std::istream& in) {
    const auto n = read_u32(in);
    std::string text(n, '\0');
    if (n > 0 && !in.read(text.data(), n)) throw DataError("unexpected end of stream reading blob");
    return text;
}

void write_array(std::ostream& out, std::span<const float> values, std::span<const std::uint32_t> extents) {
    if (extents.empty() || extents.size() > 3) throw ShapeMismatch("array rank must be 1..3");
    std::size_t n = 1;
    std::array<std::uint32_t, 3> ext{1, 1, 1};
    for (std::size_t i = 0; i < extents.size(); ++i) {
        ext[i] = extents[i];
        n *= extents[i];
    }
    if (n != values.size()) throw ShapeMismatch("array extents do not match payload size");
    char header[kArrayHeaderBytes];
    put_le32(header, static_cast<std::uint32_t>(extents.size()));
    for (int i = 0; i < 3; ++i) put_le32(header + 4 + 4 * i, ext[i]);
    out.write(header, kArrayHeaderBytes);

    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
        for (float f : values) {
            put_le32(header, std::bit_cast<std::uint32_t>(f));
            out.write(header, 4);
        }
    }
    if (!out) throw DataError("failed writing array payload");
}

void write_array(std::ostream& out, const ArrayRecord& record) {
    write_array(out, record.values, std::span<const std::uint32_t>(record.extents.data(), record.rank));
}

ArrayRecord read_array(std::istream& in) {
    char header[kArrayHeaderBytes];
    if (!in.read(header, kArrayHeaderBytes)) throw DataError("unexpected end of stream reading array header");
    ArrayRecord rec;
    rec.rank = get_le32(header);
    if (rec.rank < 1 || rec.rank > 3) throw DataError("corrupt array header (rank)");
    for (int i = 0; i < 3; ++i) rec.extents[i] = get_le32(header + 4 + 4 * i);
    for (std::uint32_t i = rec.rank; i < 3; ++i)
        if (rec.extents[i] != 1) throw DataError("corrupt array header (unused extent)");
    rec.values.resize(rec.element_count());
    const auto bytes = static_cast<std::streamsize>(rec.values.size() * sizeof(float));
    if constexpr (std::endian::native == std::endian::little) {
        if (bytes > 0 && !in.read(reinterpret_cast<char*>(rec.values.data()), bytes))
            throw DataError("unexpected end of stream reading array payload");
    } else {
        char buf[4];
        for (auto& f : rec.values) {
            if (!in.read(buf, 4)) throw DataError("unexpected end of stream reading array payload");
            f = std::bit_cast<float>(get_le32(buf));
        }
    }
    return rec;
}

ArrayRecord image_record(const Image& image) {
    ArrayRecord rec;
    rec.rank = 3;
    rec.extents = {static_cast<std::uint32_t>(image.height), static_cast<std::uint32_t>(image.width),
                   static_cast<std::uint32_t>(image.channels)};
    rec.values = image.data;
    return rec;
}

Image record_image(const ArrayRecord& record) {
    if (record.rank != 3) throw ShapeMismatch("image record must be rank 3");
    Image img;
    img.height = static_cast<int>(record.extents[0]);
    img.width = static_cast<int>(record.extents[1]);
    img.channels = static_cast<int>(record.extents[2]);
    img.data = record.values;
    return img;
}

ArrayRecord mask_stack_record(const std::vector<Mask>& masks, int height, int width) {
    ArrayRecord rec;
    rec.rank = 3;
    rec.extents = {static_cast<std::uint32_t>(masks.size()), static_cast<std::uint32_t>(height),
                   static_cast<std::uint32_t>(width)};
    rec.values.reserve(rec.element_count());
    for (const auto& m : masks) {
        if (m.height != height || m.width != width) throw ShapeMismatch("mask stack with mixed resolutions");
        for (auto v : m.data) rec.values.push_back(v ? 1.0f : 0.0f);
    }
    return rec;
}

std::vector<Mask> record_mask_stack(const ArrayRecord& record) {
    if (record.rank != 3) throw ShapeMismatch("mask stack record must be rank 3");
    const int n = static_cast<int>(record.extents[0]);
    const int h = static_cast<int>(record.extents[1]);
    const int w = static_cast<int>(record.extents[2]);
    std::vector<Mask> masks;
    masks.reserve(n);
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
        Mask m(h, w);
        for (auto& v : m.data) v = record.values[k++] != 0.0f;
        masks.push_back(std::move(m));
    }
    return masks;
}

}  // namespace relground

#include "relground/container.hpp"

#include <cstring>
#include <fstream>

namespace relground {

namespace {
constexpr char kMagic[4] = {'R', 'G', 'C', 'K'};
}

void write_container(const std::filesystem::path& path, const Container& c) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(kMagic, 4);
    write_u32(out, kContainerFormat);
    write_u32(out, c.version);
    write_blob(out, c.kind);
    write_blob(out, c.meta);
    write_u32(out, static_cast<std::uint32_t>(c.arrays.size()));
    for (const auto& [name, rec] : c.arrays) {
        write_blob(out, name);
        write_array(out, rec);
    }
    if (!out) throw DataError("failed writing " + path.string());
}

Container read_container(const std::filesystem::path& path, const std::string& expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError(path.string() + " is not a checkpoint container");
    if (read_u32(in) != kContainerFormat) throw DataError(path.string() + ": unsupported container format");
    Container c;
    c.version = read_u32(in);
    c.kind = read_blob(in);
    if (c.kind != expected_kind)
        throw DataError(path.string() + " holds a '" + c.kind + "', expected '" + expected_kind + "'");
    c.meta = read_blob(in);
    const auto n = read_u32(in);
    for (std::uint32_t i = 0; i < n; ++i) {
        auto name = read_blob(in);
        c.arrays[name] = read_array(in);
    }
    return c;
}

}  // namespace relground

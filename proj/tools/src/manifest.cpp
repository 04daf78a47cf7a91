#include "manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "relground/common.hpp"

namespace relground::cli {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        throw Error("SHA-256 computation failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return out.str();
}

namespace {

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Manifest files are excluded so a directory digest does not depend on an
/// earlier run's bookkeeping.
bool bookkeeping(const fs::path& p) {
    const auto n = p.filename().string();
    return n == "manifest.json" || n == "resolved_config.json";
}

}  // namespace

std::string digest_path(const fs::path& path) {
    if (fs::is_regular_file(path)) return sha256_hex(file_bytes(path));
    if (!fs::is_directory(path)) throw DataError("no such file or directory: " + path.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path))
        if (e.is_regular_file() && !bookkeeping(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string listing;
    for (const auto& f : files) listing += fs::relative(f, path).generic_string() + '\t' + sha256_hex(file_bytes(f)) + '\n';
    return sha256_hex(listing);
}

Manifest::Manifest(std::string command, nlohmann::json resolved_config)
    : command_(std::move(command)), config_(std::move(resolved_config)) {}

void Manifest::add_input(const fs::path& path) { inputs_.push_back(path); }
void Manifest::add_output(const fs::path& path) { outputs_.push_back(path); }
void Manifest::add_seed(const std::string& name, std::uint64_t seed) { seeds_[name] = seed; }

nlohmann::json Manifest::to_json(const fs::path& dir) const {
    using nlohmann::json;
    auto entry = [&](const fs::path& p, bool relative) {
        const auto shown = relative ? fs::relative(p, dir).generic_string() : p.generic_string();
        return json{{"path", shown}, {"sha256", digest_path(p)}};
    };
    json in = json::array(), out = json::array();
    for (const auto& p : inputs_) in.push_back(entry(p, false));
    for (const auto& p : outputs_) out.push_back(entry(p, true));
    return json{{"format", "relground-manifest"},
                {"version", 1},
                {"command", command_},
                {"config_sha256", sha256_hex(config_.dump())},
                {"seeds", seeds_},
                {"inputs", in},
                {"outputs", out}};
}

void Manifest::write(const fs::path& dir) const {
    fs::create_directories(dir);
    {
        std::ofstream c(dir / "resolved_config.json");
        c << config_.dump(2) << '\n';
        if (!c) throw DataError("cannot write " + (dir / "resolved_config.json").string());
    }
    const auto m = to_json(dir);
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2) << '\n';
    if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
}

}  // namespace relground::cli

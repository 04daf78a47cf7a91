#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "relground/common.hpp"

namespace CLI {
class App;
}

namespace relground::cli {

using Json = nlohmann::json;

/// Missing or malformed command-line input; maps to exit status 2.
class UsageError : public Error {
public:
    using Error::Error;
};

/// One configuration key. The flag is the key with '_' replaced by '-'.
/// The type of `fallback` decides how a flag value is parsed.
struct OptionSpec {
    std::string key;
    Json fallback;
    std::string help;
    bool required = false;
};

struct RunContext;

struct CommandSpec {
    std::string name;
    std::string help;
    std::vector<OptionSpec> options;
    std::function<void(const Json& config, RunContext& ctx)> run;
};

/// Raw flag values collected by CLI11 for one command.
struct FlagValues {
    std::map<std::string, std::vector<std::string>> values;
    std::string config_file;
};

/// Registers --config plus one flag per option on `sub`.
void register_flags(CLI::App& sub, const CommandSpec& spec, FlagValues& flags);

/// defaults < config file < flags. Unknown keys in the file are a
/// ConfigError; missing required keys a UsageError.
Json resolve_config(const CommandSpec& spec, const FlagValues& flags);

std::string flag_name(const std::string& key);

/// Relative paths resolve against $RELGROUND_WORKSPACE when it is set.
std::filesystem::path workspace_path(const std::string& p);

/// Markdown page listing every command, flag, default and help text.
std::string reference_page(const std::vector<CommandSpec>& commands);

}  // namespace relground::cli

#include "options.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"

namespace relground::cli {

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError("--" + flag_name(key) + ": expected a boolean, got '" + v + "'");
}

Json parse_scalar(const std::string& key, const Json& like, const std::string& v) {
    try {
        std::size_t used = 0;
        if (like.is_boolean()) return parse_bool(key, v);
        if (like.is_number_integer()) {
            const long long x = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        }
        if (like.is_number()) {
            const double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        }
    } catch (const std::logic_error&) {
        throw UsageError("--" + flag_name(key) + ": cannot parse '" + v + "'");
    }
    return v;
}

/// Flag value(s) converted to the JSON type of the default.
Json parse_flag(const OptionSpec& o, const std::vector<std::string>& raw) {
    if (!o.fallback.is_array()) return parse_scalar(o.key, o.fallback, raw.back());
    const Json like = o.fallback.empty() ? Json("") : o.fallback.front();
    Json out = Json::array();
    for (const auto& r : raw) {
        std::stringstream ss(r);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(parse_scalar(o.key, like, item));
    }
    return out;
}

bool same_kind(const Json& a, const Json& b) {
    if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
    return a.type() == b.type();
}

std::string show(const Json& j) {
    if (j.is_string()) return j.get<std::string>().empty() ? "(none)" : j.get<std::string>();
    return j.dump();
}

}  // namespace

std::string flag_name(const std::string& key) {
    std::string f = key;
    for (auto& c : f)
        if (c == '_') c = '-';
    return f;
}

void register_flags(CLI::App& sub, const CommandSpec& spec, FlagValues& flags) {
    sub.add_option("--config", flags.config_file, "JSON file with configuration keys");
    for (const auto& o : spec.options) {
        auto& slot = flags.values[o.key];
        const std::string name = "--" + flag_name(o.key);
        if (o.fallback.is_boolean()) {
            sub.add_flag_function(name, [&slot](std::int64_t n) { slot = {n > 0 ? "true" : "false"}; }, o.help);
        } else if (o.fallback.is_array()) {
            sub.add_option(name, slot, o.help)->expected(1, -1);
        } else {
            sub.add_option(name, slot, o.help)->expected(1);
        }
    }
}

Json resolve_config(const CommandSpec& spec, const FlagValues& flags) {
    Json cfg = Json::object();
    for (const auto& o : spec.options) cfg[o.key] = o.fallback;
    if (!flags.config_file.empty()) {
        const auto path = workspace_path(flags.config_file);
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file " + path.string());
        Json file;
        try {
            file = Json::parse(in);
        } catch (const Json::exception& e) {
            throw ConfigError("config file " + path.string() + ": " + e.what());
        }
        if (!file.is_object()) throw ConfigError("config file " + path.string() + " must hold a JSON object");
        for (const auto& [k, v] : file.items()) {
            if (!cfg.contains(k)) throw ConfigError("unknown key '" + k + "' for command " + spec.name);
            if (!same_kind(cfg[k], v) && !(cfg[k].is_array() && v.is_array()))
                throw ConfigError("key '" + k + "' has the wrong type (expected like " + cfg[k].dump() + ")");
            cfg[k] = v;
        }
    }
    for (const auto& o : spec.options) {
        const auto it = flags.values.find(o.key);
        if (it != flags.values.end() && !it->second.empty()) cfg[o.key] = parse_flag(o, it->second);
    }
    for (const auto& o : spec.options)
        if (o.required && (cfg[o.key].is_null() || (cfg[o.key].is_string() && cfg[o.key].get<std::string>().empty())))
            throw UsageError(spec.name + ": --" + flag_name(o.key) + " is required");
    return cfg;
}

std::filesystem::path workspace_path(const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute() || p.empty()) return path;
    if (const char* root = std::getenv("RELGROUND_WORKSPACE"); root && *root) return std::filesystem::path(root) / path;
    return path;
}

std::string reference_page(const std::vector<CommandSpec>& commands) {
    std::ostringstream out;
    out << "# relground command reference\n\n"
        << "Configuration precedence is built-in defaults, then the `--config` JSON file, then flags. "
        << "Config file keys are the flag names with `-` replaced by `_`. "
        << "Relative paths resolve against `$RELGROUND_WORKSPACE` when it is set.\n\n"
        << "Exit status: 0 success, 2 usage error, 3 configuration error, 4 data error, 5 numerical error.\n";
    for (const auto& c : commands) {
        out << "\n## " << c.name << "\n\n" << c.help << "\n\n";
        out << "| flag | config key | default | description |\n|---|---|---|---|\n";
        out << "| `--config` | | (none) | JSON file with configuration keys |\n";
        for (const auto& o : c.options)
            out << "| `--" << flag_name(o.key) << "` | `" << o.key << "` | " << (o.required ? "required" : show(o.fallback))
                << " | " << o.help << " |\n";
    }
    return out.str();
}

}  // namespace relground::cli

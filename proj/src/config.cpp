#include "charattr/config.hpp"

#include <cstdlib>
#include <fstream>

#include "charattr/errors.hpp"
#include "vendor_json.hpp"

namespace charattr::cli {

namespace {

std::string scalar_to_string(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean() || v.is_number()) return v.dump();
    throw UsageError("config key '" + key + "' must be a scalar");
}

}  // namespace

RunConfig RunConfig::resolve(const std::vector<std::string>& args,
                             const std::vector<std::pair<std::string, std::string>>& defaults,
                             const std::set<std::string>& known_keys) {
    RunConfig cfg;
    for (const auto& [k, v] : defaults) cfg.values_[k] = v;

    // first pass: find --config and merge the file
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config requires a path");
            std::ifstream f(args[i + 1]);
            if (!f) throw UsageError("cannot open config file: " + args[i + 1]);
            nlohmann::json j;
            try {
                f >> j;
            } catch (const nlohmann::json::exception& e) {
                throw UsageError("config file " + args[i + 1] + ": " + e.what());
            }
            if (!j.is_object()) throw UsageError("config file must hold a JSON object");
            for (const auto& [k, v] : j.items()) {
                if (!known_keys.count(k))
                    throw UsageError("unknown config key '" + k + "' in " + args[i + 1]);
                cfg.values_[k] = scalar_to_string(v, k);
            }
        }
    }

    // second pass: --key value overrides
    for (size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0)
            throw UsageError("unexpected argument '" + a + "' (flags are --key value)");
        const std::string key = a.substr(2);
        if (key == "config") {
            ++i;  // handled above
            continue;
        }
        if (!known_keys.count(key)) throw UsageError("unknown option --" + key);
        if (i + 1 >= args.size()) throw UsageError("--" + key + " requires a value");
        cfg.values_[key] = args[++i];
    }
    return cfg;
}

std::string RunConfig::get_str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("missing required setting '" + key + "'");
    return it->second;
}

int RunConfig::get_int(const std::string& key) const {
    const std::string v = get_str(key);
    try {
        size_t pos = 0;
        const int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("setting '" + key + "' must be an integer, got '" + v + "'");
    }
}

double RunConfig::get_double(const std::string& key) const {
    const std::string v = get_str(key);
    try {
        size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("setting '" + key + "' must be a number, got '" + v + "'");
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string v = get_str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("setting '" + key + "' must be true/false, got '" + v + "'");
}

uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string v = get_str(key);
    try {
        size_t pos = 0;
        const uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("setting '" + key + "' must be a non-negative integer, got '" + v +
                         "'");
    }
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    const std::string v = get_str(key);
    std::vector<int> out;
    size_t start = 0;
    while (start <= v.size()) {
        const size_t comma = v.find(',', start);
        const std::string part =
            comma == std::string::npos ? v.substr(start) : v.substr(start, comma - start);
        if (part.empty()) throw UsageError("setting '" + key + "' has an empty list entry");
        try {
            size_t pos = 0;
            out.push_back(std::stoi(part, &pos));
            if (pos != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw UsageError("setting '" + key + "' must be comma-separated integers");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

uint64_t RunConfig::seed() const {
    if (has("seed")) return get_u64("seed");
    if (const char* env = std::getenv("CHARATTR_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError("CHARATTR_SEED must be a non-negative integer");
        }
    }
    throw UsageError("no seed given (set --seed or CHARATTR_SEED)");
}

std::string RunConfig::echo_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j.dump();
}

}  // namespace charattr::cli

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace charattr::cli {

// Flat key-value settings resolved from defaults, an optional JSON config
// file (--config path) and --key value command line overrides, in that
// precedence order (flags win). Unknown keys are usage errors. The
// resolved map is echoed into output artifacts.
class RunConfig {
public:
    static RunConfig resolve(const std::vector<std::string>& args,
                             const std::vector<std::pair<std::string, std::string>>& defaults,
                             const std::set<std::string>& known_keys);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get_str(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;  // comma separated

    // Seed resolution: explicit "seed" key, else the CHARATTR_SEED
    // environment variable, else a usage error.
    uint64_t seed() const;

    std::string echo_json() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace charattr::cli

#pragma once

// Flat key=value run configuration. Resolution order: built-in defaults,
// then a config file, then command-line flags. Unknown keys are rejected.

#include "pinnmeta/meta.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace pinnmeta {

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string help;
};

class RunConfig {
public:
    RunConfig();

    static const std::vector<ConfigKey>& keys();
    static bool known(const std::string& key);

    // Throws UsageError for unknown keys.
    void set(const std::string& key, const std::string& value);
    // Lines "key = value"; '#' starts a comment; blank lines ignored.
    void load_file(const std::string& path);
    void load(std::istream& is, const std::string& origin = "<stream>");

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }

    // Fills subcommand-dependent blanks (epochs, ic_family, run_id) and
    // checks every value parses. Throws UsageError.
    void resolve(const std::string& subcommand);

    // Resolved key=value text, sorted by key; loadable with load_file.
    void write(std::ostream& os) const;

private:
    std::map<std::string, std::string> values_;
};

IcFamily family_of(const RunConfig& config);
MetaConfig meta_config_of(const RunConfig& config);
GamConfig gam_config_of(const RunConfig& config);

} // namespace pinnmeta

#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ebox::cli {

// key=value defaults for subcommand flags, read from emotionbox.conf in the
// working directory. Precedence: flag > config file > built-in default.
struct AppConfig {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) > 0; }
};

inline constexpr const char* kConfigFileName = "emotionbox.conf";

// Blank lines and '#' comments are skipped. Throws ebox::Error naming the
// first unknown key or malformed line.
AppConfig parse_app_config(std::string_view text);

const std::vector<std::string>& known_config_keys();

// Exit codes: 0 success, 1 domain error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace ebox::cli

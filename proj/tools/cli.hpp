#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace gectune::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one subcommand. `args` excludes the program name. Results go to
/// `out`, diagnostics and the effective configuration to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses `key = value` lines ('#' starts a comment). Throws ConfigError on
/// malformed lines, unknown keys and duplicates.
std::map<std::string, std::string> parse_config(std::string_view text);

/// Every recognized configuration key.
std::vector<std::string> known_keys();

}  // namespace gectune::cli

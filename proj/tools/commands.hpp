#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "crosspred/config.hpp"

namespace crosspred::cli {

// Exit codes: 0 ok, 1 internal, 2 data, 3 alignment, 4 config, 5 numerical.

/// Parses argv (subcommand, --config, flag overrides) and runs the command. Never throws.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Runs one subcommand on a resolved configuration. Errors surface as crosspred::Error.
int run_command(const std::string& command, const KeyValueConfig& config, std::ostream& out, std::ostream& err);

int cmd_validate(const KeyValueConfig& config, std::ostream& out, std::ostream& err);
int cmd_estimate(const KeyValueConfig& config, std::ostream& out, std::ostream& err);
int cmd_backtest(const KeyValueConfig& config, std::ostream& out, std::ostream& err);
int cmd_synth(const KeyValueConfig& config, std::ostream& out, std::ostream& err);
int cmd_analyze(const KeyValueConfig& config, std::ostream& out, std::ostream& err);

/// Keys accepted by each command; anything else is a config error.
const std::vector<std::string>& allowed_keys(const std::string& command);

/// manifest.output.<file>.sha256 entries of a written manifest, keyed by file name.
std::vector<std::pair<std::string, std::string>> manifest_output_digests(const std::filesystem::path& manifest);

}  // namespace crosspred::cli

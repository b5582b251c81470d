#pragma once

// Subcommands behind the `ealoc` binary. Exit codes: 0 ok, 1 runtime
// failure, 2 bad configuration, flags or input data.

#include "ealoc/config.hpp"

#include <iosfwd>
#include <string>

namespace ealoc {

int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_replay(const RunConfig& cfg, std::ostream& out);
int cmd_report(const RunConfig& cfg, const std::string& records_path, std::ostream& out);
int cmd_make_fixture(const RunConfig& cfg, const std::string& dir, std::ostream& err);

/// Parses arguments and runs; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ealoc

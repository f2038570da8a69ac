#pragma once

#include <string>

namespace kcone {

// Parses the JSON config file, runs the requested command, writes
// report.json plus artifacts into the output directory and prints one line
// per check. Returns the process exit code: 0 all checks pass, 2 some check
// failed, 3 config error, 4 numerical failure (with a trace file).
int run_config_file(const std::string& config_path,
                    const std::string& output_dir_override = "");

}  // namespace kcone

// Pipeline stages behind the `polsar` executable. Each stage reads one JSON manifest,
// writes its artifacts plus a `<primary output>.run.json` reproducibility record, and
// re-reads every artifact before returning.
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cli/manifest.hpp"
#include "polsar/raster.hpp"

namespace polsar::cli {

inline constexpr const char* kVersion = "0.1.0";

struct CommandResult {
  std::vector<std::filesystem::path> outputs;
  std::filesystem::path record;
  std::vector<std::string> warnings;
  std::vector<std::string> summary;  ///< short result lines printed to stdout
};

/// Receives progress lines and warnings. Defaults to stderr when empty.
using Logger = std::function<void(const std::string&)>;

CommandResult cmd_simulate(const std::filesystem::path& manifest, const Logger& log = {});
CommandResult cmd_changemask(const std::filesystem::path& manifest, const Logger& log = {});
CommandResult cmd_dataset(const std::filesystem::path& manifest, const Logger& log = {});
CommandResult cmd_train(const std::filesystem::path& manifest, const Logger& log = {});
CommandResult cmd_despeckle(const std::filesystem::path& manifest, const Logger& log = {});
CommandResult cmd_evaluate(const std::filesystem::path& manifest, const Logger& log = {});
CommandResult cmd_quicklook(const std::filesystem::path& input, const std::filesystem::path& output,
                            const Logger& log = {});

/// Stack manifest: {"dates": [...], "epochs": [...], "truths": [...] (optional)}.
/// Epoch paths are relative to the manifest's directory.
TemporalStack read_stack_manifest(const std::filesystem::path& path);

/// Full command line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace polsar::cli

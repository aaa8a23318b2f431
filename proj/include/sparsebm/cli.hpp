#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace sparsebm {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// Entry point of the `sparsebm` tool. argv[0] is the program name.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Provenance record written as "<output>.manifest.json" by every
/// artifact-producing command.
struct RunManifest {
  std::string command;
  std::string config_hash;
  unsigned long long seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_time_seconds = 0.0;
};

std::filesystem::path manifest_path(const std::filesystem::path& output);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace sparsebm

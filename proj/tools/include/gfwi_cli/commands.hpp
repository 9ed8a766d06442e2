#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "gfwi_cli/config.hpp"

namespace gfwi::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kConfigFailure = 2, kNumericFailure = 3, kIoFailure = 4 };

/// Writes data/{clean,noisy,true_velocity} under `out`.
void cmd_forward(const ExperimentConfig& config, const std::filesystem::path& out);
/// MAP + Laplace per potential for every dataset present under out/data.
void cmd_invert(const ExperimentConfig& config, const std::filesystem::path& out);
/// pCN chain for the first potential on the clean data.
void cmd_sample(const ExperimentConfig& config, const std::filesystem::path& out);
/// Stability report from the clean and noisy inversions.
void cmd_compare(const ExperimentConfig& config, const std::filesystem::path& out);

/// Manifest with the config hash, library version, seeds and a checksum
/// of every other file in `dir`.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& config,
                    const std::map<std::string, std::uint64_t>& seeds);

/// Command-line entry point; returns an ExitCode.
int run(int argc, char** argv);

}  // namespace gfwi::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bspring/evaluation.hpp"
#include "bspring/pipeline.hpp"
#include "bspring/synth.hpp"

namespace bspring {

enum ExitCode { kExitOk = 0, kExitInputError = 1, kExitConfigError = 2 };

struct RunConfig {
  PipelineConfig pipeline;
  EvalSettings eval;
  SynthConfig synth;
  std::string input;
  std::string template_path;
  std::string truth;
  std::string pred;
  std::string output = "out";
  std::optional<double> fs;       // overrides the input header
  std::string prime = "auto";     // auto | file | truth | bootstrap
  int threads = 0;                // 0 keeps the OpenMP default
  std::size_t bench_repeats = 5;
  std::vector<double> bench_seconds{30.0, 60.0, 120.0, 240.0};
};

// Every key accepted in config files and as --key flags.
std::vector<std::string> setting_keys();
// Throws ConfigError naming the key on unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
// key -> value for every setting, as it would be written in a config file.
std::map<std::string, std::string> describe(const RunConfig& config);

// key = value lines; '#' and ';' start comments; [sections] are ignored.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

void validate(const RunConfig& config);

void cmd_synth(const RunConfig& config);
void cmd_segment(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);

struct BenchRow {
  std::string sweep;     // "n" or "m"
  double seconds = 0.0;  // stream length
  std::size_t samples = 0;
  std::size_t m = 0;     // template feature length
  double wall_s = 0.0;   // best of the repeats
};

std::vector<BenchRow> run_bench(const RunConfig& config);
void cmd_bench(const RunConfig& config);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace bspring

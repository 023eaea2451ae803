#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "bspring/signal.hpp"

namespace bspring {

// Piecewise-linear profiles: knots are spread evenly over [0, duration_s],
// a single knot means a constant value.
struct SynthConfig {
  std::vector<double> hr_profile_bpm{72.0};
  double fs = 300.0;
  double duration_s = 60.0;
  double resp_mod_depth = 0.0;   // relative amplitude swing; period swings by a quarter of it
  double resp_rate_hz = 0.25;
  std::vector<double> dicrotic_profile{0.3};  // dicrotic bump height relative to systolic
  double noise_sigma = 0.0;      // white noise std, as a fraction of the clean peak-to-peak range
  std::uint64_t seed = 0;
};

// Per complete cycle i: onset_idx[i] < ms_idx[i] < sys_idx[i] < end_idx[i],
// and end_idx[i] == onset_idx[i + 1].
struct SynthGroundTruth {
  std::vector<std::size_t> onset_idx;
  std::vector<std::size_t> ms_idx;
  std::vector<std::size_t> sys_idx;
  std::vector<std::size_t> end_idx;
  std::vector<double> ibi_ms;      // nominal period of cycle i
  std::vector<double> ibi_time_s;  // stamped at the end of cycle i
};

struct SynthRecord {
  SignalBatch signal;
  SynthGroundTruth truth;
};

// Two Gaussian-bump pulses (systolic with an exponential run-off, plus a
// dicrotic bump) per cycle. Deterministic for a given config.
SynthRecord synth_ppg(const SynthConfig& config);

// Writes class,sample_index,time_s rows (Sys, MS, Onset).
void write_truth_csv(const std::filesystem::path& path, const SynthRecord& record);
// Writes time_s,ibi_ms rows.
void write_truth_ibi_csv(const std::filesystem::path& path, const SynthGroundTruth& truth);

}  // namespace bspring

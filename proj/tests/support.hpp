#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bspring/filter.hpp"
#include "bspring/pipeline.hpp"
#include "bspring/synth.hpp"

namespace testing_support {

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bspring_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline bspring::SynthRecord synth(std::vector<double> hr, double seconds, double noise = 0.0, std::uint64_t seed = 0,
                                  std::vector<double> dicrotic = {0.3}, double resp = 0.0) {
  bspring::SynthConfig c;
  c.hr_profile_bpm = std::move(hr);
  c.duration_s = seconds;
  c.noise_sigma = noise;
  c.seed = seed;
  c.dicrotic_profile = std::move(dicrotic);
  c.resp_mod_depth = resp;
  return bspring::synth_ppg(c);
}

// Prime template taken from the filtered record at the annotated onsets.
inline bspring::Template prime_of(const bspring::SynthRecord& rec) {
  const auto filtered = bspring::bandpass_filter(rec.signal);
  return bspring::prime_from_onsets(filtered, rec.truth.onset_idx);
}

}  // namespace testing_support

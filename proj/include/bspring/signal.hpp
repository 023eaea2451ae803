#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bspring {

// A uniformly sampled scalar stream, or a window of one.
//
// `start_index` is the position of samples[0] in the parent stream and
// `t0` its time in seconds, so global index g maps to t0 + (g - start_index) / fs.
struct SignalBatch {
  std::vector<double> samples;
  double fs = 0.0;
  double t0 = 0.0;
  std::size_t start_index = 0;

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const noexcept { return static_cast<double>(samples.size()) / fs; }
  std::size_t end_index() const noexcept { return start_index + samples.size(); }
  double time_of(std::size_t global_index) const noexcept;
  double at(std::size_t global_index) const { return samples.at(global_index - start_index); }
};

// Validates the batch invariants (nonempty, fs > 0, finite samples).
SignalBatch make_batch(std::vector<double> samples, double fs, double t0 = 0.0,
                       std::size_t start_index = 0);

// Window [begin, end) in global indices; the result keeps the parent clock.
SignalBatch slice(const SignalBatch& batch, std::size_t begin, std::size_t end);

SignalBatch parse_csv(std::istream& in, std::optional<double> fs_override = std::nullopt,
                      const std::string& source = "<stream>");
SignalBatch load_csv(const std::filesystem::path& path,
                     std::optional<double> fs_override = std::nullopt);
void write_csv(const std::filesystem::path& path, const SignalBatch& batch);

struct DerivedViews {
  std::vector<double> deriv;         // deriv[i] = x[i+1] - x[i], stamped at sample i
  std::vector<double> deriv_scaled;  // min-max scaled over the batch, in [0, 1]
  std::vector<double> normalized;    // x - mean(x)
  bool degenerate = false;           // deriv was constant; deriv_scaled is all zeros
};

DerivedViews derive_views(const SignalBatch& batch);

std::vector<double> first_difference(std::span<const double> x);

// Min-max scaling to [0, 1]. A constant input yields zeros and sets *degenerate.
std::vector<double> min_max_scale(std::span<const double> x, bool* degenerate = nullptr);

// The representation every DTW comparison runs on: the first difference,
// mean-normalized as (d - mean(d)) / (max(d) - min(d)). Each waveform is
// normalized independently, so stream and template amplitudes don't bias the
// alignment. Constant input gives zeros.
std::vector<double> comparison_features(std::span<const double> samples);

}  // namespace bspring

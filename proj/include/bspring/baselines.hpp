#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bspring/fiducial.hpp"
#include "bspring/segmenter.hpp"
#include "bspring/signal.hpp"
#include "bspring/template.hpp"

namespace bspring {

struct SpringConfig {
  // Distance threshold; when absent it is calibrated as half the median of
  // d(x_t, y_m) over a warm-up pass of `warmup_cycles` template lengths.
  std::optional<double> epsilon;
  std::size_t warmup_cycles = 10;
};

struct SpringResult {
  std::vector<Segment> segments;
  std::vector<FiducialEvent> events;
  double epsilon = 0.0;
};

// Half the median of the first warmup_cycles * m entries of the trace.
double calibrate_epsilon(std::span<const double> distance, std::size_t m, std::size_t warmup_cycles);

// Classic SpringDTW matching: a match is reported at every t where
// d(x_t, y_m) <= epsilon and d is a local minimum in t; the match starts at
// the Spring start pointer. Fiducials come from a banded traceback against
// the template, as in the main pipeline.
SpringResult springdtw_segment(const SignalBatch& batch, const Template& templ, const SpringConfig& config,
                               const StreamClock& clock);

struct ThresholdConfig {
  double peak_fraction = 0.7;       // threshold restarts at this fraction of the last peak height
  double refractory_fraction = 0.6; // minimum peak spacing, fraction of the running cycle length
  std::size_t slope_window = 150;   // samples searched before a peak for its valley
  double decay_cycles = 4.0;        // threshold e-folding time, in running cycle lengths
};

// Peak/slope/valley detection with an amplitude threshold that decays between
// beats and a refractory period. Sys = accepted peaks, Onset = valley before
// each peak, MS = derivative maximum between them.
std::vector<FiducialEvent> adaptive_threshold_detect(const SignalBatch& batch, const DerivedViews& views,
                                                     double fs, const ThresholdConfig& config,
                                                     const StreamClock& clock);

}  // namespace bspring

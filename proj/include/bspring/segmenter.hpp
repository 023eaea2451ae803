#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bspring/dtw.hpp"
#include "bspring/signal.hpp"
#include "bspring/template.hpp"

namespace bspring {

// Search band for the dominant pulse frequency (30-180 bpm by default).
struct FrequencyBand {
  double low_hz = 0.5;
  double high_hz = 3.0;
};

struct CycleLengthEstimate {
  double l_x = 0.0;     // samples per cycle
  double f_star = 0.0;  // Hz
  double batch_span = 0.0;  // seconds
};

// Hann-windowed FFT, zero-padded to 4x, peak restricted to `band` with
// parabolic interpolation; l_x = fs / f_star.
CycleLengthEstimate estimate_cycle_length(std::span<const double> samples, double fs, FrequencyBand band = {});
CycleLengthEstimate estimate_cycle_length(const SignalBatch& batch, FrequencyBand band = {});

// Strict local minima; a flat run counts once, at its last index.
std::vector<std::size_t> local_minima(std::span<const double> x);

struct CandidateEndpoint {
  std::size_t idx = 0;  // global stream index of the local minimum
  double g_t = 0.0;     // scaled derivative at the next derivative peak
  double p_c = 0.0;
};

// Every local minimum followed (at or after it) by a local maximum of the
// scaled derivative. Requires non-degenerate views.
std::vector<CandidateEndpoint> detect_candidates(const SignalBatch& batch, const DerivedViews& views);

// (g - lo) / (hi - lo); throws DegenerateBatchError when hi == lo.
double heuristic_likelihood(double g_t, double batch_min, double batch_max);
// exp(-gamma * d)
double morphology_likelihood(double d, double gamma);
// p_c * p_d
double endpoint_probability(double p_c, double p_d);

struct EndpointRecord {
  std::size_t idx = 0;
  double d = 0.0;
  double p_c = 0.0;
  double p_d = 0.0;
  double p_e = 0.0;
};

struct EndpointTrace {
  std::vector<EndpointRecord> records;
  std::size_t distance_start = 0;  // global index of distance[0]
  std::vector<double> distance;    // Spring d(x_t, y_m) per sample
};

struct Segment {
  std::size_t t_s = 0;
  std::size_t t_e = 0;
  int template_id = 0;
  WarpingPath path;  // stream side in global sample indices
  double p_e_at_end = 0.0;
  bool after_reset = false;  // t_s was not the previous segment's t_e
};

struct SegmenterParams {
  double alpha = 0.7;
  double beta = 1.3;
  double gamma = 5000.0;  // scales the Spring distance; retune if the feature scale changes
};

// Throws ConfigError unless 0 < alpha < 1 < beta and gamma > 0.
void validate(const SegmenterParams& params);

struct EndpointChoice {
  std::size_t start = 0;  // record index of t_s
  std::size_t end = 0;    // record index of t_e
  bool after_reset = false;
};

struct SearchOutcome {
  std::vector<EndpointChoice> choices;
  std::optional<std::size_t> open_anchor;  // record index of an anchor whose window ran past the data
  std::size_t resets = 0;
};

// The alpha/beta search over scored candidates (sorted by idx).
//
// An anchor that is not a confirmed endpoint moves to a later candidate in
// (anchor, anchor + alpha*l_x) whose p_c is at least its own. Among the
// candidates in [anchor + alpha*l_x, anchor + beta*l_x] the one with the
// largest p_e becomes t_e (earliest on ties) and the next, confirmed,
// anchor. An empty window restarts at the first candidate past it. Windows
// reaching beyond `last_index` close only when `final_batch` is set.
SearchOutcome search_endpoints(std::span<const EndpointRecord> records, double l_x, const SegmenterParams& params,
                               std::size_t last_index, bool final_batch);

// A batch with everything the segmenter needs that does not depend on the template.
struct PreparedBatch {
  SignalBatch batch;
  DerivedViews views;
  std::vector<double> features;  // comparison_features(batch.samples)
  std::vector<CandidateEndpoint> candidates;
};

// Throws DegenerateBatchError on a constant derivative.
PreparedBatch prepare_batch(SignalBatch batch);

struct SegmentationResult {
  std::vector<Segment> segments;
  EndpointTrace trace;
  std::optional<std::size_t> open_anchor;  // global index where an unfinished cycle starts
  std::size_t resets = 0;
};

// `distance` is spring_distance_trace(prepared.features, template features).
SegmentationResult segment_prepared(const PreparedBatch& prepared, const Template& templ,
                                    std::span<const double> distance, double l_x,
                                    const SegmenterParams& params, bool final_batch = true);

SegmentationResult segment_stream(const SignalBatch& batch, const DerivedViews& views, const Template& templ,
                                  double l_x, const SegmenterParams& params, bool final_batch = true);

// Mean accumulated cost of the segments' warping paths; +inf when empty.
double average_path_cost(std::span<const Segment> segments);

}  // namespace bspring

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bspring/dtw.hpp"
#include "bspring/segmenter.hpp"
#include "bspring/template.hpp"

namespace bspring {

// Converts global stream indices to seconds.
struct StreamClock {
  double fs = 1.0;
  double t0 = 0.0;  // time of stream index 0
  double time_of(std::size_t idx) const noexcept { return t0 + static_cast<double>(idx) / fs; }
};

struct FiducialEvent {
  FiducialClass cls = FiducialClass::NF;
  std::size_t stream_idx = 0;
  double time_s = 0.0;
  std::size_t segment_id = 0;
};

// Stream index aligned with `template_index` at the smallest pairwise
// distance (earliest on ties), or nullopt when the path never visits it.
std::optional<std::size_t> map_annotation(const WarpingPath& path, std::size_t template_index);

struct MappingResult {
  std::vector<FiducialEvent> events;
  std::vector<FiducialClass> failed;
};

// Onset events at t_s and t_e, Sys and MS through the warping path.
MappingResult map_fiducials(const Segment& segment, std::size_t segment_id, const Template& templ,
                            const WarpingPath& path, const StreamClock& clock);

struct AnnotatedStream {
  std::vector<FiducialEvent> events;  // sorted by stream index, then class
  std::size_t warnings = 0;
  std::vector<std::string> messages;
};

// Maps every segment with the template it was matched against. Onsets
// shared by consecutive segments are reported once; per-class failures become
// warnings.
AnnotatedStream annotate_stream(std::span<const Segment> segments, std::span<const Template> templates,
                                const StreamClock& clock, std::size_t first_segment_id = 0);

std::vector<FiducialEvent> events_of_class(std::span<const FiducialEvent> events, FiducialClass cls);

}  // namespace bspring

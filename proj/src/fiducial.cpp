#include "bspring/fiducial.hpp"

#include <algorithm>

#include "bspring/error.hpp"

namespace bspring {

std::optional<std::size_t> map_annotation(const WarpingPath& path, std::size_t template_index) {
  std::optional<std::size_t> best;
  double best_d = kUnreachable;
  for (std::size_t k = 0; k < path.pairs.size(); ++k) {
    const auto [s, i] = path.pairs[k];
    if (i != template_index) continue;
    const double d = k < path.local.size() ? path.local[k] : 0.0;
    if (!best || d < best_d || (d == best_d && s < *best)) {
      best = s;
      best_d = d;
    }
  }
  return best;
}

MappingResult map_fiducials(const Segment& segment, std::size_t segment_id, const Template& templ,
                            const WarpingPath& path, const StreamClock& clock) {
  MappingResult out;
  auto emit = [&](FiducialClass cls, std::size_t idx) {
    out.events.push_back({cls, idx, clock.time_of(idx), segment_id});
  };
  emit(FiducialClass::Onset, segment.t_s);
  for (auto cls : {FiducialClass::MS, FiducialClass::Sys}) {
    const auto ann = templ.ann.find(cls);
    const auto idx = ann == templ.ann.end() ? std::nullopt : map_annotation(path, ann->second);
    if (!idx || *idx < segment.t_s || *idx > segment.t_e) {
      out.failed.push_back(cls);
      continue;
    }
    emit(cls, *idx);
  }
  emit(FiducialClass::Onset, segment.t_e);
  return out;
}

AnnotatedStream annotate_stream(std::span<const Segment> segments, std::span<const Template> templates,
                                const StreamClock& clock, std::size_t first_segment_id) {
  AnnotatedStream out;
  std::optional<std::size_t> last_onset;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& seg = segments[k];
    const auto it = std::find_if(templates.begin(), templates.end(),
                                 [&](const Template& t) { return t.id == seg.template_id; });
    if (it == templates.end()) {
      throw MappingError("segment " + std::to_string(first_segment_id + k) + " refers to unknown template " +
                         std::to_string(seg.template_id));
    }
    auto mapped = map_fiducials(seg, first_segment_id + k, *it, seg.path, clock);
    for (auto cls : mapped.failed) {
      ++out.warnings;
      out.messages.push_back("segment " + std::to_string(first_segment_id + k) + ": " +
                             std::string(to_string(cls)) + " annotation not on the warping path");
    }
    for (const auto& ev : mapped.events) {
      if (ev.cls == FiducialClass::Onset) {
        if (last_onset && *last_onset == ev.stream_idx) continue;
        last_onset = ev.stream_idx;
      }
      out.events.push_back(ev);
    }
  }
  std::stable_sort(out.events.begin(), out.events.end(), [](const FiducialEvent& a, const FiducialEvent& b) {
    return a.stream_idx < b.stream_idx;
  });
  return out;
}

std::vector<FiducialEvent> events_of_class(std::span<const FiducialEvent> events, FiducialClass cls) {
  std::vector<FiducialEvent> out;
  for (const auto& e : events) {
    if (e.cls == cls) out.push_back(e);
  }
  return out;
}

}  // namespace bspring

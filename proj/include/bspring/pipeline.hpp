#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bspring/baselines.hpp"
#include "bspring/fiducial.hpp"
#include "bspring/kernels.hpp"
#include "bspring/segmenter.hpp"
#include "bspring/signal.hpp"
#include "bspring/template.hpp"
#include "bspring/template_manager.hpp"

namespace bspring {

enum class Method { BoostedST, BoostedDT, Spring, Adaptive };

std::string to_string(Method m);
std::optional<Method> parse_method(const std::string& s);

struct FilterSettings {
  bool enabled = true;
  double low_hz = 0.5;
  double high_hz = 5.0;
  int order = 4;
};

struct PipelineConfig {
  Method method = Method::BoostedST;
  SegmenterParams params;
  double batch_seconds = 60.0;
  FrequencyBand band;
  FilterSettings filter;
  std::size_t k = 3;
  RegionConfig region;
  SpringConfig spring;
  ThresholdConfig threshold;
  ExecPolicy policy = ExecPolicy::Parallel;
};

void validate(const PipelineConfig& config);

struct RegionLog {
  std::size_t region_id = 0;
  int y_opt = 0;
  std::vector<RegionScore> scores;
  std::optional<int> added_id;
  std::optional<int> evicted_id;
  bool reanalyzed = false;
  double reanalysis_cost = 0.0;  // average path cost of the new template, when reanalyzed
  bool reanalysis_adopted = false;
};

struct PipelineResult {
  std::vector<FiducialEvent> events;
  std::vector<Segment> segments;
  std::vector<EndpointRecord> trace;
  std::vector<Template> templates;  // final ensemble (boosted methods)
  std::vector<double> cycle_lengths;  // l_x per batch
  std::vector<RegionLog> regions;
  std::vector<std::string> warnings;
  std::size_t resets = 0;
  std::optional<double> spring_epsilon;
};

SignalBatch preprocess(const SignalBatch& record, const FilterSettings& filter);

// Runs the configured method over a whole record. `prime` is required by the
// template-based methods.
PipelineResult run_pipeline(const SignalBatch& record, const std::optional<Template>& prime,
                            const PipelineConfig& config);

// A prime template cut from the preprocessed record between two annotated
// onsets (sample indices), each snapped to the nearest local minimum. The
// first cycle starting after skip_s seconds is used.
Template prime_from_onsets(const SignalBatch& filtered, std::span<const std::size_t> onsets,
                           double skip_s = 2.0);

// A prime template from the first plausible cycle found by the adaptive
// threshold detector after skip_s seconds.
Template prime_from_bootstrap(const SignalBatch& filtered, const ThresholdConfig& config = {},
                              double skip_s = 2.0);

void write_events_csv(const std::filesystem::path& path, std::span<const FiducialEvent> events);
void write_segments_csv(const std::filesystem::path& path, std::span<const Segment> segments);
void write_trace_csv(const std::filesystem::path& path, std::span<const EndpointRecord> trace);

}  // namespace bspring

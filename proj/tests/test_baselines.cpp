#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "bspring/baselines.hpp"
#include "bspring/dtw.hpp"
#include "bspring/evaluation.hpp"
#include "bspring/filter.hpp"
#include "bspring/pipeline.hpp"
#include "support.hpp"

using namespace bspring;

namespace {

const StreamClock kClock{300.0, 0.0};

std::vector<TimedEvent> truth_events(const SynthRecord& rec, double fs) {
  std::vector<TimedEvent> out;
  for (auto i : rec.truth.sys_idx) out.push_back({FiducialClass::Sys, static_cast<double>(i) / fs});
  for (auto i : rec.truth.ms_idx) out.push_back({FiducialClass::MS, static_cast<double>(i) / fs});
  for (auto i : rec.truth.onset_idx) out.push_back({FiducialClass::Onset, static_cast<double>(i) / fs});
  return out;
}

double sys_f1(std::span<const FiducialEvent> events, const SynthRecord& rec) {
  const auto pred = to_timed(events);
  const auto truth = truth_events(rec, rec.signal.fs);
  return evaluate(pred, truth).per_class.at(FiducialClass::Sys).scores.f1;
}

}  // namespace

TEST(SpringBaseline, EmbeddedTemplateIsFound) {
  const auto rec = testing_support::synth({72.0}, 20.0);
  const auto prime = prime_from_onsets(rec.signal, rec.truth.onset_idx);
  // Flat padding on both sides: only the embedded cycle resembles the template.
  std::vector<double> stream(400, prime.samples.front());
  const std::size_t at = stream.size();
  stream.insert(stream.end(), prime.samples.begin(), prime.samples.end());
  stream.insert(stream.end(), 400, prime.samples.back());
  const std::size_t m = prime.feature_length();

  const auto d = spring_distance_trace(comparison_features(stream), prime.features());
  const std::size_t end_feature = at + m - 1;
  for (std::size_t t = 0; t < d.size(); ++t) {
    if (t != end_feature) EXPECT_GT(d[t], d[end_feature]) << t;
  }
  SpringConfig cfg;
  cfg.epsilon = d[end_feature] * (1.0 + 1e-9);
  const auto res = springdtw_segment(make_batch(stream, 300.0), prime, cfg, kClock);
  ASSERT_EQ(res.segments.size(), 1u);
  EXPECT_EQ(res.segments[0].t_s, at);
  EXPECT_EQ(res.segments[0].t_e, at + m);
  EXPECT_EQ(events_of_class(res.events, FiducialClass::Sys).size(), 1u);
}

TEST(SpringBaseline, ZeroThresholdOnNoisyInputFindsNothing) {
  const auto rec = testing_support::synth({72.0}, 20.0, 0.02, 4);
  const auto filtered = bandpass_filter(rec.signal);
  SpringConfig cfg;
  cfg.epsilon = 0.0;
  const auto res = springdtw_segment(filtered, testing_support::prime_of(rec), cfg, kClock);
  EXPECT_TRUE(res.segments.empty());
  EXPECT_TRUE(res.events.empty());
}

TEST(SpringBaseline, InfiniteThresholdReportsEveryLocalMinimum) {
  const auto rec = testing_support::synth({72.0}, 10.0, 0.01, 5);
  const auto filtered = bandpass_filter(rec.signal);
  const auto prime = testing_support::prime_of(rec);
  SpringConfig cfg;
  cfg.epsilon = std::numeric_limits<double>::infinity();
  const auto res = springdtw_segment(filtered, prime, cfg, kClock);

  const auto d = spring_distance_trace(comparison_features(filtered.samples), prime.features());
  std::size_t minima = 0;
  for (std::size_t t = 1; t < d.size(); ++t) {
    const bool left = d[t] < d[t - 1];
    const bool right = t + 1 == d.size() || d[t] <= d[t + 1];
    if (left && right) ++minima;
  }
  EXPECT_GT(minima, 0u);
  EXPECT_EQ(res.segments.size(), minima);
}

TEST(SpringBaseline, MatchCountGrowsWithThreshold) {
  const auto rec = testing_support::synth({80.0}, 20.0, 0.02, 6);
  const auto filtered = bandpass_filter(rec.signal);
  const auto prime = testing_support::prime_of(rec);
  std::size_t prev = 0;
  for (double eps : {0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0}) {
    SpringConfig cfg;
    cfg.epsilon = eps;
    const auto n = springdtw_segment(filtered, prime, cfg, kClock).segments.size();
    EXPECT_GE(n, prev) << "epsilon " << eps;
    prev = n;
  }
}

TEST(SpringBaseline, CalibratedThresholdIsReported) {
  const std::vector<double> d{4, 2, 6, 8, 1, 3};
  EXPECT_DOUBLE_EQ(calibrate_epsilon(d, 2, 2), 0.5 * 5.0);
  const auto rec = testing_support::synth({72.0}, 30.0, 0.01, 7);
  const auto res = springdtw_segment(bandpass_filter(rec.signal), testing_support::prime_of(rec), SpringConfig{}, kClock);
  EXPECT_GT(res.epsilon, 0.0);
}

TEST(SpringBaseline, BoostedSegmenterRecallsMoreUnderDrift) {
  const auto rec = testing_support::synth({70.0, 85.0, 65.0}, 180.0, 0.01, 8, {0.1, 0.6}, 0.3);
  const auto filtered = bandpass_filter(rec.signal);
  const auto prime = prime_from_onsets(filtered, rec.truth.onset_idx);
  const auto spring = springdtw_segment(filtered, prime, SpringConfig{}, kClock);

  PipelineConfig cfg;
  cfg.method = Method::BoostedST;
  const auto boosted = run_pipeline(rec.signal, prime, cfg);

  const auto truth = truth_events(rec, rec.signal.fs);
  const auto r_spring = evaluate(to_timed(spring.events), truth).per_class.at(FiducialClass::Sys).scores.recall;
  const auto r_boosted = evaluate(to_timed(boosted.events), truth).per_class.at(FiducialClass::Sys).scores.recall;
  EXPECT_GT(r_boosted, r_spring);
}

TEST(AdaptiveThreshold, CleanSynthSystolicPeaks) {
  const auto rec = testing_support::synth({72.0}, 60.0);
  const auto filtered = bandpass_filter(rec.signal);
  const auto events = adaptive_threshold_detect(filtered, derive_views(filtered), filtered.fs, ThresholdConfig{}, kClock);
  EXPECT_GE(sys_f1(events, rec), 0.9);
  // Every accepted peak has its valley and steepest rise in order.
  const auto sys = events_of_class(events, FiducialClass::Sys);
  const auto ms = events_of_class(events, FiducialClass::MS);
  const auto on = events_of_class(events, FiducialClass::Onset);
  ASSERT_EQ(sys.size(), ms.size());
  ASSERT_EQ(sys.size(), on.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    EXPECT_LT(on[i].stream_idx, ms[i].stream_idx);
    EXPECT_LE(ms[i].stream_idx, sys[i].stream_idx);
  }
}

TEST(AdaptiveThreshold, HalvedAmplitudeBeatIsMissed) {
  const auto rec = testing_support::synth({72.0}, 30.0);
  auto signal = rec.signal;
  const std::size_t c = rec.truth.onset_idx.size() / 2;
  for (std::size_t i = rec.truth.onset_idx[c]; i < rec.truth.end_idx[c]; ++i) signal.samples[i] *= 0.5;
  const auto clean = adaptive_threshold_detect(rec.signal, derive_views(rec.signal), 300.0, ThresholdConfig{}, kClock);
  const auto dimmed = adaptive_threshold_detect(signal, derive_views(signal), 300.0, ThresholdConfig{}, kClock);
  const auto truth = truth_events(rec, 300.0);
  const auto recall = [&](std::span<const FiducialEvent> ev) {
    return evaluate(to_timed(ev), truth).per_class.at(FiducialClass::Sys).scores.recall;
  };
  EXPECT_LT(recall(dimmed), recall(clean));
}

TEST(AdaptiveThreshold, FlatSignalHasNoEvents) {
  const auto flat = make_batch(std::vector<double>(3000, 1.0), 300.0);
  EXPECT_TRUE(adaptive_threshold_detect(flat, derive_views(flat), 300.0, ThresholdConfig{}, kClock).empty());
}

TEST(Baselines, OutputFeedsTheSameEvaluation) {
  const auto rec = testing_support::synth({72.0}, 30.0, 0.01, 9);
  const auto filtered = bandpass_filter(rec.signal);
  const auto spring = springdtw_segment(filtered, testing_support::prime_of(rec), SpringConfig{}, kClock);
  const auto adaptive = adaptive_threshold_detect(filtered, derive_views(filtered), 300.0, ThresholdConfig{}, kClock);
  const auto truth = truth_events(rec, 300.0);
  for (const auto* events : {&spring.events, &adaptive}) {
    const auto report = evaluate(to_timed(*events), truth);
    for (auto cls : kScoredClasses) ASSERT_TRUE(report.per_class.count(cls));
  }
}

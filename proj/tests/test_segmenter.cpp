#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bspring/error.hpp"
#include "bspring/filter.hpp"
#include "bspring/kernels.hpp"
#include "bspring/segmenter.hpp"
#include "support.hpp"

using namespace bspring;

namespace {

SignalBatch sinusoid(double f, double fs, double seconds) {
  std::vector<double> v(static_cast<std::size_t>(fs * seconds));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  return make_batch(std::move(v), fs);
}

EndpointRecord record(std::size_t idx, double p_c, double d, double gamma = 5000.0) {
  EndpointRecord r;
  r.idx = idx;
  r.p_c = p_c;
  r.d = d;
  r.p_d = morphology_likelihood(d, gamma);
  r.p_e = endpoint_probability(p_c, r.p_d);
  return r;
}

std::size_t nearest_gap(std::size_t idx, const std::vector<std::size_t>& truth) {
  std::size_t best = SIZE_MAX;
  for (auto t : truth) best = std::min(best, t > idx ? t - idx : idx - t);
  return best;
}

}  // namespace

TEST(CycleLength, PureSinusoids) {
  EXPECT_NEAR(estimate_cycle_length(sinusoid(1.5, 300.0, 60.0)).l_x, 200.0, 1.0);
  EXPECT_NEAR(estimate_cycle_length(sinusoid(1.2, 300.0, 60.0)).l_x, 250.0, 1.0);
  const auto e = estimate_cycle_length(sinusoid(0.8, 300.0, 60.0));
  EXPECT_NEAR(e.l_x, 375.0, 1.0);
  EXPECT_NEAR(e.f_star * e.l_x, 300.0, 1e-9);
  EXPECT_DOUBLE_EQ(e.batch_span, 60.0);
}

TEST(CycleLength, SynthAtSixtyBpm) {
  const auto rec = testing_support::synth({60.0}, 60.0);
  EXPECT_NEAR(estimate_cycle_length(bandpass_filter(rec.signal)).l_x, 300.0, 3.0);
}

TEST(CycleLength, ShortBatchIsInsufficient) {
  EXPECT_THROW(estimate_cycle_length(sinusoid(1.0, 300.0, 3.0)), InsufficientDataError);
}

TEST(CycleLength, NoInBandPeak) {
  EXPECT_THROW(estimate_cycle_length(make_batch(std::vector<double>(6000, 1.0), 300.0)), NoDominantFrequencyError);
  EXPECT_THROW(estimate_cycle_length(sinusoid(10.0, 300.0, 30.0)), NoDominantFrequencyError);
}

TEST(CycleLength, BandMustFitBelowNyquist) {
  EXPECT_THROW(estimate_cycle_length(sinusoid(1.0, 4.0, 60.0), FrequencyBand{0.5, 3.0}), ConfigError);
}

TEST(LocalMinima, Examples) {
  EXPECT_TRUE(local_minima(std::vector<double>{1, 2, 3, 4}).empty());
  EXPECT_EQ(local_minima(std::vector<double>{3, 1, 4}), (std::vector<std::size_t>{1}));
  EXPECT_EQ(local_minima(std::vector<double>{3, 1, 1, 1, 4}), (std::vector<std::size_t>{3}));
  EXPECT_TRUE(local_minima(std::vector<double>{3, 1, 1}).empty());
}

TEST(Candidates, VShape) {
  const auto b = make_batch({3, 1, 4}, 1.0);
  const auto c = detect_candidates(b, derive_views(b));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].idx, 1u);
  EXPECT_DOUBLE_EQ(c[0].p_c, 1.0);
}

TEST(Candidates, RampHasNone) {
  const auto b = make_batch({1, 2, 4, 7, 11}, 1.0);
  EXPECT_TRUE(detect_candidates(b, derive_views(b)).empty());
}

TEST(Candidates, ConstantBatchRejected) {
  const auto b = make_batch(std::vector<double>(50, 2.0), 1.0);
  EXPECT_THROW(detect_candidates(b, derive_views(b)), DegenerateBatchError);
  EXPECT_THROW(prepare_batch(b), DegenerateBatchError);
}

TEST(Candidates, CoverTrueOnsetsOnCleanSynth) {
  const auto rec = testing_support::synth({72.0}, 30.0);
  const auto c = detect_candidates(rec.signal, derive_views(rec.signal));
  std::vector<std::size_t> idx;
  for (const auto& e : c) {
    idx.push_back(e.idx);
    EXPECT_GE(e.p_c, 0.0);
    EXPECT_LE(e.p_c, 1.0);
  }
  for (auto onset : rec.truth.onset_idx) EXPECT_LE(nearest_gap(onset, idx), 2u) << "onset " << onset;
}

TEST(Likelihoods, Heuristic) {
  EXPECT_DOUBLE_EQ(heuristic_likelihood(3.0, 1.0, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(heuristic_likelihood(1.0, 1.0, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(heuristic_likelihood(2.0, 1.0, 3.0), 0.5);
  EXPECT_THROW(heuristic_likelihood(1.0, 2.0, 2.0), DegenerateBatchError);
}

TEST(Likelihoods, Morphology) {
  EXPECT_DOUBLE_EQ(morphology_likelihood(0.0, 5000.0), 1.0);
  EXPECT_NEAR(morphology_likelihood(std::log(2.0) / 5000.0, 5000.0), 0.5, 1e-12);
  EXPECT_NEAR(morphology_likelihood(0.001, 5000.0), 0.006737947, 1e-9);
}

TEST(Likelihoods, EndpointProduct) {
  EXPECT_DOUBLE_EQ(endpoint_probability(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(endpoint_probability(0.8, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(endpoint_probability(0.8, 0.5), 0.4);
}

TEST(Params, Validation) {
  EXPECT_NO_THROW(validate(SegmenterParams{}));
  EXPECT_THROW(validate(SegmenterParams{1.0, 1.3, 5000}), ConfigError);
  EXPECT_THROW(validate(SegmenterParams{0.7, 0.9, 5000}), ConfigError);
  EXPECT_THROW(validate(SegmenterParams{0.7, 1.3, 0}), ConfigError);
}

TEST(Search, PicksTheLargerScoreInTheWindow) {
  const std::vector<EndpointRecord> recs{record(0, 1.0, 0.0), record(90, 0.9, 0.0), record(110, 0.4, 0.0)};
  const auto out = search_endpoints(recs, 100.0, SegmenterParams{}, 1000, true);
  ASSERT_EQ(out.choices.size(), 1u);
  EXPECT_EQ(out.choices[0].end, 1u);
}

TEST(Search, NotchInsideAlphaIsNeverAnEndpoint) {
  // Onsets every 100 samples; a weaker notch minimum at +40 in each cycle.
  std::vector<EndpointRecord> recs;
  for (std::size_t k = 0; k < 10; ++k) {
    recs.push_back(record(100 * k, 1.0, 0.0));
    recs.push_back(record(100 * k + 40, 0.3, 0.0));
  }
  const auto out = search_endpoints(recs, 100.0, SegmenterParams{}, 1000, true);
  ASSERT_EQ(out.choices.size(), 9u);
  for (const auto& c : out.choices) {
    EXPECT_EQ(recs[c.end].idx % 100, 0u);
    EXPECT_EQ(recs[c.start].idx % 100, 0u);
  }
}

TEST(Search, EmptyWindowResetsPastIt) {
  const std::vector<EndpointRecord> recs{record(0, 1.0, 0.0), record(200, 1.0, 0.0), record(300, 1.0, 0.0)};
  const auto out = search_endpoints(recs, 100.0, SegmenterParams{}, 1000, true);
  EXPECT_EQ(out.resets, 1u);
  ASSERT_EQ(out.choices.size(), 1u);
  EXPECT_EQ(out.choices[0].start, 1u);
  EXPECT_TRUE(out.choices[0].after_reset);
}

TEST(Search, ExactTieGoesToTheEarlierCandidate) {
  const std::vector<EndpointRecord> recs{record(0, 1.0, 0.0), record(95, 0.5, 0.0), record(105, 0.5, 0.0)};
  const auto out = search_endpoints(recs, 100.0, SegmenterParams{}, 1000, true);
  ASSERT_EQ(out.choices.size(), 1u);
  EXPECT_EQ(out.choices[0].end, 1u);
}

TEST(Search, OpenWindowIsHandedBackUnlessFinal) {
  const std::vector<EndpointRecord> recs{record(0, 1.0, 0.0), record(100, 1.0, 0.0), record(190, 1.0, 0.0)};
  const auto open = search_endpoints(recs, 100.0, SegmenterParams{}, 200, false);
  EXPECT_EQ(open.choices.size(), 1u);
  ASSERT_TRUE(open.open_anchor);
  EXPECT_EQ(*open.open_anchor, 1u);
  const auto closed = search_endpoints(recs, 100.0, SegmenterParams{}, 200, true);
  EXPECT_EQ(closed.choices.size(), 2u);
  EXPECT_FALSE(closed.open_anchor);
}

TEST(Search, ArgmaxInvariantUnderDistanceRescaling) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pc(0.05, 1.0), dd(0.0, 0.002);
  std::uniform_int_distribution<std::size_t> gap(20, 60);
  std::vector<EndpointRecord> recs;
  std::size_t idx = 0;
  for (int k = 0; k < 60; ++k) {
    recs.push_back(record(idx, pc(rng), dd(rng)));
    idx += gap(rng);
  }
  SegmenterParams p;
  const auto base = search_endpoints(recs, 100.0, p, idx, true);
  auto scaled = recs;
  for (auto& r : scaled) r = record(r.idx, r.p_c, r.d * 2.0, p.gamma / 2.0);
  SegmenterParams q = p;
  q.gamma = p.gamma / 2.0;
  const auto other = search_endpoints(scaled, 100.0, q, idx, true);
  ASSERT_EQ(base.choices.size(), other.choices.size());
  for (std::size_t i = 0; i < base.choices.size(); ++i) EXPECT_EQ(base.choices[i].end, other.choices[i].end);
}

class CleanSynthSegmentation : public ::testing::TestWithParam<double> {};

TEST_P(CleanSynthSegmentation, EndpointsAreTheTrueOnsets) {
  const double hr = GetParam();
  const auto rec = testing_support::synth({hr}, 60.0);
  // Unfiltered: the band-pass moves the minima of a noise-free pulse by a few samples.
  const auto& filtered = rec.signal;
  const auto prime = prime_from_onsets(filtered, rec.truth.onset_idx);
  const auto views = derive_views(filtered);
  const double l_x = estimate_cycle_length(filtered).l_x;
  SegmenterParams params;
  const auto res = segment_stream(filtered, views, prime, l_x, params);
  auto boundaries = rec.truth.onset_idx;
  boundaries.push_back(rec.truth.end_idx.back());

  const double expected = 60.0 * hr / 60.0 - 1.0;
  EXPECT_NEAR(static_cast<double>(res.segments.size()), expected, 1.0 + hr / 60.0);
  for (std::size_t k = 0; k < res.segments.size(); ++k) {
    const auto& s = res.segments[k];
    EXPECT_LE(nearest_gap(s.t_s, boundaries), 3u) << "segment " << k;
    EXPECT_LE(nearest_gap(s.t_e, boundaries), 3u) << "segment " << k;
    const double len = static_cast<double>(s.t_e - s.t_s);
    EXPECT_GE(len, params.alpha * l_x);
    EXPECT_LE(len, params.beta * l_x);
    if (k > 0 && !s.after_reset) EXPECT_EQ(res.segments[k - 1].t_e, s.t_s);
    EXPECT_EQ(s.path.pairs.front().first, s.t_s);
    EXPECT_EQ(s.path.pairs.back().first, s.t_e - 1);
  }
  for (const auto& r : res.trace.records) {
    EXPECT_EQ(r.p_e, r.p_c * r.p_d);
    EXPECT_GE(r.p_d, 0.0);
    EXPECT_LE(r.p_d, 1.0);
  }
  EXPECT_EQ(res.trace.distance.size(), filtered.size() - 1);
}

INSTANTIATE_TEST_SUITE_P(HeartRates, CleanSynthSegmentation, ::testing::Values(50.0, 72.0, 100.0));

TEST(Segmentation, SeventyTwoBpmMinuteGivesSeventyOneSegments) {
  const auto rec = testing_support::synth({72.0}, 60.0);
  const auto filtered = bandpass_filter(rec.signal);
  const auto res = segment_stream(filtered, derive_views(filtered), testing_support::prime_of(rec),
                                  estimate_cycle_length(filtered).l_x, SegmenterParams{});
  EXPECT_NEAR(static_cast<double>(res.segments.size()), 71.0, 1.0);
}

TEST(Segmentation, PreparedAndDirectPathsAgree) {
  const auto rec = testing_support::synth({80.0}, 30.0, 0.02, 5);
  const auto filtered = bandpass_filter(rec.signal);
  const auto prime = testing_support::prime_of(rec);
  const double l_x = estimate_cycle_length(filtered).l_x;
  const auto a = segment_stream(filtered, derive_views(filtered), prime, l_x, SegmenterParams{});
  const auto prep = prepare_batch(filtered);
  const auto b = segment_prepared(prep, prime, spring_distance_trace(prep.features, prime.features()), l_x,
                                  SegmenterParams{});
  ASSERT_EQ(a.segments.size(), b.segments.size());
  for (std::size_t k = 0; k < a.segments.size(); ++k) {
    EXPECT_EQ(a.segments[k].t_s, b.segments[k].t_s);
    EXPECT_EQ(a.segments[k].t_e, b.segments[k].t_e);
  }
  EXPECT_GT(average_path_cost(a.segments), 0.0);
  EXPECT_EQ(average_path_cost(std::vector<Segment>{}), kUnreachable);
}

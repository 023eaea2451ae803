#include "bspring/segmenter.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "bspring/error.hpp"
#include "bspring/kernels.hpp"

namespace bspring {

namespace {

// RAII holder for an FFTW r2c transform of a fixed size.
class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    // Planner calls are not thread-safe in FFTW3.
#pragma omp critical(bspring_fftw_plan)
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
#pragma omp critical(bspring_fftw_plan)
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<double> input() { return {in_, n_}; }
  std::vector<double> magnitude() {
    fftw_execute(plan_);
    std::vector<double> mag(n_ / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(out_[k][0], out_[k][1]);
    return mag;
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

double log_score(double p_c, double d, double gamma) {
  if (!(p_c > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(p_c) - gamma * d;
}

}  // namespace

CycleLengthEstimate estimate_cycle_length(std::span<const double> samples, double fs, FrequencyBand band) {
  if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");
  if (!(band.low_hz > 0.0) || !(band.low_hz < band.high_hz) || !(band.high_hz < fs / 2.0)) {
    throw ConfigError("dominant-frequency band must satisfy 0 < low < high < fs/2");
  }
  const double span_s = static_cast<double>(samples.size()) / fs;
  if (span_s < 2.0 / band.low_hz) {
    throw InsufficientDataError("batch of " + std::to_string(span_s) + " s holds fewer than two cycles at " +
                                std::to_string(band.low_hz) + " Hz");
  }

  const std::size_t n = samples.size();
  const std::size_t nfft = 4 * n;
  RealFft fft(nfft);
  auto in = fft.input();
  std::fill(in.begin(), in.end(), 0.0);
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    in[i] = w * (samples[i] - mean);
  }
  const auto mag = fft.magnitude();

  const double df = fs / static_cast<double>(nfft);
  const auto k_lo = static_cast<std::size_t>(std::ceil(band.low_hz / df));
  const auto k_hi = std::min(mag.size() - 2, static_cast<std::size_t>(std::floor(band.high_hz / df)));
  if (k_lo < 1 || k_lo > k_hi) throw NoDominantFrequencyError("frequency band has no FFT bins");

  std::size_t k_best = k_lo;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    if (mag[k] > mag[k_best]) k_best = k;
  }
  std::vector<double> in_band(mag.begin() + static_cast<std::ptrdiff_t>(k_lo),
                              mag.begin() + static_cast<std::ptrdiff_t>(k_hi) + 1);
  std::nth_element(in_band.begin(), in_band.begin() + static_cast<std::ptrdiff_t>(in_band.size() / 2), in_band.end());
  const double median = in_band[in_band.size() / 2];
  // A maximum sitting on a band edge is leakage from outside the band.
  const bool interior = mag[k_best] >= mag[k_best - 1] && mag[k_best] >= mag[k_best + 1];
  if (!(mag[k_best] > 0.0) || mag[k_best] < 3.0 * median || !interior) {
    throw NoDominantFrequencyError("no spectral peak above the noise floor in [" + std::to_string(band.low_hz) +
                                   ", " + std::to_string(band.high_hz) + "] Hz");
  }

  double offset = 0.0;
  const double a = mag[k_best - 1], b = mag[k_best], c = mag[k_best + 1];
  const double denom = a - 2.0 * b + c;
  if (denom < 0.0) offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  const double f_star = (static_cast<double>(k_best) + offset) * df;
  return CycleLengthEstimate{fs / f_star, f_star, span_s};
}

CycleLengthEstimate estimate_cycle_length(const SignalBatch& batch, FrequencyBand band) {
  return estimate_cycle_length(batch.samples, batch.fs, band);
}

std::vector<std::size_t> local_minima(std::span<const double> x) {
  std::vector<std::size_t> out;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i] < x[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && x[j + 1] == x[i]) ++j;
      if (j + 1 < n && x[j + 1] > x[j]) out.push_back(j);
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<CandidateEndpoint> detect_candidates(const SignalBatch& batch, const DerivedViews& views) {
  if (views.degenerate) throw DegenerateBatchError("constant derivative: no candidate endpoints");
  const auto& ds = views.deriv_scaled;
  const auto [lo, hi] = std::minmax_element(ds.begin(), ds.end());
  std::vector<CandidateEndpoint> out;
  std::size_t j = 1;
  for (std::size_t idx : local_minima(batch.samples)) {
    j = std::max(j, std::max<std::size_t>(idx, 1));
    // The last derivative sample counts as a peak when it is still rising.
    while (j < ds.size() && !(ds[j] > ds[j - 1] && (j + 1 == ds.size() || ds[j] >= ds[j + 1]))) ++j;
    if (j >= ds.size()) break;
    CandidateEndpoint c;
    c.idx = batch.start_index + idx;
    c.g_t = ds[j];
    c.p_c = heuristic_likelihood(c.g_t, *lo, *hi);
    out.push_back(c);
  }
  return out;
}

double heuristic_likelihood(double g_t, double batch_min, double batch_max) {
  if (!(batch_max > batch_min)) throw DegenerateBatchError("heuristic likelihood: max == min");
  return std::clamp((g_t - batch_min) / (batch_max - batch_min), 0.0, 1.0);
}

double morphology_likelihood(double d, double gamma) { return std::exp(-gamma * d); }

double endpoint_probability(double p_c, double p_d) { return p_c * p_d; }

void validate(const SegmenterParams& p) {
  if (!(p.alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(p.alpha < 1.0)) throw ConfigError("alpha must be < 1 (got " + std::to_string(p.alpha) + ")");
  if (!(p.alpha < p.beta)) throw ConfigError("alpha must be < beta");
  if (!(p.beta > 1.0)) throw ConfigError("beta must be > 1 (got " + std::to_string(p.beta) + ")");
  if (!(p.gamma > 0.0)) throw ConfigError("gamma must be positive");
}

SearchOutcome search_endpoints(std::span<const EndpointRecord> recs, double l_x, const SegmenterParams& params,
                               std::size_t last_index, bool final_batch) {
  SearchOutcome out;
  const std::size_t r = recs.size();
  if (r == 0) return out;
  const double lo_off = params.alpha * l_x;
  const double hi_off = params.beta * l_x;

  std::size_t anchor = 0;
  bool confirmed = false;
  bool after_reset = false;
  while (true) {
    const double a = static_cast<double>(recs[anchor].idx);
    if (!confirmed) {
      std::size_t moved = anchor;
      for (std::size_t j = anchor + 1; j < r && static_cast<double>(recs[j].idx) < a + lo_off; ++j) {
        if (recs[j].p_c >= recs[anchor].p_c) {
          moved = j;
          break;
        }
      }
      if (moved != anchor) {
        anchor = moved;
        continue;
      }
    }
    const double lo = a + lo_off;
    const double hi = a + hi_off;
    if (hi > static_cast<double>(last_index) && !final_batch) {
      out.open_anchor = anchor;
      break;
    }
    std::optional<std::size_t> best;
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t j = anchor + 1;
    for (; j < r && static_cast<double>(recs[j].idx) <= hi; ++j) {
      if (static_cast<double>(recs[j].idx) < lo) continue;
      const double s = log_score(recs[j].p_c, recs[j].d, params.gamma);
      if (!best || s > best_score) {
        best = j;
        best_score = s;
      }
    }
    if (best) {
      out.choices.push_back({anchor, *best, after_reset});
      anchor = *best;
      confirmed = true;
      after_reset = false;
      continue;
    }
    // Empty window: restart at the first candidate past it.
    if (j >= r) break;
    anchor = j;
    confirmed = false;
    after_reset = true;
    ++out.resets;
  }
  return out;
}

PreparedBatch prepare_batch(SignalBatch batch) {
  PreparedBatch p;
  p.views = derive_views(batch);
  if (p.views.degenerate) {
    throw DegenerateBatchError("batch at " + std::to_string(batch.t0) + " s is constant; skipping");
  }
  p.features = comparison_features(batch.samples);
  p.candidates = detect_candidates(batch, p.views);
  p.batch = std::move(batch);
  return p;
}

SegmentationResult segment_prepared(const PreparedBatch& prepared, const Template& templ,
                                    std::span<const double> distance, double l_x,
                                    const SegmenterParams& params, bool final_batch) {
  validate(params);
  if (!(l_x > 0.0)) throw ConfigError("cycle length must be positive");
  const auto& batch = prepared.batch;
  const std::size_t origin = batch.start_index;

  SegmentationResult res;
  res.trace.distance_start = origin;
  res.trace.distance.assign(distance.begin(), distance.end());
  res.trace.records.reserve(prepared.candidates.size());
  for (const auto& c : prepared.candidates) {
    EndpointRecord rec;
    rec.idx = c.idx;
    const std::size_t local = c.idx - origin;
    // The subsequence ending at sample idx has consumed feature idx - 1.
    rec.d = local >= 1 && local - 1 < distance.size() ? distance[local - 1] : kUnreachable;
    rec.p_c = c.p_c;
    rec.p_d = morphology_likelihood(rec.d, params.gamma);
    rec.p_e = endpoint_probability(rec.p_c, rec.p_d);
    res.trace.records.push_back(rec);
  }

  const auto outcome = search_endpoints(res.trace.records, l_x, params, batch.end_index() - 1, final_batch);
  res.resets = outcome.resets;
  if (outcome.open_anchor) res.open_anchor = res.trace.records[*outcome.open_anchor].idx;

  const auto tf = templ.features();
  for (const auto& choice : outcome.choices) {
    const auto& end = res.trace.records[choice.end];
    Segment seg;
    seg.t_s = res.trace.records[choice.start].idx;
    seg.t_e = end.idx;
    seg.template_id = templ.id;
    seg.p_e_at_end = end.p_e;
    seg.after_reset = choice.after_reset;
    const auto first = static_cast<std::ptrdiff_t>(seg.t_s - origin);
    const auto last = static_cast<std::ptrdiff_t>(seg.t_e - origin);
    std::span<const double> stream(prepared.features.data() + first, static_cast<std::size_t>(last - first));
    const auto mat = dtw_full(stream, tf, admissible_band(stream.size(), tf.size()));
    seg.path = traceback(mat, stream.size() - 1);
    for (auto& pr : seg.path.pairs) pr.first += seg.t_s;
    res.segments.push_back(std::move(seg));
  }
  return res;
}

SegmentationResult segment_stream(const SignalBatch& batch, const DerivedViews& views, const Template& templ,
                                  double l_x, const SegmenterParams& params, bool final_batch) {
  if (views.degenerate) throw DegenerateBatchError("constant derivative: batch rejected");
  PreparedBatch p;
  p.batch = batch;
  p.views = views;
  p.features = comparison_features(batch.samples);
  p.candidates = detect_candidates(batch, views);
  const auto dist = spring_distance_trace(p.features, templ.features());
  return segment_prepared(p, templ, dist, l_x, params, final_batch);
}

double average_path_cost(std::span<const Segment> segments) {
  if (segments.empty()) return kUnreachable;
  double sum = 0.0;
  for (const auto& s : segments) sum += s.path.cost;
  return sum / static_cast<double>(segments.size());
}

}  // namespace bspring

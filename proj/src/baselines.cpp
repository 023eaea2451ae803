#include "bspring/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "bspring/error.hpp"

namespace bspring {

double calibrate_epsilon(std::span<const double> distance, std::size_t m, std::size_t warmup_cycles) {
  const std::size_t n = std::min(distance.size(), std::max<std::size_t>(1, warmup_cycles * m));
  std::vector<double> warm;
  warm.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(distance[i])) warm.push_back(distance[i]);
  }
  if (warm.empty()) return 0.0;
  const auto mid = warm.begin() + static_cast<std::ptrdiff_t>(warm.size() / 2);
  std::nth_element(warm.begin(), mid, warm.end());
  double median = *mid;
  if (warm.size() % 2 == 0) median = 0.5 * (median + *std::max_element(warm.begin(), mid));
  return 0.5 * median;
}

SpringResult springdtw_segment(const SignalBatch& batch, const Template& templ, const SpringConfig& config,
                               const StreamClock& clock) {
  SpringResult out;
  const auto stream = comparison_features(batch.samples);
  const auto tf = templ.features();
  if (stream.empty() || tf.empty()) return out;

  std::vector<double> dist(stream.size());
  std::vector<std::size_t> starts(stream.size());
  SpringState state(tf.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    state.update(stream[t], tf);
    dist[t] = state.distance();
    starts[t] = state.match_start();
  }
  out.epsilon = config.epsilon ? *config.epsilon : calibrate_epsilon(dist, tf.size(), config.warmup_cycles);
  if (out.epsilon < 0.0) throw ConfigError("spring epsilon must be non-negative");

  const std::size_t n = dist.size();
  for (std::size_t t = 0; t < n; ++t) {
    if (!(dist[t] <= out.epsilon)) continue;
    const bool left = t == 0 || dist[t] < dist[t - 1];
    const bool right = t + 1 == n || dist[t] <= dist[t + 1];
    if (!left || !right) continue;
    Segment seg;
    seg.t_s = batch.start_index + starts[t];
    seg.t_e = batch.start_index + t + 1;
    seg.template_id = templ.id;
    std::span<const double> sub(stream.data() + starts[t], t + 1 - starts[t]);
    const auto mat = dtw_full(sub, tf, admissible_band(sub.size(), tf.size()));
    seg.path = traceback(mat, sub.size() - 1);
    for (auto& pr : seg.path.pairs) pr.first += seg.t_s;
    out.segments.push_back(std::move(seg));
  }

  std::vector<Template> one{templ};
  out.events = annotate_stream(out.segments, one, clock).events;
  // Overlapping matches can repeat an index; keep one event per (class, index).
  std::sort(out.events.begin(), out.events.end(), [](const FiducialEvent& a, const FiducialEvent& b) {
    return a.stream_idx != b.stream_idx ? a.stream_idx < b.stream_idx : a.cls < b.cls;
  });
  out.events.erase(std::unique(out.events.begin(), out.events.end(),
                               [](const FiducialEvent& a, const FiducialEvent& b) {
                                 return a.stream_idx == b.stream_idx && a.cls == b.cls;
                               }),
                   out.events.end());
  return out;
}

std::vector<FiducialEvent> adaptive_threshold_detect(const SignalBatch& batch, const DerivedViews& views,
                                                     double fs, const ThresholdConfig& cfg,
                                                     const StreamClock& clock) {
  if (!(cfg.peak_fraction > 0.0 && cfg.peak_fraction < 1.0)) throw ConfigError("peak_fraction must be in (0, 1)");
  if (!(cfg.refractory_fraction > 0.0 && cfg.refractory_fraction < 1.0)) {
    throw ConfigError("refractory_fraction must be in (0, 1)");
  }
  if (cfg.slope_window == 0) throw ConfigError("slope_window must be positive");
  std::vector<FiducialEvent> events;
  const auto& x = batch.samples;
  if (views.degenerate || x.size() < 3) return events;

  double cycle = 0.8 * fs;
  try {
    cycle = estimate_cycle_length(batch).l_x;
  } catch (const Error&) {
    // keep the 75 bpm prior
  }

  const std::size_t init_span = std::min(x.size(), static_cast<std::size_t>(3.0 * cycle));
  const double init_max = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(init_span));
  if (!(init_max > 0.0)) return events;

  std::vector<std::size_t> peaks;
  double last_height = init_max;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (!(x[i] > x[i - 1] && x[i] >= x[i + 1])) continue;
    if (!peaks.empty()) {
      const double since = static_cast<double>(i - peaks.back());
      if (since < cfg.refractory_fraction * cycle) {
        // A taller peak inside the refractory period replaces the last one.
        if (x[i] > x[peaks.back()]) {
          peaks.back() = i;
          last_height = x[i];
        }
        continue;
      }
    }
    double thr = cfg.peak_fraction * last_height;
    if (!peaks.empty()) {
      const double since = static_cast<double>(i - peaks.back());
      thr *= std::exp(-since / (cfg.decay_cycles * cycle));
    }
    if (!(x[i] > thr)) continue;
    if (!peaks.empty()) {
      const double ibi = static_cast<double>(i - peaks.back());
      if (ibi > 0.5 * cycle && ibi < 1.5 * cycle) cycle = 0.8 * cycle + 0.2 * ibi;
    }
    peaks.push_back(i);
    last_height = x[i];
  }

  std::size_t prev = 0;
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    const std::size_t sys = peaks[k];
    const std::size_t lo = std::max(prev, sys > cfg.slope_window ? sys - cfg.slope_window : 0);
    prev = sys;
    if (lo >= sys) continue;
    const auto valley = static_cast<std::size_t>(
        std::min_element(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(sys)) -
        x.begin());
    std::size_t ms = valley;
    for (std::size_t i = valley; i < sys && i < views.deriv.size(); ++i) {
      if (views.deriv[i] > views.deriv[ms]) ms = i;
    }
    const std::size_t g = batch.start_index;
    events.push_back({FiducialClass::Onset, g + valley, clock.time_of(g + valley), k});
    events.push_back({FiducialClass::MS, g + ms, clock.time_of(g + ms), k});
    events.push_back({FiducialClass::Sys, g + sys, clock.time_of(g + sys), k});
  }
  return events;
}

}  // namespace bspring

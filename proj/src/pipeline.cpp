#include "bspring/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bspring/error.hpp"
#include "bspring/filter.hpp"

namespace bspring {

std::string to_string(Method m) {
  switch (m) {
    case Method::BoostedST: return "boosted-st";
    case Method::BoostedDT: return "boosted-dt";
    case Method::Spring: return "spring";
    case Method::Adaptive: return "adaptive";
  }
  return "boosted-st";
}

std::optional<Method> parse_method(const std::string& s) {
  for (auto m : {Method::BoostedST, Method::BoostedDT, Method::Spring, Method::Adaptive}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

void validate(const PipelineConfig& c) {
  validate(c.params);
  if (!(c.batch_seconds > 0.0)) throw ConfigError("batch_seconds must be positive");
  if (!(c.band.low_hz > 0.0 && c.band.low_hz < c.band.high_hz)) {
    throw ConfigError("frequency band needs 0 < low_hz < high_hz");
  }
  if (c.k < 1) throw ConfigError("ensemble size k must be at least 1");
  if (!(c.region.u_seconds > 0.0)) throw ConfigError("region length u must be positive");
  if (c.region.dba_iterations < 1) throw ConfigError("DBA iteration cap e must be at least 1");
  if (c.filter.enabled && (c.filter.order < 2 || c.filter.order % 2 != 0)) {
    throw ConfigError("filter order must be even and at least 2");
  }
  if (c.spring.epsilon && *c.spring.epsilon < 0.0) throw ConfigError("spring epsilon must be non-negative");
}

SignalBatch preprocess(const SignalBatch& record, const FilterSettings& filter) {
  if (!filter.enabled) return record;
  return bandpass_filter(record, filter.low_hz, filter.high_hz, filter.order);
}

namespace {

StreamClock clock_of(const SignalBatch& s) {
  return {s.fs, s.t0 - static_cast<double>(s.start_index) / s.fs};
}

// One template's pass over a run of consecutive batches.
struct RegionRun {
  std::vector<Segment> segments;
  std::vector<EndpointRecord> trace;
  std::vector<double> cycle_lengths;
  std::vector<std::string> warnings;
  std::size_t resets = 0;
  std::size_t next_cursor = 0;
  std::optional<std::size_t> next_resume;
  bool finished = false;
  double avg_cost = kUnreachable;
};

struct Cursor {
  std::size_t pos = 0;
  std::optional<std::size_t> resume;  // the next segment must start here
  double last_lx = 0.0;
};

RegionRun analyze_region(const SignalBatch& filtered, const Template& templ, Cursor cur, std::size_t n_batches,
                         const PipelineConfig& cfg) {
  RegionRun run;
  const std::size_t rec_end = filtered.end_index();
  const auto batch_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.batch_seconds * filtered.fs)));
  const auto tf = templ.features();
  if (cur.last_lx <= 0.0) cur.last_lx = static_cast<double>(templ.feature_length());

  for (std::size_t b = 0; b < n_batches; ++b) {
    if (cur.pos >= rec_end) {
      run.finished = true;
      break;
    }
    std::size_t end = std::min(rec_end, cur.pos + batch_len);
    if (rec_end - end < batch_len / 2) end = rec_end;
    const bool final_batch = end == rec_end;

    PreparedBatch prep;
    try {
      prep = prepare_batch(slice(filtered, cur.pos, end));
    } catch (const Error& e) {
      run.warnings.push_back("batch at sample " + std::to_string(cur.pos) + " skipped: " + e.what());
      cur.pos = end;
      cur.resume.reset();
      if (final_batch) run.finished = true;
      continue;
    }

    double l_x = cur.last_lx;
    try {
      l_x = estimate_cycle_length(prep.batch, cfg.band).l_x;
    } catch (const Error& e) {
      run.warnings.push_back("batch at sample " + std::to_string(cur.pos) + ": keeping cycle length " +
                             std::to_string(l_x) + " (" + e.what() + ")");
    }
    run.cycle_lengths.push_back(l_x);
    cur.last_lx = l_x;

    if (cur.resume) {
      const auto first = *cur.resume;
      std::erase_if(prep.candidates, [first](const CandidateEndpoint& c) { return c.idx < first; });
    }
    const auto dist = spring_distance_trace(prep.features, tf);
    auto res = segment_prepared(prep, templ, dist, l_x, cfg.params, final_batch);
    run.resets += res.resets;

    const std::size_t trace_from = run.trace.empty() ? 0 : run.trace.back().idx + 1;
    for (const auto& r : res.trace.records) {
      if (r.idx >= trace_from) run.trace.push_back(r);
    }
    const std::size_t seg_from = run.segments.empty() ? 0 : run.segments.back().t_e;
    for (auto& s : res.segments) {
      if (s.t_s >= seg_from) run.segments.push_back(std::move(s));
    }

    if (final_batch) {
      run.finished = true;
      cur.pos = rec_end;
      break;
    }
    std::optional<std::size_t> resume = res.open_anchor;
    if (!resume && !run.segments.empty()) resume = run.segments.back().t_e;
    const auto pad = static_cast<std::size_t>(std::ceil(0.1 * l_x)) + 1;
    if (resume && *resume > cur.pos + batch_len / 4 + pad) {
      cur.pos = *resume - pad;
      cur.resume = resume;
    } else {
      // Nothing to chain from: restart a little before the seam.
      const auto back = static_cast<std::size_t>(std::ceil(cfg.params.beta * l_x));
      cur.pos = end > cur.pos + back ? end - back : end;
      cur.resume.reset();
    }
  }
  run.next_cursor = cur.pos;
  run.next_resume = cur.resume;
  run.avg_cost = average_path_cost(run.segments);
  return run;
}

std::vector<std::vector<double>> cycles_of(const SignalBatch& filtered, std::span<const Segment> segments) {
  std::vector<std::vector<double>> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    const auto a = filtered.samples.begin() + static_cast<std::ptrdiff_t>(s.t_s - filtered.start_index);
    const auto b = filtered.samples.begin() + static_cast<std::ptrdiff_t>(s.t_e - filtered.start_index) + 1;
    out.emplace_back(a, b);
  }
  return out;
}

void adopt(PipelineResult& out, RegionRun& run, std::span<const Template> templates, const StreamClock& clock) {
  const auto annotated = annotate_stream(run.segments, templates, clock, out.segments.size());
  out.events.insert(out.events.end(), annotated.events.begin(), annotated.events.end());
  out.warnings.insert(out.warnings.end(), annotated.messages.begin(), annotated.messages.end());
  out.warnings.insert(out.warnings.end(), run.warnings.begin(), run.warnings.end());
  const std::size_t trace_from = out.trace.empty() ? 0 : out.trace.back().idx + 1;
  for (const auto& r : run.trace) {
    if (r.idx >= trace_from) out.trace.push_back(r);
  }
  out.cycle_lengths.insert(out.cycle_lengths.end(), run.cycle_lengths.begin(), run.cycle_lengths.end());
  out.resets += run.resets;
  for (auto& s : run.segments) out.segments.push_back(std::move(s));
}

void finalize_events(std::vector<FiducialEvent>& events) {
  std::stable_sort(events.begin(), events.end(), [](const FiducialEvent& a, const FiducialEvent& b) {
    return a.stream_idx != b.stream_idx ? a.stream_idx < b.stream_idx : a.cls < b.cls;
  });
  events.erase(std::unique(events.begin(), events.end(),
                           [](const FiducialEvent& a, const FiducialEvent& b) {
                             return a.stream_idx == b.stream_idx && a.cls == b.cls;
                           }),
               events.end());
}

PipelineResult run_boosted(const SignalBatch& filtered, const Template& prime, const PipelineConfig& cfg) {
  PipelineResult out;
  const auto clock = clock_of(filtered);
  const std::size_t k = cfg.method == Method::BoostedST ? 1 : cfg.k;
  Ensemble ens = Ensemble::with_prime(prime, k);
  const auto region_batches =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.region.u_seconds / cfg.batch_seconds)));

  Cursor cur{filtered.start_index, std::nullopt, 0.0};
  for (std::size_t region = 0;; ++region) {
    const std::size_t n = ens.members.size();
    std::vector<RegionRun> runs(n);
    if (cfg.policy == ExecPolicy::Parallel && n > 1) {
#pragma omp parallel for schedule(dynamic)
      for (std::size_t i = 0; i < n; ++i) runs[i] = analyze_region(filtered, ens.members[i], cur, region_batches, cfg);
    } else {
      for (std::size_t i = 0; i < n; ++i) runs[i] = analyze_region(filtered, ens.members[i], cur, region_batches, cfg);
    }

    RegionLog log;
    log.region_id = region;
    for (std::size_t i = 0; i < n; ++i) {
      log.scores.push_back({ens.members[i].id, runs[i].avg_cost});
      ens.avg_path_cost[i] = runs[i].avg_cost;
    }
    std::size_t chosen = *ens.index_of(ens.prime_id);
    try {
      log.y_opt = select_optimal(ens, log.scores);
      chosen = *ens.index_of(log.y_opt);
      ++ens.usage[chosen];
    } catch (const Error&) {
      log.y_opt = ens.prime_id;
      out.warnings.push_back("region " + std::to_string(region) + ": no template produced a segment");
    }

    RegionRun best = std::move(runs[chosen]);
    // The winner may be evicted below; its segments still need it for mapping.
    std::vector<Template> mapping_set = ens.members;
    if (k > 1 && !best.segments.empty()) {
      const double l_x = best.cycle_lengths.empty() ? static_cast<double>(prime.feature_length())
                                                    : best.cycle_lengths.back();
      const auto upd =
          update_ensemble(ens, cycles_of(filtered, best.segments), log.y_opt, l_x, region, cfg.region, cfg.policy);
      log.added_id = upd.new_id;
      log.evicted_id = upd.evicted_id;
      if (!upd.warning.empty()) out.warnings.push_back(upd.warning);
      if (upd.reanalyze && upd.new_id) {
        log.reanalyzed = true;
        const auto idx = *ens.index_of(*upd.new_id);
        mapping_set.push_back(ens.members[idx]);
        auto again = analyze_region(filtered, ens.members[idx], cur, region_batches, cfg);
        ens.avg_path_cost[idx] = again.avg_cost;
        log.reanalysis_cost = again.avg_cost;
        if (again.avg_cost <= best.avg_cost) {
          log.reanalysis_adopted = true;
          ++ens.usage[idx];
          best = std::move(again);
        }
      }
    }

    cur.pos = best.next_cursor;
    cur.resume = best.next_resume;
    if (!best.cycle_lengths.empty()) cur.last_lx = best.cycle_lengths.back();
    const bool finished = best.finished;
    adopt(out, best, mapping_set, clock);
    out.regions.push_back(std::move(log));
    if (finished) break;
  }
  finalize_events(out.events);
  out.templates = ens.members;
  return out;
}

}  // namespace

PipelineResult run_pipeline(const SignalBatch& record, const std::optional<Template>& prime, const PipelineConfig& cfg) {
  validate(cfg);
  const auto filtered = preprocess(record, cfg.filter);
  const auto clock = clock_of(filtered);
  switch (cfg.method) {
    case Method::BoostedST:
    case Method::BoostedDT: {
      if (!prime) throw ConfigError("method " + to_string(cfg.method) + " needs a prime template");
      validate_template(*prime);
      return run_boosted(filtered, *prime, cfg);
    }
    case Method::Spring: {
      if (!prime) throw ConfigError("method spring needs a template");
      validate_template(*prime);
      PipelineResult out;
      auto res = springdtw_segment(filtered, *prime, cfg.spring, clock);
      out.events = std::move(res.events);
      out.segments = std::move(res.segments);
      out.spring_epsilon = res.epsilon;
      out.templates.push_back(*prime);
      if (out.events.empty()) out.warnings.push_back("spring: no matches at epsilon " + std::to_string(res.epsilon));
      return out;
    }
    case Method::Adaptive: {
      PipelineResult out;
      const auto views = derive_views(filtered);
      out.events = adaptive_threshold_detect(filtered, views, filtered.fs, cfg.threshold, clock);
      return out;
    }
  }
  return {};
}

namespace {

std::size_t snap_to_minimum(const SignalBatch& s, std::size_t g, std::size_t radius) {
  const std::size_t lo = std::max(s.start_index, g > radius ? g - radius : 0);
  const std::size_t hi = std::min(s.end_index() - 1, g + radius);
  std::size_t best = std::clamp(g, lo, hi);
  for (std::size_t i = lo; i <= hi; ++i) {
    if (s.at(i) < s.at(best)) best = i;
  }
  return best;
}

Template cut_cycle(const SignalBatch& s, std::size_t a, std::size_t b) {
  std::vector<double> cycle(s.samples.begin() + static_cast<std::ptrdiff_t>(a - s.start_index),
                            s.samples.begin() + static_cast<std::ptrdiff_t>(b - s.start_index) + 1);
  auto t = make_template_from_cycle(std::move(cycle), s.fs, 0);
  validate_template(t);
  return t;
}

}  // namespace

Template prime_from_onsets(const SignalBatch& filtered, std::span<const std::size_t> onsets, double skip_s) {
  const auto skip = filtered.start_index + static_cast<std::size_t>(skip_s * filtered.fs);
  for (std::size_t i = 0; i + 1 < onsets.size(); ++i) {
    if (onsets[i] < skip || onsets[i + 1] >= filtered.end_index()) continue;
    const std::size_t len = onsets[i + 1] - onsets[i];
    if (len < 4) continue;
    const auto radius = std::max<std::size_t>(1, len / 10);
    const auto a = snap_to_minimum(filtered, onsets[i], radius);
    const auto b = snap_to_minimum(filtered, onsets[i + 1], radius);
    if (b <= a + 3) continue;
    try {
      return cut_cycle(filtered, a, b);
    } catch (const Error&) {
      continue;
    }
  }
  throw InputError("no usable annotated cycle for a prime template");
}

Template prime_from_bootstrap(const SignalBatch& filtered, const ThresholdConfig& config, double skip_s) {
  const auto views = derive_views(filtered);
  const auto events = adaptive_threshold_detect(filtered, views, filtered.fs, config, clock_of(filtered));
  std::vector<std::size_t> onsets;
  for (const auto& e : events) {
    if (e.cls == FiducialClass::Onset) onsets.push_back(e.stream_idx);
  }
  // Plausible spacing only: 40 to 180 bpm.
  const double min_len = filtered.fs * 60.0 / 180.0;
  const double max_len = filtered.fs * 60.0 / 40.0;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i + 1 < onsets.size(); ++i) {
    const auto len = static_cast<double>(onsets[i + 1] - onsets[i]);
    if (len >= min_len && len <= max_len) {
      kept.push_back(onsets[i]);
      kept.push_back(onsets[i + 1]);
      try {
        return prime_from_onsets(filtered, kept, skip_s);
      } catch (const Error&) {
        kept.clear();
      }
    }
  }
  throw InputError("bootstrap found no plausible cycle for a prime template");
}

void write_events_csv(const std::filesystem::path& path, std::span<const FiducialEvent> events) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os.precision(10);
  os << "class,sample_index,time_s,segment_id\n";
  for (const auto& e : events) {
    os << to_string(e.cls) << ',' << e.stream_idx << ',' << e.time_s << ',' << e.segment_id << '\n';
  }
}

void write_segments_csv(const std::filesystem::path& path, std::span<const Segment> segments) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os.precision(10);
  os << "segment_id,t_s,t_e,template_id,path_cost,p_e,after_reset\n";
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    os << i << ',' << s.t_s << ',' << s.t_e << ',' << s.template_id << ',' << s.path.cost << ',' << s.p_e_at_end
       << ',' << (s.after_reset ? 1 : 0) << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, std::span<const EndpointRecord> trace) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os.precision(10);
  os << "sample_index,d,p_c,p_d,p_e\n";
  for (const auto& r : trace) os << r.idx << ',' << r.d << ',' << r.p_c << ',' << r.p_d << ',' << r.p_e << '\n';
}

}  // namespace bspring

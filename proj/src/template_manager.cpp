#include "bspring/template_manager.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bspring/error.hpp"
#include "bspring/fiducial.hpp"
#include "bspring/signal.hpp"

namespace bspring {

std::vector<double> resample(std::span<const double> seq, std::size_t new_len) {
  if (new_len < 2) throw ConfigError("resample: target length must be >= 2");
  if (seq.empty()) throw InputError("resample: empty sequence");
  std::vector<double> out(new_len);
  if (seq.size() == 1) {
    std::fill(out.begin(), out.end(), seq[0]);
    return out;
  }
  const double scale = static_cast<double>(seq.size() - 1) / static_cast<double>(new_len - 1);
  for (std::size_t i = 0; i < new_len; ++i) {
    const double pos = static_cast<double>(i) * scale;
    const auto j = std::min(static_cast<std::size_t>(pos), seq.size() - 2);
    const double frac = pos - static_cast<double>(j);
    out[i] = seq[j] + frac * (seq[j + 1] - seq[j]);
  }
  out.front() = seq.front();
  out.back() = seq.back();
  return out;
}

std::vector<double> moving_average(std::span<const double> seq, std::size_t window) {
  std::vector<double> out(seq.size());
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(seq.size() - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += seq[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

namespace {

double total_cost(const std::vector<WarpingPath>& paths) {
  double s = 0.0;
  for (const auto& p : paths) s += p.cost;
  return s;
}

std::vector<double> barycenter_update(const std::vector<std::vector<double>>& cycles,
                                      const std::vector<WarpingPath>& paths, std::size_t len) {
  std::vector<double> sum(len, 0.0);
  std::vector<std::size_t> count(len, 0);
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    for (const auto& [t, i] : paths[c].pairs) {
      sum[i] += cycles[c][t];
      ++count[i];
    }
  }
  for (std::size_t i = 0; i < len; ++i) sum[i] /= static_cast<double>(count[i]);
  return sum;
}

}  // namespace

DbaResult dba_consensus(const std::vector<std::vector<double>>& cycles, std::size_t target_len,
                        std::size_t max_iter, ExecPolicy policy) {
  if (cycles.empty()) throw InputError("dba_consensus: no cycles");
  for (const auto& c : cycles) {
    if (c.empty()) throw InputError("dba_consensus: empty cycle");
  }
  if (max_iter < 1) throw ConfigError("dba_consensus: iteration cap must be >= 1");
  DbaResult res;
  if (cycles.size() == 1) {
    res.average = resample(cycles.front(), target_len);
    res.degenerate = true;
    return res;
  }

  const auto pair_costs = pairwise_dtw_costs(cycles, LocalCost::Squared, policy);
  const std::size_t k = cycles.size();
  std::size_t medoid = 0;
  double best = kUnreachable;
  for (std::size_t a = 0; a < k; ++a) {
    const double row = std::accumulate(pair_costs.begin() + static_cast<std::ptrdiff_t>(a * k),
                                       pair_costs.begin() + static_cast<std::ptrdiff_t>((a + 1) * k), 0.0);
    if (row < best) {
      best = row;
      medoid = a;
    }
  }

  res.average = resample(cycles[medoid], target_len);
  auto paths = align_to_reference(cycles, res.average, LocalCost::Squared, policy);
  res.objective.push_back(total_cost(paths));
  for (std::size_t it = 1; it <= max_iter; ++it) {
    auto next = barycenter_update(cycles, paths, target_len);
    auto next_paths = align_to_reference(cycles, next, LocalCost::Squared, policy);
    const double prev = res.objective.back();
    const double obj = total_cost(next_paths);
    res.average = std::move(next);
    paths = std::move(next_paths);
    res.objective.push_back(obj);
    res.iterations = it;
    if (prev - obj <= 1e-6 * prev) break;
  }
  return res;
}

namespace {

// Labeling aligns waveform shape rather than slope: the first difference of a
// noisy cycle is dominated by noise around the flat apex. A light smoothing
// pass and min-max scaling make the two cycles comparable; index i stays
// sample i and the last sample is dropped so indices match the features.
std::vector<double> labeling_view(std::span<const double> seq) {
  auto v = moving_average(seq, 5);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (auto& x : v) x = range > 0.0 ? (x - mean) / range : 0.0;
  v.pop_back();
  return v;
}

}  // namespace

Template label_template(const Template& prime, std::span<const double> new_seq, int new_id,
                        std::size_t region_id) {
  validate_template(prime);
  if (new_seq.size() < 4) throw MappingError("label_template: new template too short");
  const std::size_t m_prime = prime.feature_length();
  const std::size_t m_new = new_seq.size() - 1;

  const auto resampled = resample(prime.samples, new_seq.size());
  const double scale = static_cast<double>(m_new - 1) / static_cast<double>(m_prime - 1);
  const auto fr = labeling_view(resampled);
  const auto fu = labeling_view(new_seq);
  const auto mat = dtw_full(fu, fr, admissible_band(fu.size(), fr.size()));
  const auto path = traceback(mat, fu.size() - 1);

  Template out;
  out.id = new_id;
  out.fs = prime.fs;
  out.samples.assign(new_seq.begin(), new_seq.end());
  out.provenance = {Provenance::Kind::Generated, region_id};
  out.ann[FiducialClass::Onset] = 0;
  for (auto cls : {FiducialClass::MS, FiducialClass::Sys}) {
    const auto scaled = static_cast<std::size_t>(std::lround(static_cast<double>(prime.ann.at(cls)) * scale));
    const auto idx = map_annotation(path, std::min(scaled, m_new - 1));
    if (!idx) throw MappingError("label_template: " + std::string(to_string(cls)) + " not on the path");
    out.ann[cls] = *idx;
  }
  try {
    validate_template(out);
  } catch (const ConfigError& e) {
    throw MappingError(std::string("label_template: ") + e.what());
  }
  return out;
}

Ensemble Ensemble::with_prime(Template prime, std::size_t k) {
  if (k < 1) throw ConfigError("ensemble size k must be >= 1");
  validate_template(prime);
  prime.provenance = {Provenance::Kind::Prime, 0};
  Ensemble e;
  e.k = k;
  e.prime_id = prime.id;
  e.next_id = prime.id + 1;
  e.members.push_back(std::move(prime));
  e.usage.push_back(0);
  e.avg_path_cost.push_back(kUnreachable);
  return e;
}

std::optional<std::size_t> Ensemble::index_of(int id) const {
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].id == id) return i;
  }
  return std::nullopt;
}

const Template& Ensemble::prime() const { return members.at(*index_of(prime_id)); }

int select_optimal(const Ensemble& ensemble, std::span<const RegionScore> scores) {
  std::optional<RegionScore> best;
  for (const auto& s : scores) {
    if (!ensemble.index_of(s.template_id) || !std::isfinite(s.avg_path_cost)) continue;
    if (!best || s.avg_path_cost < best->avg_path_cost) {
      best = s;
      continue;
    }
    if (s.avg_path_cost == best->avg_path_cost) {
      const bool s_prime = s.template_id == ensemble.prime_id;
      const bool b_prime = best->template_id == ensemble.prime_id;
      if (s_prime || (!b_prime && s.template_id < best->template_id)) best = s;
    }
  }
  if (!best) throw Error("select_optimal: no template completed its region analysis");
  return best->template_id;
}

Template generate_template(const Template& prime, const std::vector<std::vector<double>>& region_cycles, double l_x,
                           int new_id, std::size_t region_id, const RegionConfig& config, ExecPolicy policy) {
  std::vector<std::vector<double>> normalized;
  normalized.reserve(region_cycles.size());
  for (const auto& c : region_cycles) {
    if (c.empty()) continue;
    const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
    auto& out = normalized.emplace_back(c);
    for (auto& v : out) v -= mean;
  }
  if (normalized.empty()) throw InputError("generate_template: no cycles in region");
  const auto target = static_cast<std::size_t>(std::max(3L, std::lround(l_x))) + 1;
  const auto dba = dba_consensus(normalized, target, config.dba_iterations, policy);
  const auto smooth = moving_average(dba.average, config.smoothing_window);
  return label_template(prime, smooth, new_id, region_id);
}

UpdateOutcome update_ensemble(Ensemble& e, const std::vector<std::vector<double>>& region_cycles, int y_opt,
                              double l_x, std::size_t region_id, const RegionConfig& config,
                              ExecPolicy policy) {
  UpdateOutcome out;
  const bool growing = e.members.size() < e.k;
  if (!growing && y_opt == e.prime_id) return out;
  if (region_cycles.empty()) {
    out.warning = "region " + std::to_string(region_id) + ": no cycles for a new template";
    return out;
  }

  Template fresh;
  try {
    fresh = generate_template(e.prime(), region_cycles, l_x, e.next_id, region_id, config, policy);
  } catch (const Error& err) {
    out.warning = "region " + std::to_string(region_id) + ": template rejected (" + err.what() + ")";
    return out;
  }

  if (!growing) {
    std::optional<std::size_t> victim;
    for (std::size_t i = 0; i < e.members.size(); ++i) {
      const auto id = e.members[i].id;
      if (id == e.prime_id || id == y_opt) continue;
      if (!victim || e.usage[i] < e.usage[*victim]) victim = i;
    }
    if (!victim) victim = e.index_of(y_opt);
    out.evicted_id = e.members[*victim].id;
    e.members.erase(e.members.begin() + static_cast<std::ptrdiff_t>(*victim));
    e.usage.erase(e.usage.begin() + static_cast<std::ptrdiff_t>(*victim));
    e.avg_path_cost.erase(e.avg_path_cost.begin() + static_cast<std::ptrdiff_t>(*victim));
    out.reanalyze = true;
  }
  out.added = true;
  out.new_id = fresh.id;
  ++e.next_id;
  e.members.push_back(std::move(fresh));
  e.usage.push_back(0);
  e.avg_path_cost.push_back(kUnreachable);
  return out;
}

}  // namespace bspring

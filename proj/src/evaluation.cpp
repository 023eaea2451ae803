#include "bspring/evaluation.hpp"

#include <algorithm>
#include <iterator>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "bspring/error.hpp"

namespace bspring {

std::vector<TimedEvent> to_timed(std::span<const FiducialEvent> events) {
  std::vector<TimedEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back({e.cls, e.time_s});
  return out;
}

ClassMatch match_class(std::span<const double> pred_times, std::span<const double> truth_times, double tol_ms) {
  struct Candidate {
    double offset;
    std::size_t p;
    std::size_t t;
  };
  const double tol_s = tol_ms / 1000.0;
  std::vector<Candidate> cands;
  // Both sides are sorted, so a sliding lower bound keeps this near-linear.
  std::size_t lo = 0;
  for (std::size_t p = 0; p < pred_times.size(); ++p) {
    while (lo < truth_times.size() && truth_times[lo] < pred_times[p] - tol_s) ++lo;
    for (std::size_t t = lo; t < truth_times.size() && truth_times[t] <= pred_times[p] + tol_s; ++t) {
      cands.push_back({std::abs(pred_times[p] - truth_times[t]), p, t});
    }
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.offset < b.offset; });
  std::vector<char> used_p(pred_times.size(), 0);
  std::vector<char> used_t(truth_times.size(), 0);
  ClassMatch m;
  for (const auto& c : cands) {
    if (used_p[c.p] || used_t[c.t]) continue;
    used_p[c.p] = used_t[c.t] = 1;
    m.matched_pairs.emplace_back(pred_times[c.p], truth_times[c.t]);
  }
  std::sort(m.matched_pairs.begin(), m.matched_pairs.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  m.tp = m.matched_pairs.size();
  m.fp = pred_times.size() - m.tp;
  m.fn = truth_times.size() - m.tp;
  return m;
}

namespace {

std::vector<double> sorted_times(std::span<const TimedEvent> events, FiducialClass cls) {
  std::vector<double> out;
  for (const auto& e : events) {
    if (e.cls == cls) out.push_back(e.time_s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

MatchResult match_predictions(std::span<const TimedEvent> pred, std::span<const TimedEvent> truth, double tol_ms) {
  MatchResult r;
  for (const auto cls : kScoredClasses) {
    const auto p = sorted_times(pred, cls);
    const auto t = sorted_times(truth, cls);
    r.per_class[cls] = match_class(p, t, tol_ms);
  }
  return r;
}

ClassificationScores classification_scores(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassificationScores s;
  if (tp + fp > 0) {
    s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    s.precision_degenerate = true;
  }
  if (tp + fn > 0) {
    s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    s.recall_degenerate = true;
  }
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  } else {
    s.f1_degenerate = true;
  }
  return s;
}

ClassificationScores classification_scores(const ClassMatch& m) { return classification_scores(m.tp, m.fp, m.fn); }

std::optional<double> timing_rmse(const ClassMatch& m) {
  if (m.matched_pairs.empty()) return std::nullopt;
  double acc = 0.0;
  for (const auto& [p, t] : m.matched_pairs) {
    const double d = 1000.0 * (p - t);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(m.matched_pairs.size()));
}

IbiSeries compute_ibi(std::span<const double> times_s, FiducialClass source) {
  std::vector<double> t(times_s.begin(), times_s.end());
  std::sort(t.begin(), t.end());
  IbiSeries s;
  s.source = source;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double ibi = 1000.0 * (t[i] - t[i - 1]);
    if (ibi > 0.0) s.points.push_back({t[i], ibi});
  }
  return s;
}

FilteredIbi plausibility_filter(const IbiSeries& series, double min_ms, double max_ms) {
  if (!(min_ms < max_ms)) throw ConfigError("IBI plausibility bounds need min < max");
  FilteredIbi f;
  f.series.source = series.source;
  f.input_count = series.points.size();
  for (const auto& p : series.points) {
    if (p.ibi_ms >= min_ms && p.ibi_ms <= max_ms) f.series.points.push_back(p);
  }
  if (f.input_count > 0) {
    f.retained_fraction = static_cast<double>(f.series.points.size()) / static_cast<double>(f.input_count);
  }
  return f;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return std::nullopt;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0 && sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

IbiAgreement ibi_agreement(const IbiSeries& pred, const IbiSeries& truth, double max_gap_s) {
  IbiAgreement a;
  const auto& pp = pred.points;
  for (const auto& t : truth.points) {
    const auto it = std::lower_bound(pp.begin(), pp.end(), t.time_s,
                                     [](const IbiPoint& p, double v) { return p.time_s < v; });
    const IbiPoint* best = nullptr;
    double gap = max_gap_s;
    if (it != pp.end() && std::abs(it->time_s - t.time_s) <= gap) {
      best = &*it;
      gap = std::abs(it->time_s - t.time_s);
    }
    // Earlier prediction wins an exact tie.
    if (it != pp.begin() && std::abs(std::prev(it)->time_s - t.time_s) <= gap) best = &*std::prev(it);
    if (best) {
      a.pairs.push_back({t.ibi_ms, best->ibi_ms});
    } else {
      ++a.unpaired_truth;
    }
  }
  a.pair_count = a.pairs.size();
  if (a.pairs.empty()) return a;

  std::vector<double> tv, pv, err;
  double truth_sum = 0.0;
  for (const auto& p : a.pairs) {
    tv.push_back(p.truth_ms);
    pv.push_back(p.pred_ms);
    err.push_back(std::abs(p.pred_ms - p.truth_ms));
    truth_sum += p.truth_ms;
  }
  const double n = static_cast<double>(a.pairs.size());
  double mae = 0.0;
  for (double e : err) mae += e;
  mae /= n;
  a.mae_ms = mae;
  const double truth_mean = truth_sum / n;
  if (truth_mean > 0.0) a.mae_pct = 100.0 * mae / truth_mean;
  a.pearson_r = pearson(pv, tv);
  if (err.size() >= 2) {
    double ss = 0.0;
    for (double e : err) ss += (e - mae) * (e - mae);
    a.sem_ms = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return a;
}

std::vector<DifferenceRow> difference_plot_data(std::span<const IbiPair> pairs) {
  std::vector<DifferenceRow> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) rows.push_back({0.5 * (p.truth_ms + p.pred_ms), p.pred_ms - p.truth_ms});
  return rows;
}

EvalReport evaluate(std::span<const TimedEvent> pred, std::span<const TimedEvent> truth, const EvalSettings& s) {
  EvalReport r;
  r.settings = s;
  const auto match = match_predictions(pred, truth, s.tol_ms);
  for (const auto cls : kScoredClasses) {
    ClassReport c;
    const auto pt = sorted_times(pred, cls);
    const auto tt = sorted_times(truth, cls);
    c.pred_count = pt.size();
    c.truth_count = tt.size();
    c.match = match.per_class.at(cls);
    c.scores = classification_scores(c.match);
    c.rmse_ms = timing_rmse(c.match);
    const auto pred_ibi = compute_ibi(pt, cls);
    const auto filtered = plausibility_filter(pred_ibi, s.ibi_min_ms, s.ibi_max_ms);
    c.ibi_count = filtered.input_count;
    c.valid_prediction_count = filtered.series.points.size();
    c.valid_prediction_fraction = filtered.retained_fraction;
    c.ibi = ibi_agreement(filtered.series, compute_ibi(tt, cls), s.ibi_max_gap_s);
    r.per_class[cls] = std::move(c);
  }
  return r;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::string report_json(const EvalReport& r) {
  nlohmann::json j;
  j["settings"] = {{"tol_ms", r.settings.tol_ms},
                   {"ibi_min_ms", r.settings.ibi_min_ms},
                   {"ibi_max_ms", r.settings.ibi_max_ms},
                   {"ibi_max_gap_s", r.settings.ibi_max_gap_s}};
  for (const auto& [cls, c] : r.per_class) {
    nlohmann::json k;
    k["truth_count"] = c.truth_count;
    k["pred_count"] = c.pred_count;
    k["tp"] = c.match.tp;
    k["fp"] = c.match.fp;
    k["fn"] = c.match.fn;
    k["precision"] = c.scores.precision;
    k["recall"] = c.scores.recall;
    k["f1"] = c.scores.f1;
    k["degenerate"] = {{"precision", c.scores.precision_degenerate},
                       {"recall", c.scores.recall_degenerate},
                       {"f1", c.scores.f1_degenerate}};
    k["rmse_ms"] = opt(c.rmse_ms);
    k["ibi_count"] = c.ibi_count;
    k["valid_prediction_count"] = c.valid_prediction_count;
    k["valid_prediction_fraction"] = c.valid_prediction_fraction;
    k["ibi_pair_count"] = c.ibi.pair_count;
    k["ibi_unpaired_truth"] = c.ibi.unpaired_truth;
    k["ibi_mae_ms"] = opt(c.ibi.mae_ms);
    k["ibi_mae_pct"] = opt(c.ibi.mae_pct);
    k["ibi_sem_ms"] = opt(c.ibi.sem_ms);
    k["pearson_r"] = opt(c.ibi.pearson_r);
    j["classes"][std::string(to_string(cls))] = std::move(k);
  }
  return j.dump(2);
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(10);
  os << *v;
  return os.str();
}

}  // namespace

void write_table_classification(std::ostream& os, const EvalReport& r) {
  os << "class,precision,recall,f1,rmse_ms,tp,fp,fn\n";
  for (const auto& [cls, c] : r.per_class) {
    os << to_string(cls) << ',' << fmt(c.scores.precision) << ',' << fmt(c.scores.recall) << ','
       << fmt(c.scores.f1) << ',' << fmt(c.rmse_ms) << ',' << c.match.tp << ',' << c.match.fp << ','
       << c.match.fn << '\n';
  }
}

void write_table_ibi(std::ostream& os, const EvalReport& r) {
  os << "class,mae_ms,sem_ms,mae_pct,pearson_r,valid_count,valid_fraction,pairs\n";
  for (const auto& [cls, c] : r.per_class) {
    os << to_string(cls) << ',' << fmt(c.ibi.mae_ms) << ',' << fmt(c.ibi.sem_ms) << ',' << fmt(c.ibi.mae_pct)
       << ',' << fmt(c.ibi.pearson_r) << ',' << c.valid_prediction_count << ','
       << fmt(c.valid_prediction_fraction) << ',' << c.ibi.pair_count << '\n';
  }
}

void write_difference_csv(std::ostream& os, std::span<const IbiPair> pairs) {
  os << "truth_ms,pred_ms,mean_ms,diff_ms\n";
  const auto rows = difference_plot_data(pairs);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << fmt(pairs[i].truth_ms) << ',' << fmt(pairs[i].pred_ms) << ',' << fmt(rows[i].mean_ms) << ','
       << fmt(rows[i].diff_ms) << '\n';
  }
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::vector<TimedEvent> read_events_csv(std::istream& is, const std::string& source, std::optional<double> fs) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw InputError(source + ": empty events file");
  ++lineno;
  const auto header = split_row(line);
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto cls_col = col("class");
  if (!cls_col) throw ParseError(source, lineno, "missing column 'class'");
  const auto time_col = col("time_s");
  const auto idx_col = col("sample_index");
  if (!time_col && !(idx_col && fs)) {
    throw ParseError(source, lineno, idx_col ? "missing column 'time_s' (sample_index needs a sampling rate)"
                                             : "missing column 'time_s'");
  }
  std::vector<TimedEvent> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto row = split_row(line);
    if (row.size() != header.size()) {
      throw ParseError(source, lineno, "expected " + std::to_string(header.size()) + " columns");
    }
    const auto cls = parse_fiducial_class(row[*cls_col]);
    if (!cls) throw ParseError(source, lineno, "column 'class': unknown value '" + row[*cls_col] + "'");
    TimedEvent e;
    e.cls = *cls;
    if (time_col) {
      const auto v = to_number(row[*time_col]);
      if (!v) throw ParseError(source, lineno, "column 'time_s': not a number");
      e.time_s = *v;
    } else {
      const auto v = to_number(row[*idx_col]);
      if (!v || *v < 0) throw ParseError(source, lineno, "column 'sample_index': not a sample index");
      e.time_s = *v / *fs;
    }
    out.push_back(e);
  }
  return out;
}

std::vector<TimedEvent> load_events_csv(const std::string& path, std::optional<double> fs) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_events_csv(in, path, fs);
}

}  // namespace bspring

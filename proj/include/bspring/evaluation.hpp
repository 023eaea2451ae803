#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bspring/fiducial.hpp"
#include "bspring/template.hpp"

namespace bspring {

inline constexpr FiducialClass kScoredClasses[] = {FiducialClass::Sys, FiducialClass::MS, FiducialClass::Onset};

// A timestamped event with no segment attached; what truth files hold.
struct TimedEvent {
  FiducialClass cls = FiducialClass::NF;
  double time_s = 0.0;
};

std::vector<TimedEvent> to_timed(std::span<const FiducialEvent> events);

struct ClassMatch {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<std::pair<double, double>> matched_pairs;  // (pred_time, truth_time)
};

struct MatchResult {
  std::map<FiducialClass, ClassMatch> per_class;
};

// Greedy nearest-neighbour one-to-one matching per class: candidate pairs
// within tol_ms are taken in order of increasing offset.
ClassMatch match_class(std::span<const double> pred_times, std::span<const double> truth_times, double tol_ms);
MatchResult match_predictions(std::span<const TimedEvent> pred, std::span<const TimedEvent> truth, double tol_ms);

struct ClassificationScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
};

ClassificationScores classification_scores(std::size_t tp, std::size_t fp, std::size_t fn);
ClassificationScores classification_scores(const ClassMatch& match);

// Root mean squared offset of matched pairs in ms; nullopt without pairs.
std::optional<double> timing_rmse(const ClassMatch& match);

struct IbiPoint {
  double time_s = 0.0;
  double ibi_ms = 0.0;
};

struct IbiSeries {
  FiducialClass source = FiducialClass::NF;
  std::vector<IbiPoint> points;
};

// Consecutive differences of the sorted times, stamped at the later event.
IbiSeries compute_ibi(std::span<const double> times_s, FiducialClass source = FiducialClass::NF);

struct FilteredIbi {
  IbiSeries series;
  std::size_t input_count = 0;
  double retained_fraction = 0.0;  // 0 for an empty input
};

FilteredIbi plausibility_filter(const IbiSeries& series, double min_ms = 600.0, double max_ms = 1500.0);

struct IbiPair {
  double truth_ms = 0.0;
  double pred_ms = 0.0;
};

struct IbiAgreement {
  std::size_t pair_count = 0;
  std::size_t unpaired_truth = 0;
  std::optional<double> mae_ms;
  std::optional<double> mae_pct;   // MAE over the mean truth IBI of the pairs
  std::optional<double> pearson_r; // absent with < 2 pairs or zero variance
  std::optional<double> sem_ms;    // standard error of the absolute errors
  std::vector<IbiPair> pairs;
};

// Each truth IBI is paired with the prediction closest in time, if that is
// within max_gap_s. Predictions may serve more than one truth.
IbiAgreement ibi_agreement(const IbiSeries& pred, const IbiSeries& truth, double max_gap_s = 1.0);

std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct DifferenceRow {
  double mean_ms = 0.0;
  double diff_ms = 0.0;  // pred - truth
};

std::vector<DifferenceRow> difference_plot_data(std::span<const IbiPair> pairs);

struct EvalSettings {
  double tol_ms = 100.0;
  double ibi_min_ms = 600.0;
  double ibi_max_ms = 1500.0;
  double ibi_max_gap_s = 1.0;
};

struct ClassReport {
  std::size_t truth_count = 0;
  std::size_t pred_count = 0;
  ClassMatch match;
  ClassificationScores scores;
  std::optional<double> rmse_ms;
  std::size_t ibi_count = 0;  // predicted IBIs before filtering
  std::size_t valid_prediction_count = 0;
  double valid_prediction_fraction = 0.0;
  IbiAgreement ibi;
};

struct EvalReport {
  EvalSettings settings;
  std::map<FiducialClass, ClassReport> per_class;
};

// IBIs on the truth side are taken unfiltered.
EvalReport evaluate(std::span<const TimedEvent> pred, std::span<const TimedEvent> truth, const EvalSettings& settings = {});

std::string report_json(const EvalReport& report);
void write_table_classification(std::ostream& os, const EvalReport& report);
void write_table_ibi(std::ostream& os, const EvalReport& report);
void write_difference_csv(std::ostream& os, std::span<const IbiPair> pairs);

// Reads class,... rows where the named time column gives seconds. The header
// must contain `class` and either `time_s` or `sample_index` (with fs).
std::vector<TimedEvent> read_events_csv(std::istream& is, const std::string& source,
                                        std::optional<double> fs = std::nullopt);
std::vector<TimedEvent> load_events_csv(const std::string& path, std::optional<double> fs = std::nullopt);

}  // namespace bspring

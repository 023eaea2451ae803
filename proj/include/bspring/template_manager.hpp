#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bspring/kernels.hpp"
#include "bspring/template.hpp"

namespace bspring {

// Linear interpolation onto new_len uniformly spaced points; endpoints kept.
std::vector<double> resample(std::span<const double> seq, std::size_t new_len);

// Centered moving average, window shrinking at the edges.
std::vector<double> moving_average(std::span<const double> seq, std::size_t window);

struct DbaResult {
  std::vector<double> average;
  std::vector<double> objective;  // sum of DTW costs before the first update, then after each one
  std::size_t iterations = 0;
  bool degenerate = false;        // a single input cycle, returned resampled
};

// DTW barycenter averaging under squared local cost. Starts from the
// DTW medoid resampled to target_len; each iteration re-aligns every cycle
// to the current average and replaces each average sample with the mean of
// the samples warped onto it. Stops after max_iter iterations or when the
// objective improves by less than 1e-6 relatively.
DbaResult dba_consensus(const std::vector<std::vector<double>>& cycles, std::size_t target_len,
                        std::size_t max_iter, ExecPolicy policy = ExecPolicy::Parallel);

// Transfers the prime's annotations onto new_seq: the prime is resampled
// to new_seq's length (annotations scaled with it), then aligned against
// new_seq (smoothed, min-max scaled samples) and each annotation carried
// through the path. Throws MappingError
// when the result violates the template invariants.
Template label_template(const Template& prime, std::span<const double> new_seq, int new_id,
                        std::size_t region_id = 0);

struct RegionConfig {
  double u_seconds = 60.0;  // region length
  std::size_t dba_iterations = 10;
  std::size_t smoothing_window = 5;
};

struct Ensemble {
  std::size_t k = 3;
  std::vector<Template> members;
  std::vector<std::size_t> usage;          // times each member won a region
  std::vector<double> avg_path_cost;       // per member, for the latest region
  int prime_id = 0;
  int next_id = 1;

  static Ensemble with_prime(Template prime, std::size_t k);
  std::optional<std::size_t> index_of(int id) const;
  const Template& prime() const;
};

// Per-member summary of one region analysis.
struct RegionScore {
  int template_id = 0;
  double avg_path_cost = 0.0;  // +inf when the member produced no segments
};

// Lowest average path cost; exact ties go to the prime, then to the lowest id.
// Throws Error when no member completed its analysis.
int select_optimal(const Ensemble& ensemble, std::span<const RegionScore> scores);

struct UpdateOutcome {
  bool added = false;
  std::optional<int> new_id;
  std::optional<int> evicted_id;
  bool reanalyze = false;
  std::string warning;
};

// Growth phase: add a consensus template. Full ensemble and y_opt != prime:
// evict the least-used non-prime member (oldest on ties, y_opt only if it is
// the sole candidate), add the consensus template and request re-analysis.
// Otherwise unchanged. Labeling failures leave the ensemble unchanged.
UpdateOutcome update_ensemble(Ensemble& ensemble, const std::vector<std::vector<double>>& region_cycles, int y_opt,
                              double l_x, std::size_t region_id, const RegionConfig& config,
                              ExecPolicy policy = ExecPolicy::Parallel);

// The consensus-template recipe shared by update_ensemble: mean-normalize
// each cycle, DBA to round(l_x) + 1 samples, smooth, label from the prime.
Template generate_template(const Template& prime, const std::vector<std::vector<double>>& region_cycles, double l_x,
                           int new_id, std::size_t region_id, const RegionConfig& config,
                           ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace bspring

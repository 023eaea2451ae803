#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace bspring {

// Sentinel for unreachable cells. IEEE infinity saturates under addition.
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

inline double pairwise_dist(double a, double b) noexcept { return std::abs(a - b); }

// Local cost used to fill a cost matrix. Segmentation and fiducial mapping
// use the absolute difference; barycenter averaging uses the squared one.
enum class LocalCost { Absolute, Squared };

inline double local_cost(LocalCost kind, double a, double b) noexcept {
  const double d = a - b;
  return kind == LocalCost::Absolute ? std::abs(d) : d * d;
}

// Accumulated distances, row t for stream sample x[t], column i for template
// sample y[i]. With a band of half-width w, cell (t, i) exists iff |t - i| <= w.
struct CostMatrix {
  std::size_t n = 0;
  std::size_t m = 0;
  std::optional<std::size_t> band;
  LocalCost cost_kind = LocalCost::Absolute;
  std::vector<double> cells;
  std::vector<double> x;
  std::vector<double> y;

  double at(std::size_t t, std::size_t i) const { return cells[t * m + i]; }
  bool in_band(std::size_t t, std::size_t i) const noexcept {
    return !band || (t > i ? t - i : i - t) <= *band;
  }
  double final_cost() const { return at(n - 1, m - 1); }
};

// Full-matrix DTW. Throws NoPathError when the band cannot reach (n-1, m-1).
CostMatrix dtw_full(std::span<const double> x, std::span<const double> y,
                    std::optional<std::size_t> band = std::nullopt,
                    LocalCost cost = LocalCost::Absolute);

// ceil(0.10 * max(n, m)).
std::size_t default_band(std::size_t n, std::size_t m) noexcept;

// default_band widened to |n - m| so unequal lengths always admit a path.
std::size_t admissible_band(std::size_t n, std::size_t m) noexcept;

struct WarpingPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (stream index, template index)
  std::vector<double> local;  // pairwise distance of each pair
  double cost = 0.0;          // accumulated value at the endpoint cell
};

// Greedy backward walk from (end_stream_index, m - 1) through the cheapest
// predecessor; ties go diagonal, then stream step, then template step.
WarpingPath traceback(const CostMatrix& matrix, std::size_t end_stream_index);

// Column state of the boundary-free subsequence recurrence. After t+1
// updates, acc[m-1] is the cheapest DTW alignment of any X[s..t] to all of Y
// and start[m-1] is that s.
class SpringState {
 public:
  explicit SpringState(std::size_t m);

  void update(double x, std::span<const double> y);

  std::size_t m() const noexcept { return acc_.size(); }
  std::size_t t() const noexcept { return t_; }  // index of the last sample consumed
  bool empty() const noexcept { return !started_; }
  std::span<const double> acc() const noexcept { return acc_; }
  std::span<const std::size_t> start() const noexcept { return start_; }
  double distance() const noexcept { return acc_.back(); }
  std::size_t match_start() const noexcept { return start_.back(); }

 private:
  std::vector<double> acc_;
  std::vector<std::size_t> start_;
  std::vector<double> prev_acc_;
  std::vector<std::size_t> prev_start_;
  std::size_t t_ = 0;
  bool started_ = false;
};

// Functional form of SpringState::update.
SpringState spring_update(SpringState state, double x, std::span<const double> y);

}  // namespace bspring

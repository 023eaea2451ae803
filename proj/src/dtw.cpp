#include "bspring/dtw.hpp"

#include <algorithm>
#include <string>

#include "bspring/error.hpp"

namespace bspring {

std::size_t default_band(std::size_t n, std::size_t m) noexcept {
  const std::size_t longest = std::max(n, m);
  return (longest + 9) / 10;
}

std::size_t admissible_band(std::size_t n, std::size_t m) noexcept {
  return std::max(default_band(n, m), n > m ? n - m : m - n);
}

CostMatrix dtw_full(std::span<const double> x, std::span<const double> y,
                    std::optional<std::size_t> band, LocalCost cost) {
  if (x.empty() || y.empty()) throw NoPathError("dtw_full: empty sequence");
  CostMatrix mat;
  mat.n = x.size();
  mat.m = y.size();
  mat.band = band;
  mat.cost_kind = cost;
  mat.x.assign(x.begin(), x.end());
  mat.y.assign(y.begin(), y.end());
  mat.cells.assign(mat.n * mat.m, kUnreachable);
  if (band && (mat.n > mat.m ? mat.n - mat.m : mat.m - mat.n) > *band) {
    throw NoPathError("dtw_full: band " + std::to_string(*band) + " cannot connect " +
                      std::to_string(mat.n) + "x" + std::to_string(mat.m));
  }

  const std::size_t m = mat.m;
  for (std::size_t t = 0; t < mat.n; ++t) {
    std::size_t lo = 0, hi = m - 1;
    if (band) {
      lo = t > *band ? t - *band : 0;
      hi = std::min(m - 1, t + *band);
      if (lo > hi) continue;
    }
    double* row = mat.cells.data() + t * m;
    const double* up = t > 0 ? row - m : nullptr;
    for (std::size_t i = lo; i <= hi; ++i) {
      const double d = local_cost(cost, x[t], y[i]);
      if (t == 0 && i == 0) {
        row[0] = d;
        continue;
      }
      double best = kUnreachable;
      if (up && i > 0) best = up[i - 1];
      if (up) best = std::min(best, up[i]);
      if (i > 0) best = std::min(best, row[i - 1]);
      row[i] = d + best;
    }
  }
  return mat;
}

WarpingPath traceback(const CostMatrix& mat, std::size_t end_stream_index) {
  if (end_stream_index >= mat.n) throw NoPathError("traceback: endpoint beyond matrix");
  std::size_t t = end_stream_index;
  std::size_t i = mat.m - 1;
  if (!mat.in_band(t, i) || !std::isfinite(mat.at(t, i))) {
    throw NoPathError("traceback: endpoint outside band");
  }
  WarpingPath path;
  path.cost = mat.at(t, i);
  while (true) {
    path.pairs.emplace_back(t, i);
    path.local.push_back(local_cost(mat.cost_kind, mat.x[t], mat.y[i]));
    if (t == 0 && i == 0) break;
    double best = kUnreachable;
    std::size_t bt = t, bi = i;
    auto consider = [&](std::size_t pt, std::size_t pi) {
      const double v = mat.at(pt, pi);
      if (v < best) {
        best = v;
        bt = pt;
        bi = pi;
      }
    };
    if (t > 0 && i > 0) consider(t - 1, i - 1);
    if (t > 0) consider(t - 1, i);
    if (i > 0) consider(t, i - 1);
    if (!std::isfinite(best)) throw NoPathError("traceback: no finite predecessor");
    t = bt;
    i = bi;
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  std::reverse(path.local.begin(), path.local.end());
  return path;
}

SpringState::SpringState(std::size_t m)
    : acc_(m, kUnreachable), start_(m, 0), prev_acc_(m, kUnreachable), prev_start_(m, 0) {}

void SpringState::update(double x, std::span<const double> y) {
  const std::size_t m = acc_.size();
  const std::size_t t = started_ ? t_ + 1 : 0;
  acc_.swap(prev_acc_);
  start_.swap(prev_start_);

  // Row 0 restarts every step: a fresh match costs only the local term.
  acc_[0] = pairwise_dist(x, y[0]);
  start_[0] = t;
  for (std::size_t i = 1; i < m; ++i) {
    double best = prev_acc_[i - 1];
    std::size_t s = prev_start_[i - 1];
    if (prev_acc_[i] < best) {
      best = prev_acc_[i];
      s = prev_start_[i];
    }
    if (acc_[i - 1] < best) {
      best = acc_[i - 1];
      s = start_[i - 1];
    }
    acc_[i] = pairwise_dist(x, y[i]) + best;
    start_[i] = s;
  }
  t_ = t;
  started_ = true;
}

SpringState spring_update(SpringState state, double x, std::span<const double> y) {
  state.update(x, y);
  return state;
}

}  // namespace bspring

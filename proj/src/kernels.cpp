#include "bspring/kernels.hpp"


namespace bspring {

std::vector<double> spring_distance_trace(std::span<const double> stream, std::span<const double> templ) {
  std::vector<double> dist(stream.size(), kUnreachable);
  if (templ.empty()) return dist;
  SpringState state(templ.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    state.update(stream[i], templ);
    dist[i] = state.distance();
  }
  return dist;
}

std::vector<std::vector<double>> spring_distance_traces(std::span<const double> stream,
                                                        const std::vector<std::vector<double>>& templates,
                                                        ExecPolicy policy) {
  std::vector<std::vector<double>> out(templates.size());
  const auto k = static_cast<std::ptrdiff_t>(templates.size());
  if (policy == ExecPolicy::Serial) {
    for (std::ptrdiff_t j = 0; j < k; ++j) out[j] = spring_distance_trace(stream, templates[j]);
    return out;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < k; ++j) out[j] = spring_distance_trace(stream, templates[j]);
  return out;
}

std::vector<WarpingPath> align_to_reference(const std::vector<std::vector<double>>& sequences,
                                            std::span<const double> reference, LocalCost cost,
                                            ExecPolicy policy) {
  std::vector<WarpingPath> paths(sequences.size());
  const auto k = static_cast<std::ptrdiff_t>(sequences.size());
  auto align = [&](std::ptrdiff_t j) {
    const auto& s = sequences[j];
    const auto mat = dtw_full(s, reference, admissible_band(s.size(), reference.size()), cost);
    paths[j] = traceback(mat, s.size() - 1);
  };
  if (policy == ExecPolicy::Serial) {
    for (std::ptrdiff_t j = 0; j < k; ++j) align(j);
    return paths;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < k; ++j) align(j);
  return paths;
}

std::vector<double> pairwise_dtw_costs(const std::vector<std::vector<double>>& sequences, LocalCost cost,
                                       ExecPolicy policy) {
  const std::size_t k = sequences.size();
  std::vector<double> costs(k * k, 0.0);
  const auto pairs = static_cast<std::ptrdiff_t>(k * k);
  auto fill = [&](std::ptrdiff_t p) {
    const auto a = static_cast<std::size_t>(p) / k;
    const auto b = static_cast<std::size_t>(p) % k;
    if (b <= a) return;
    const auto& x = sequences[a];
    const auto& y = sequences[b];
    const double c = dtw_full(x, y, admissible_band(x.size(), y.size()), cost).final_cost();
    costs[a * k + b] = c;
    costs[b * k + a] = c;
  };
  if (policy == ExecPolicy::Serial) {
    for (std::ptrdiff_t p = 0; p < pairs; ++p) fill(p);
    return costs;
  }
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t p = 0; p < pairs; ++p) fill(p);
  return costs;
}

}  // namespace bspring

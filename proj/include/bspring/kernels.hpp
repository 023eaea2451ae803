#pragma once

// Data-parallel kernels. Each has an OpenMP path and a plain serial path;
// the serial path is the reference the tests compare against, and both must
// produce bit-identical results.

#include <cstddef>
#include <span>
#include <vector>

#include "bspring/dtw.hpp"

namespace bspring {

enum class ExecPolicy { Serial, Parallel };

// dist[i] = acc[m-1] after the Spring recurrence has consumed stream[i].
std::vector<double> spring_distance_trace(std::span<const double> stream, std::span<const double> templ);

// One trace per template, parallel across templates.
std::vector<std::vector<double>> spring_distance_traces(std::span<const double> stream,
                                                        const std::vector<std::vector<double>>& templates,
                                                        ExecPolicy policy = ExecPolicy::Parallel);

// DTW-aligns every sequence against `reference` (as the template axis) with
// admissible_band and returns the traceback paths, parallel across sequences.
std::vector<WarpingPath> align_to_reference(const std::vector<std::vector<double>>& sequences,
                                            std::span<const double> reference, LocalCost cost,
                                            ExecPolicy policy = ExecPolicy::Parallel);

// Symmetric matrix (row-major, size k*k) of banded DTW costs between all pairs.
std::vector<double> pairwise_dtw_costs(const std::vector<std::vector<double>>& sequences, LocalCost cost,
                                       ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace bspring

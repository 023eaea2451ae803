#include "bspring/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "bspring/error.hpp"

namespace bspring {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  // std::from_chars rejects a leading '+', strtod accepts it.
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

double SignalBatch::time_of(std::size_t global_index) const noexcept {
  return t0 + (static_cast<double>(global_index) - static_cast<double>(start_index)) / fs;
}

SignalBatch make_batch(std::vector<double> samples, double fs, double t0, std::size_t start_index) {
  if (samples.empty()) throw InputError("signal batch is empty");
  if (!(fs > 0.0) || !std::isfinite(fs)) throw ConfigError("sampling rate must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw InputError("non-finite sample at index " + std::to_string(i));
    }
  }
  return SignalBatch{std::move(samples), fs, t0, start_index};
}

SignalBatch slice(const SignalBatch& batch, std::size_t begin, std::size_t end) {
  if (begin < batch.start_index || end > batch.end_index() || begin >= end) {
    throw InputError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside batch");
  }
  const auto off = static_cast<std::ptrdiff_t>(begin - batch.start_index);
  const auto len = static_cast<std::ptrdiff_t>(end - begin);
  std::vector<double> sub(batch.samples.begin() + off, batch.samples.begin() + off + len);
  return SignalBatch{std::move(sub), batch.fs, batch.time_of(begin), begin};
}

SignalBatch parse_csv(std::istream& in, std::optional<double> fs_override, const std::string& source) {
  std::optional<double> fs_header;
  std::vector<double> samples;
  std::string line;
  std::size_t line_no = 0;
  bool any_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = trim(line);
    if (s.empty()) continue;
    if (!any_content && s.starts_with("fs=")) {
      any_content = true;
      const auto v = parse_double(trim(s.substr(3)));
      if (!v || *v <= 0.0) throw ParseError(source, line_no, "invalid fs header");
      fs_header = v;
      continue;
    }
    any_content = true;
    const auto v = parse_double(s);
    if (!v) throw ParseError(source, line_no, "cannot parse sample '" + std::string(s) + "'");
    samples.push_back(*v);
  }
  if (samples.empty()) throw InputError(source + ": empty input");
  const auto fs = fs_override ? fs_override : fs_header;
  if (!fs) throw ConfigError(source + ": no sampling rate (add an fs= header or pass --fs)");
  return make_batch(std::move(samples), *fs);
}

SignalBatch load_csv(const std::filesystem::path& path, std::optional<double> fs_override) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_csv(in, fs_override, path.string());
}

void write_csv(const std::filesystem::path& path, const SignalBatch& batch) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "fs=" << std::setprecision(17) << batch.fs << '\n';
  for (double v : batch.samples) out << v << '\n';
}

std::vector<double> first_difference(std::span<const double> x) {
  if (x.size() < 2) return {};
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

std::vector<double> min_max_scale(std::span<const double> x, bool* degenerate) {
  std::vector<double> out(x.size(), 0.0);
  if (x.empty()) {
    if (degenerate) *degenerate = true;
    return out;
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double range = *hi - *lo;
  if (degenerate) *degenerate = !(range > 0.0);
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - *lo) / range;
  return out;
}

DerivedViews derive_views(const SignalBatch& batch) {
  if (batch.size() < 2) throw InsufficientDataError("derive_views needs at least 2 samples");
  DerivedViews v;
  v.deriv = first_difference(batch.samples);
  v.deriv_scaled = min_max_scale(v.deriv, &v.degenerate);
  const double mean =
      std::accumulate(batch.samples.begin(), batch.samples.end(), 0.0) / static_cast<double>(batch.size());
  v.normalized.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) v.normalized[i] = batch.samples[i] - mean;
  return v;
}

std::vector<double> comparison_features(std::span<const double> samples) {
  auto d = first_difference(samples);
  if (d.empty()) return d;
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return std::vector<double>(d.size(), 0.0);
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  for (auto& v : d) v = (v - mean) / range;
  return d;
}

}  // namespace bspring

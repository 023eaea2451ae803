#include "bspring/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bspring/error.hpp"

namespace bspring {

namespace {

using cplx = std::complex<double>;

Biquad section_from_poles(cplx z1, cplx z2) {
  // zeros at z = 1 and z = -1: (1 - z^-1)(1 + z^-1) = 1 - z^-2
  Biquad s;
  s.b0 = 1.0;
  s.b1 = 0.0;
  s.b2 = -1.0;
  s.a1 = -(z1 + z2).real();
  s.a2 = (z1 * z2).real();
  return s;
}

cplx section_response(const Biquad& s, cplx zinv) {
  const cplx num = s.b0 + s.b1 * zinv + s.b2 * zinv * zinv;
  const cplx den = 1.0 + s.a1 * zinv + s.a2 * zinv * zinv;
  return num / den;
}

// Steady-state DF2T state of each section for a constant input x0.
std::vector<double> steady_state(std::span<const Biquad> sections, double x0) {
  std::vector<double> zi;
  zi.reserve(2 * sections.size());
  double x = x0;
  for (const auto& s : sections) {
    const double dc_gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double y = dc_gain * x;
    const double z2 = s.b2 * x - s.a2 * y;
    const double z1 = s.b1 * x - s.a1 * y + z2;
    zi.push_back(z1);
    zi.push_back(z2);
    x = y;
  }
  return zi;
}

}  // namespace

std::vector<Biquad> design_butterworth_bandpass(double low_hz, double high_hz, double fs, int order) {
  if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");
  if (order < 2 || order % 2 != 0) throw ConfigError("bandpass order must be even and >= 2");
  if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs / 2.0)) {
    throw ConfigError("bandpass cutoffs must satisfy 0 < low < high < fs/2");
  }
  const int proto = order / 2;
  const double k = 2.0 * fs;
  const double w1 = k * std::tan(std::numbers::pi * low_hz / fs);
  const double w2 = k * std::tan(std::numbers::pi * high_hz / fs);
  const double w0sq = w1 * w2;
  const double bw = w2 - w1;
  auto to_z = [k](cplx s) { return (k + s) / (k - s); };

  std::vector<Biquad> sections;
  for (int i = 0; i < proto; ++i) {
    const double theta = std::numbers::pi * (2.0 * i + proto + 1) / (2.0 * proto);
    const cplx p = std::polar(1.0, theta);
    if (p.imag() < -1e-12) continue;  // handled with its conjugate
    const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0sq);
    const cplx s1 = (p * bw + disc) / 2.0;
    const cplx s2 = (p * bw - disc) / 2.0;
    if (std::abs(p.imag()) <= 1e-12) {
      sections.push_back(section_from_poles(to_z(s1), to_z(s2)));
    } else {
      sections.push_back(section_from_poles(to_z(s1), std::conj(to_z(s1))));
      sections.push_back(section_from_poles(to_z(s2), std::conj(to_z(s2))));
    }
  }

  // Unity gain at the digital image of the analog center frequency.
  const double f_center = fs / std::numbers::pi * std::atan(std::sqrt(w0sq) / k);
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * f_center / fs);
  for (auto& s : sections) {
    const double g = std::abs(section_response(s, zinv));
    s.b0 /= g;
    s.b1 /= g;
    s.b2 /= g;
  }
  return sections;
}

std::complex<double> frequency_response(std::span<const Biquad> sections, double f_hz, double fs) {
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs);
  cplx h = 1.0;
  for (const auto& s : sections) h *= section_response(s, zinv);
  return h;
}

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x,
                            std::vector<double> state) {
  state.resize(2 * sections.size(), 0.0);
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t j = 0; j < sections.size(); ++j) {
    const auto& s = sections[j];
    double z1 = state[2 * j];
    double z2 = state[2 * j + 1];
    for (auto& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x) {
  if (x.empty()) return {};
  const std::size_t n = x.size();
  const std::size_t padlen = std::min<std::size_t>(n - 1, 3 * (2 * sections.size() + 1));

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto fwd = sosfilt(sections, ext, steady_state(sections, ext.front()));
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = sosfilt(sections, fwd, steady_state(sections, fwd.front()));
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + static_cast<std::ptrdiff_t>(padlen),
          bwd.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

SignalBatch bandpass_filter(const SignalBatch& batch, double low_hz, double high_hz, int order) {
  const auto sections = design_butterworth_bandpass(low_hz, high_hz, batch.fs, order);
  SignalBatch out = batch;
  out.samples = sosfiltfilt(sections, batch.samples);
  return out;
}

}  // namespace bspring

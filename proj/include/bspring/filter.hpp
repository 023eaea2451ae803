#pragma once

#include <complex>
#include <span>
#include <vector>

#include "bspring/signal.hpp"

namespace bspring {

// One second-order section, transposed direct form II, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Digital Butterworth bandpass via the bilinear transform with prewarped
// edges. `order` is the total number of poles and must be even; the
// lowpass prototype has order / 2 poles. Gain is unity at the geometric
// center frequency.
std::vector<Biquad> design_butterworth_bandpass(double low_hz, double high_hz, double fs, int order);

std::complex<double> frequency_response(std::span<const Biquad> sections, double f_hz, double fs);

// Causal cascade, starting from the given per-section states (2 per section).
std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x,
                            std::vector<double> state);

// Forward-backward cascade with odd-reflection padding and steady-state
// initial conditions. Zero phase; magnitude response is |H|^2.
std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x);

SignalBatch bandpass_filter(const SignalBatch& batch, double low_hz = 0.5, double high_hz = 5.0,
                            int order = 4);

}  // namespace bspring

#include "bspring/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>

#include "bspring/error.hpp"

namespace bspring {

namespace {

constexpr double kSysPhase = 0.2;
constexpr double kRiseWidth = 0.07;
constexpr double kFallWidth = 0.12;
constexpr double kRunoff = 0.3;
constexpr double kRunoffTau = 0.5;
constexpr double kDicroticPhase = 0.5;
constexpr double kDicroticWidth = 0.08;

double gauss(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z);
}

double pulse(double phase, double dicrotic) {
  double sys;
  if (phase < kSysPhase) {
    sys = gauss(phase, kSysPhase, kRiseWidth);
  } else {
    sys = (1.0 - kRunoff) * gauss(phase, kSysPhase, kFallWidth) +
          kRunoff * std::exp(-(phase - kSysPhase) / kRunoffTau);
  }
  return sys + dicrotic * gauss(phase, kDicroticPhase, kDicroticWidth);
}

double profile_at(const std::vector<double>& knots, double t, double duration) {
  if (knots.size() == 1) return knots.front();
  const double pos = std::clamp(t / duration, 0.0, 1.0) * static_cast<double>(knots.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), knots.size() - 2);
  const double frac = pos - static_cast<double>(i);
  return knots[i] + frac * (knots[i + 1] - knots[i]);
}

struct Cycle {
  double start;   // seconds
  double period;  // seconds
  double amplitude;
  double dicrotic;
};

}  // namespace

SynthRecord synth_ppg(const SynthConfig& c) {
  if (c.hr_profile_bpm.empty() || c.dicrotic_profile.empty()) {
    throw ConfigError("synth profiles must have at least one knot");
  }
  for (double hr : c.hr_profile_bpm) {
    if (hr < 40.0 || hr > 180.0) throw ConfigError("heart rate profile must stay within [40, 180] bpm");
  }
  if (c.fs < 100.0) throw ConfigError("synth sampling rate must be >= 100 Hz");
  if (!(c.duration_s > 0.0)) throw ConfigError("synth duration must be positive");
  if (c.resp_mod_depth < 0.0 || c.resp_mod_depth >= 1.0) throw ConfigError("resp_mod_depth must be in [0, 1)");
  if (c.noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");

  const auto n = static_cast<std::size_t>(std::llround(c.duration_s * c.fs));
  const double omega = 2.0 * std::numbers::pi * c.resp_rate_hz;

  auto make_cycle = [&](double start) {
    const double resp = std::sin(omega * start);
    const double base = 60.0 / profile_at(c.hr_profile_bpm, start, c.duration_s);
    return Cycle{start, base * (1.0 + 0.25 * c.resp_mod_depth * resp),
                 1.0 + c.resp_mod_depth * resp,
                 profile_at(c.dicrotic_profile, start, c.duration_s)};
  };

  // One lead-in cycle so the record opens on a diastolic run-off.
  std::vector<Cycle> cycles;
  const double first_onset = 0.25;
  {
    const Cycle lead = make_cycle(0.0);
    cycles.push_back({first_onset - lead.period, lead.period, lead.amplitude, lead.dicrotic});
  }
  for (double start = first_onset; start < c.duration_s + 1.0;) {
    cycles.push_back(make_cycle(start));
    start += cycles.back().period;
  }

  std::vector<double> clean(n, 0.0);
  for (const auto& cy : cycles) {
    const auto first = static_cast<std::ptrdiff_t>(std::floor((cy.start - 0.5 * cy.period) * c.fs));
    const auto last = static_cast<std::ptrdiff_t>(std::ceil((cy.start + 4.0 * cy.period) * c.fs));
    for (auto i = std::max<std::ptrdiff_t>(first, 0); i <= last && i < static_cast<std::ptrdiff_t>(n); ++i) {
      const double phase = (static_cast<double>(i) / c.fs - cy.start) / cy.period;
      if (phase < -0.5) continue;
      clean[static_cast<std::size_t>(i)] += cy.amplitude * pulse(phase, cy.dicrotic);
    }
  }

  // Ground truth on the noise-free waveform.
  std::vector<std::size_t> onsets;
  std::vector<double> periods;
  for (std::size_t k = 1; k < cycles.size(); ++k) {
    const auto& cy = cycles[k];
    const auto lo = static_cast<std::ptrdiff_t>(std::floor((cy.start - 0.15 * cy.period) * c.fs));
    const auto hi = static_cast<std::ptrdiff_t>(std::ceil((cy.start + 0.1 * cy.period) * c.fs));
    if (lo < 1 || hi > static_cast<std::ptrdiff_t>(n) - 2) continue;
    const auto it = std::min_element(clean.begin() + lo, clean.begin() + hi + 1);
    onsets.push_back(static_cast<std::size_t>(it - clean.begin()));
    periods.push_back(cy.period);
  }

  SynthGroundTruth truth;
  for (std::size_t k = 0; k + 1 < onsets.size(); ++k) {
    const std::size_t on = onsets[k];
    const std::size_t end = onsets[k + 1];
    const auto sys_hi = std::min(end, on + static_cast<std::size_t>(0.45 * periods[k] * c.fs));
    const auto sys = static_cast<std::size_t>(
        std::max_element(clean.begin() + static_cast<std::ptrdiff_t>(on),
                         clean.begin() + static_cast<std::ptrdiff_t>(sys_hi)) - clean.begin());
    std::size_t ms = on;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = on; i < end; ++i) {
      const double d = clean[i + 1] - clean[i];
      if (d > best) {
        best = d;
        ms = i;
      }
    }
    truth.onset_idx.push_back(on);
    truth.ms_idx.push_back(ms);
    truth.sys_idx.push_back(sys);
    truth.end_idx.push_back(end);
    truth.ibi_ms.push_back(1000.0 * periods[k]);
    truth.ibi_time_s.push_back(static_cast<double>(end) / c.fs);
  }

  std::vector<double> samples = clean;
  if (c.noise_sigma > 0.0) {
    const auto [lo, hi] = std::minmax_element(clean.begin(), clean.end());
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> noise(0.0, c.noise_sigma * (*hi - *lo));
    for (auto& v : samples) v += noise(rng);
  }
  return SynthRecord{make_batch(std::move(samples), c.fs), std::move(truth)};
}

void write_truth_csv(const std::filesystem::path& path, const SynthRecord& record) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  const auto& t = record.truth;
  const auto& sig = record.signal;
  out << "class,sample_index,time_s\n" << std::setprecision(10);
  auto row = [&](const char* cls, std::size_t idx) { out << cls << ',' << idx << ',' << sig.time_of(idx) << '\n'; };
  for (std::size_t i = 0; i < t.onset_idx.size(); ++i) {
    row("Onset", t.onset_idx[i]);
    row("MS", t.ms_idx[i]);
    row("Sys", t.sys_idx[i]);
  }
  if (!t.end_idx.empty()) row("Onset", t.end_idx.back());
}

void write_truth_ibi_csv(const std::filesystem::path& path, const SynthGroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "time_s,ibi_ms\n" << std::setprecision(12);
  for (std::size_t i = 0; i < truth.ibi_ms.size(); ++i) {
    out << truth.ibi_time_s[i] << ',' << truth.ibi_ms[i] << '\n';
  }
}

}  // namespace bspring

// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/preprocess/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "deepstf/error.hpp"

namespace deepstf {
namespace {

using cplx = std::complex<double>;

Biquad section_from_poles(cplx pole, double b0, double b1, double b2) {
  Biquad q;
  q.b0 = b0;
  q.b1 = b1;
  q.b2 = b2;
  q.a1 = -2.0 * pole.real();
  q.a2 = std::norm(pole);
  return q;
}

template <typename T>
std::vector<T> run_cascade(std::span<const T> signal, const BiquadCascade& cascade) {
  std::vector<double> y(signal.begin(), signal.end());
  for (const auto& s : cascade.sections) {
    double z1 = 0.0, z2 = 0.0;
    for (auto& v : y) {
      const double x = v;
      const double out = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * out + z2;
      z2 = s.b2 * x - s.a2 * out;
      v = out;
    }
  }
  return {y.begin(), y.end()};
}

template <typename T>
void require_finite(std::span<const T> signal) {
  for (T v : signal) {
    if (!std::isfinite(v)) throw DataError("filter input contains a non-finite value");
  }
}

}  // namespace

bool Biquad::is_stable() const {
  // Roots of z^2 + a1 z + a2 lie inside the unit circle (Jury criterion).
  return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
}

std::complex<double> Biquad::response(double f, double fs) const {
  const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
  const cplx z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

bool BiquadCascade::is_stable() const {
  return std::all_of(sections.begin(), sections.end(), [](const Biquad& s) { return s.is_stable(); });
}

std::complex<double> BiquadCascade::response(double f, double fs) const {
  cplx h = 1.0;
  for (const auto& s : sections) h *= s.response(f, fs);
  return h;
}

double BiquadCascade::gain_db(double f, double fs) const { return 20.0 * std::log10(std::abs(response(f, fs))); }

std::string BiquadCascade::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "# " << description << "\n# b0 b1 b2 a1 a2\n";
  for (const auto& s : sections) os << s.b0 << ' ' << s.b1 << ' ' << s.b2 << ' ' << s.a1 << ' ' << s.a2 << '\n';
  return os.str();
}

BiquadCascade design_bandpass(double fs, double lo, double hi, int order) {
  if (!(fs > 0.0)) throw ConfigError("sample rate must be positive");
  if (!(lo > 0.0) || !(hi > lo)) throw ConfigError("bandpass requires 0 < lo < hi");
  if (hi >= fs / 2.0) throw ConfigError("bandpass cutoff at or above Nyquist");
  if (order <= 0 || order % 2 != 0) throw ConfigError("bandpass order must be even and positive");

  const int n = order / 2;  // lowpass prototype order
  const double c = 2.0 * fs;
  const double w_lo = c * std::tan(std::numbers::pi * lo / fs);
  const double w_hi = c * std::tan(std::numbers::pi * hi / fs);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  // Analog bandpass poles: each prototype pole p yields the roots of
  // s^2 - p*bw*s + w0^2; keep those in the upper half plane.
  std::vector<cplx> poles;
  for (int k = 0; k < n; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n);
    const cplx p = std::polar(1.0, theta);
    const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0_sq);
    for (const cplx s : {(p * bw + disc) / 2.0, (p * bw - disc) / 2.0}) {
      const cplx z = (c + s) / (c - s);
      if (z.imag() > 0.0) poles.push_back(z);
    }
  }
  std::sort(poles.begin(), poles.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });

  // The digital center frequency maps to the analog geometric center.
  const double f_center = fs / std::numbers::pi * std::atan(std::sqrt(w0_sq) / c);
  BiquadCascade out;
  for (const cplx& p : poles) {
    Biquad q = section_from_poles(p, 1.0, 0.0, -1.0);  // zeros at z = +1 and z = -1
    const double g = 1.0 / std::abs(q.response(f_center, fs));
    q.b0 *= g;
    q.b2 *= g;
    out.sections.push_back(q);
  }
  std::ostringstream desc;
  desc << "butterworth bandpass order " << order << ", " << lo << "-" << hi << " Hz at fs=" << fs;
  out.description = desc.str();
  if (!out.is_stable()) throw ConfigError("bandpass design is numerically unstable");
  return out;
}

BiquadCascade design_notch(double fs, double f0, double bandwidth) {
  if (!(fs > 0.0)) throw ConfigError("sample rate must be positive");
  if (!(f0 > 0.0) || f0 >= fs / 2.0) throw ConfigError("notch frequency must lie in (0, Nyquist)");
  if (!(bandwidth > 0.0)) throw ConfigError("notch bandwidth must be positive");
  const double w0 = 2.0 * std::numbers::pi * f0 / fs;
  const double alpha = std::sin(w0) / (2.0 * (f0 / bandwidth));
  const double a0 = 1.0 + alpha;
  Biquad q;
  q.b0 = 1.0 / a0;
  q.b1 = -2.0 * std::cos(w0) / a0;
  q.b2 = 1.0 / a0;
  q.a1 = -2.0 * std::cos(w0) / a0;
  q.a2 = (1.0 - alpha) / a0;
  BiquadCascade out;
  out.sections.push_back(q);
  std::ostringstream desc;
  desc << "notch " << f0 << " Hz, bandwidth " << bandwidth << " Hz at fs=" << fs;
  out.description = desc.str();
  return out;
}

std::vector<double> filter_forward(std::span<const double> signal, const BiquadCascade& cascade) {
  require_finite(signal);
  return run_cascade(signal, cascade);
}

std::vector<float> filter_forward(std::span<const float> signal, const BiquadCascade& cascade) {
  require_finite(signal);
  return run_cascade(signal, cascade);
}

}  // namespace deepstf

// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace deepstf {

/// Second-order section, a0 normalized to 1:
///   y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  /// Poles strictly inside the unit circle.
  bool is_stable() const;
  std::complex<double> response(double f, double fs) const;
};

struct BiquadCascade {
  std::vector<Biquad> sections;
  std::string description;

  bool is_stable() const;
  std::complex<double> response(double f, double fs) const;
  double gain_db(double f, double fs) const;
  /// One "b0 b1 b2 a1 a2" line per section, preceded by a comment line.
  std::string to_text() const;
};

/// Butterworth bandpass of total order `order` (even), obtained from an
/// order/2 analog lowpass prototype, lowpass-to-bandpass transform and a
/// prewarped bilinear transform.
BiquadCascade design_bandpass(double fs, double lo, double hi, int order);

/// Single-biquad notch at f0 with the given -3 dB bandwidth.
BiquadCascade design_notch(double fs, double f0, double bandwidth);

/// Causal filtering with zero initial state (transposed direct form II).
std::vector<double> filter_forward(std::span<const double> signal, const BiquadCascade& cascade);
std::vector<float> filter_forward(std::span<const float> signal, const BiquadCascade& cascade);

}  // namespace deepstf

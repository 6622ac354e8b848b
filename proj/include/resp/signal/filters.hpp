#pragma once

#include <cmath>
#include <vector>

namespace resp {

/// RBJ-cookbook biquad, direct form I. Used by the synthetic generators.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  static Biquad lowpass(double fs, double f0, double q = M_SQRT1_2) {
    const double w = 2.0 * M_PI * f0 / fs, c = std::cos(w), alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    return {(1.0 - c) / 2.0 / a0, (1.0 - c) / a0, (1.0 - c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
  }

  static Biquad highpass(double fs, double f0, double q = M_SQRT1_2) {
    const double w = 2.0 * M_PI * f0 / fs, c = std::cos(w), alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    return {(1.0 + c) / 2.0 / a0, -(1.0 + c) / a0, (1.0 + c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
  }

  // constant 0 dB peak gain
  static Biquad bandpass(double fs, double f0, double q) {
    const double w = 2.0 * M_PI * f0 / fs, c = std::cos(w), alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    return {alpha / a0, 0.0, -alpha / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
  }

  static Biquad peaking(double fs, double f0, double q, double gain_db) {
    const double A = std::pow(10.0, gain_db / 40.0);
    const double w = 2.0 * M_PI * f0 / fs, c = std::cos(w), alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha / A;
    return {(1.0 + alpha * A) / a0, -2.0 * c / a0, (1.0 - alpha * A) / a0, -2.0 * c / a0, (1.0 - alpha / A) / a0};
  }

  void apply(std::vector<double>& x) const {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (double& v : x) {
      const double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = v;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }
};

/// Fourth-order Butterworth as two cascaded biquads.
inline void butter4_lowpass(std::vector<double>& x, double fs, double f0) {
  Biquad::lowpass(fs, f0, 0.54119610).apply(x);
  Biquad::lowpass(fs, f0, 1.30656296).apply(x);
}

inline void butter4_highpass(std::vector<double>& x, double fs, double f0) {
  Biquad::highpass(fs, f0, 0.54119610).apply(x);
  Biquad::highpass(fs, f0, 1.30656296).apply(x);
}

}  // namespace resp

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "resp/error.hpp"

namespace resp {

inline double sample_mean(const std::vector<double>& x) {
  long double s = 0.0L;
  for (double v : x) s += v;
  return static_cast<double>(s / static_cast<long double>(x.size()));
}

/// Unbiased (n - 1) variance; zero for fewer than two values.
inline double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = sample_mean(x);
  long double s = 0.0L;
  for (double v : x) s += static_cast<long double>(v - m) * (v - m);
  return static_cast<double>(s / static_cast<long double>(x.size() - 1));
}

inline double sample_sd(const std::vector<double>& x) { return std::sqrt(sample_variance(x)); }

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(Errc::LengthMismatch, "pearson: sequences differ in length");
  if (xs.size() < 2) throw Error(Errc::TooFewPoints, "pearson needs at least two points");
  const double mx = sample_mean(xs), my = sample_mean(ys);
  long double sxy = 0.0L, sxx = 0.0L, syy = 0.0L;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const long double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0L || syy == 0.0L) throw Error(Errc::DegenerateVariance, "pearson: constant input");
  const double r = static_cast<double>(sxy / std::sqrt(sxx * syy));
  return std::clamp(r, -1.0, 1.0);
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 0.5;  // one-tailed, H1: mean(a) > mean(b)
  double mean_a = 0.0, mean_b = 0.0;
  double sd_a = 0.0, sd_b = 0.0;
  std::size_t n_a = 0, n_b = 0;
};

/// Upper tail P(T > t) of Student's t with df degrees of freedom.
inline double student_t_upper(double t, double df) {
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * boost::math::ibeta(df / 2.0, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

inline WelchResult welch_t_one_tailed(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw Error(Errc::TooFewSamples, "Welch test needs two samples per side");
  WelchResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  r.mean_a = sample_mean(a);
  r.mean_b = sample_mean(b);
  const double va = sample_variance(a), vb = sample_variance(b);
  r.sd_a = std::sqrt(va);
  r.sd_b = std::sqrt(vb);
  const double qa = va / static_cast<double>(r.n_a), qb = vb / static_cast<double>(r.n_b);
  const double se2 = qa + qb;
  if (se2 == 0.0) {
    // Both sides constant: only a zero difference has a defined statistic.
    if (r.mean_a != r.mean_b) throw Error(Errc::DegenerateVariance, "Welch test: zero variance on both sides");
    r.t = 0.0;
    r.df = static_cast<double>(r.n_a + r.n_b - 2);
    r.p = 0.5;
    return r;
  }
  r.t = (r.mean_a - r.mean_b) / std::sqrt(se2);
  r.df = se2 * se2 / (qa * qa / static_cast<double>(r.n_a - 1) + qb * qb / static_cast<double>(r.n_b - 1));
  r.p = student_t_upper(r.t, r.df);
  return r;
}

}  // namespace resp

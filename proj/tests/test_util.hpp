#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include <catch_amalgamated.hpp>
#include "resp/eigen.hpp"
#include <unsupported/Eigen/FFT>

#include "resp/error.hpp"
#include "resp/seed.hpp"

// Passes when `expr` throws resp::Error with code `errc`.
#define REQUIRE_ERRC(expr, errc)                                         \
  do {                                                                   \
    bool thrown_ = false;                                                \
    try {                                                                \
      (void)(expr);                                                      \
    } catch (const resp::Error& e_) {                                    \
      thrown_ = true;                                                    \
      INFO(e_.what());                                                   \
      REQUIRE(e_.code() == (errc));                                      \
    }                                                                    \
    REQUIRE(thrown_);                                                    \
  } while (0)

namespace testutil {

/// Fresh empty directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("resp-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> random_signal(std::size_t n, std::uint64_t seed, double amp = 0.5) {
  resp::Rng rng = resp::make_rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = amp * (2.0 * resp::uniform01(rng) - 1.0);
  return x;
}

/// Magnitude spectrum |FFT(x)| over bins 0..n/2.
inline std::vector<double> magnitude_spectrum(const std::vector<double>& x) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> out;
  fft.fwd(out, x);
  std::vector<double> mag(x.size() / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(out[k]);
  return mag;
}

inline std::size_t argmax(const std::vector<double>& v, std::size_t from = 0) {
  std::size_t best = from;
  for (std::size_t i = from; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline std::vector<double> sine(double hz, double seconds, int rate, double amp = 0.5) {
  std::vector<double> x(static_cast<std::size_t>(std::llround(seconds * rate)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / rate);
  return x;
}

}  // namespace testutil

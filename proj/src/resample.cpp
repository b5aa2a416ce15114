#include "emanprint/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "emanprint/error.hpp"

namespace emanprint::dsp {

namespace {

// Zeroth-order modified Bessel function, power series.
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = 0.25 * x * x;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum)
      break;
  }
  return sum;
}

constexpr double kKaiserBeta = 9.0;

} // namespace

Resampler::Resampler(int up, int down, int half_width) {
  if (up < 1 || down < 1 || half_width < 1)
    throw Error(ErrorKind::InvalidArgument, "resampler ratio and width must be positive");
  const int g = std::gcd(up, down);
  up_ = up / g;
  down_ = down / g;
  // Filter runs at the input rate; widen it when decimating.
  const double cutoff = 0.95 * std::min(1.0, static_cast<double>(up_) / down_);
  const int half = static_cast<int>(std::ceil(half_width / std::min(1.0, cutoff)));
  taps_ = 2 * half;
  table_.resize(up_, taps_);
  const double norm = bessel_i0(kKaiserBeta);
  for (int p = 0; p < up_; ++p) {
    const double frac = static_cast<double>(p) / up_;
    for (int j = 0; j < taps_; ++j) {
      const double d = frac - static_cast<double>(j - half + 1); // t - k
      const double r = d / half;
      const double window =
          std::abs(r) >= 1.0 ? 0.0 : bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) / norm;
      const double arg = std::numbers::pi * cutoff * d;
      const double sinc = d == 0.0 ? 1.0 : std::sin(arg) / arg;
      table_(p, j) = cutoff * sinc * window;
    }
  }
}

Eigen::ArrayXd Resampler::operator()(const Eigen::ArrayXd &x) const {
  const auto n = x.size();
  const Eigen::Index out_n = (n * up_ + down_ - 1) / down_;
  Eigen::ArrayXd y(out_n);
  const int half = taps_ / 2;
  for (Eigen::Index m = 0; m < out_n; ++m) {
    const Eigen::Index num = m * down_;
    const Eigen::Index base = num / up_;
    const auto phase = static_cast<Eigen::Index>(num % up_);
    double acc = 0.0;
    for (int j = 0; j < taps_; ++j) {
      const Eigen::Index k = base + j - half + 1;
      if (k >= 0 && k < n)
        acc += table_(phase, j) * x[k];
    }
    y[m] = acc;
  }
  return y;
}

Eigen::ArrayXd resample(const Eigen::ArrayXd &x, int up, int down) {
  return Resampler(up, down)(x);
}

} // namespace emanprint::dsp

#include "emanprint/fft.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "emanprint/error.hpp"

namespace emanprint::dsp {

namespace {

using Complex = std::complex<double>;

// kissfft handles prime radices with an O(N * p) butterfly; above this
// factor the chirp-z route is cheaper.
constexpr Eigen::Index kBluesteinThreshold = 61;

Eigen::FFT<double> &engine() {
  thread_local Eigen::FFT<double> instance;
  return instance;
}

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index m = 1;
  while (m < n)
    m <<= 1;
  return m;
}

void kiss_forward(Complex *dst, const Complex *src, Eigen::Index n) {
  engine().fwd(dst, src, n);
}

// Chirp-z evaluation of an arbitrary-length DFT through power-of-two
// convolution.
Eigen::ArrayXcd bluestein(const Eigen::ArrayXcd &x) {
  const Eigen::Index n = x.size();
  const Eigen::Index m = next_pow2(2 * n - 1);
  Eigen::ArrayXcd chirp(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto k2 = static_cast<long double>((k * k) % (2 * n));
    const double angle = static_cast<double>(std::numbers::pi_v<long double> * k2 / n);
    chirp[k] = std::polar(1.0, -angle);
  }
  Eigen::ArrayXcd a = Eigen::ArrayXcd::Zero(m);
  Eigen::ArrayXcd b = Eigen::ArrayXcd::Zero(m);
  a.head(n) = x * chirp;
  b[0] = std::conj(chirp[0]);
  for (Eigen::Index k = 1; k < n; ++k) {
    b[k] = std::conj(chirp[k]);
    b[m - k] = std::conj(chirp[k]);
  }
  Eigen::ArrayXcd fa(m), fb(m);
  kiss_forward(fa.data(), a.data(), m);
  kiss_forward(fb.data(), b.data(), m);
  Eigen::ArrayXcd product = fa * fb;
  Eigen::ArrayXcd conv(m);
  engine().inv(conv.data(), product.data(), m);
  return conv.head(n) * chirp;
}

} // namespace

Eigen::Index largest_prime_factor(Eigen::Index n) {
  Eigen::Index largest = 1;
  for (Eigen::Index p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      largest = p;
      n /= p;
    }
  }
  return n > 1 ? std::max(largest, n) : largest;
}

Eigen::ArrayXcd fft(const Eigen::ArrayXcd &x) {
  const Eigen::Index n = x.size();
  if (n == 0)
    throw Error(ErrorKind::EmptySignal, "fft of empty sequence");
  if (n == 1)
    return x;
  if (largest_prime_factor(n) > kBluesteinThreshold)
    return bluestein(x);
  Eigen::ArrayXcd out(n);
  kiss_forward(out.data(), x.data(), n);
  return out;
}

Eigen::ArrayXcd ifft(const Eigen::ArrayXcd &spectrum) {
  const Eigen::Index n = spectrum.size();
  return fft(spectrum.conjugate()).conjugate() / static_cast<double>(n);
}

Eigen::ArrayXcd rfft(const Eigen::ArrayXd &x) {
  const Eigen::Index n = x.size();
  if (n == 0)
    throw Error(ErrorKind::EmptySignal, "rfft of empty sequence");
  if (n % 4 == 0 && largest_prime_factor(n) <= kBluesteinThreshold) {
    // kissfft's packed real transform needs N divisible by 4 (and fills
    // the full spectrum unless asked for half).
    auto &e = engine();
    e.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    Eigen::ArrayXcd out(n / 2 + 1);
    e.fwd(out.data(), x.data(), n);
    e.ClearFlag(Eigen::FFT<double>::HalfSpectrum);
    return out;
  }
  return fft(x.cast<Complex>()).head(n / 2 + 1);
}

Eigen::ArrayXd irfft(const Eigen::ArrayXcd &half_spectrum, Eigen::Index n) {
  if (half_spectrum.size() != n / 2 + 1)
    throw Error(ErrorKind::DimensionMismatch, "irfft: bin count does not match length");
  Eigen::ArrayXcd full(n);
  full.head(n / 2 + 1) = half_spectrum;
  for (Eigen::Index k = n / 2 + 1; k < n; ++k)
    full[k] = std::conj(half_spectrum[n - k]);
  return ifft(full).real();
}

} // namespace emanprint::dsp

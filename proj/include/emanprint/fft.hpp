#pragma once

#include <Eigen/Core>

namespace emanprint::dsp {

/// Forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N). Any length N >= 1.
Eigen::ArrayXcd fft(const Eigen::ArrayXcd &x);

/// Inverse DFT including the 1/N factor.
Eigen::ArrayXcd ifft(const Eigen::ArrayXcd &spectrum);

/// One-sided forward DFT of a real sequence: N/2 + 1 bins.
Eigen::ArrayXcd rfft(const Eigen::ArrayXd &x);

/// Inverse of rfft for a real sequence of length n.
Eigen::ArrayXd irfft(const Eigen::ArrayXcd &half_spectrum, Eigen::Index n);

/// Largest prime factor of n (1 for n <= 1).
Eigen::Index largest_prime_factor(Eigen::Index n);

} // namespace emanprint::dsp

#pragma once

#include <Eigen/Core>

namespace emanprint::dsp {

/// Rational-ratio resampler (up / down) built on a Kaiser-windowed sinc.
/// Output length is ceil(n * up / down). The low-pass cutoff sits at 95% of
/// the lower of the two Nyquist rates.
class Resampler {
public:
  Resampler(int up, int down, int half_width = 32);

  Eigen::ArrayXd operator()(const Eigen::ArrayXd &x) const;

  int up() const { return up_; }
  int down() const { return down_; }

private:
  int up_;
  int down_;
  int taps_; ///< per phase, 2 * half_width input samples
  Eigen::MatrixXd table_; ///< phase x tap
};

Eigen::ArrayXd resample(const Eigen::ArrayXd &x, int up, int down);

} // namespace emanprint::dsp

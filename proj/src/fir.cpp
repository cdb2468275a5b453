#include "dscn/fir.hpp"

#include <cmath>

#include "dscn/errors.hpp"

namespace dscn {

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(M_PI * x) / (M_PI * x);
}

}  // namespace

FirFilter design_lowpass(double cutoff_norm, int num_taps) {
  if (!(cutoff_norm > 0.0 && cutoff_norm < 0.5))
    throw InvalidFilterSpec("cutoff_norm must lie in (0, 0.5), got " +
                            std::to_string(cutoff_norm));
  if (num_taps < 11 || num_taps % 2 == 0)
    throw InvalidFilterSpec("num_taps must be odd and >= 11, got " +
                            std::to_string(num_taps));

  const int n = num_taps;
  const int alpha = (n - 1) / 2;
  std::vector<double> taps(static_cast<size_t>(n));
  // compute one half and mirror so taps[i] == taps[n-1-i] bit-exactly
  for (int m = 0; m <= alpha; ++m) {
    double w = 0.54 - 0.46 * std::cos(2.0 * M_PI * m / (n - 1));
    double h = w * 2.0 * cutoff_norm * sinc(2.0 * cutoff_norm * (m - alpha));
    taps[static_cast<size_t>(m)] = h;
    taps[static_cast<size_t>(n - 1 - m)] = h;
  }
  double sum = 0.0;
  for (double t : taps) sum += t;
  for (double& t : taps) t /= sum;
  return {std::move(taps), cutoff_norm};
}

double filter_response_mag(const FirFilter& filter, double freq_norm) {
  double re = 0.0, im = 0.0;
  for (size_t m = 0; m < filter.taps.size(); ++m) {
    double phi = -2.0 * M_PI * freq_norm * static_cast<double>(m);
    re += filter.taps[m] * std::cos(phi);
    im += filter.taps[m] * std::sin(phi);
  }
  return std::hypot(re, im);
}

AudioBuffer decimate(const AudioBuffer& buffer, int factor, const FirFilter& filter) {
  if (factor < 1) throw InvalidFilterSpec("decimation factor must be >= 1");
  if (filter.cutoff_norm > 0.5 / factor * 0.9)
    throw CutoffTooHigh("cutoff " + std::to_string(filter.cutoff_norm) +
                        " exceeds guard band 0.45/" + std::to_string(factor));

  const int64_t n = static_cast<int64_t>(buffer.samples.size());
  const int64_t taps = static_cast<int64_t>(filter.taps.size());
  const int64_t alpha = (taps - 1) / 2;
  const int64_t out_len = (n + factor - 1) / factor;

  AudioBuffer out;
  out.sample_rate_hz = buffer.sample_rate_hz / factor;
  out.source_id = buffer.source_id;
  out.samples.resize(static_cast<size_t>(out_len));

  const double* x = buffer.samples.data();
  // y[i] = sum_k h[k] * x[i + alpha - k], evaluated only at kept indices
  for (int64_t m = 0; m < out_len; ++m) {
    int64_t i = m * factor;
    int64_t k_lo = std::max<int64_t>(0, i + alpha - (n - 1));
    int64_t k_hi = std::min<int64_t>(taps - 1, i + alpha);
    double acc = 0.0;
    for (int64_t k = k_lo; k <= k_hi; ++k)
      acc += filter.taps[static_cast<size_t>(k)] * x[i + alpha - k];
    out.samples[static_cast<size_t>(m)] = acc;
  }
  return out;
}

}  // namespace dscn

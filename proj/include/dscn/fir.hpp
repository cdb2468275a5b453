#pragma once

#include <vector>

#include "dscn/wav.hpp"

namespace dscn {

// Linear-phase FIR low-pass. cutoff_norm is a fraction of the input sample
// rate, in (0, 0.5). Taps are exactly symmetric and sum to 1 (unit DC gain).
struct FirFilter {
  std::vector<double> taps;
  double cutoff_norm = 0.0;
};

// Windowed-sinc design with a Hamming window. num_taps must be odd and >= 11.
FirFilter design_lowpass(double cutoff_norm, int num_taps);

// |H(f)| at normalized frequency f in [0, 0.5]; direct DTFT evaluation.
double filter_response_mag(const FirFilter& filter, double freq_norm);

// Low-pass then keep every factor-th sample. The convolution is zero-padded
// and center-aligned (group delay compensated), so output length is
// ceil(len/factor). Throws CutoffTooHigh when the filter passband would fold
// past the output Nyquist (cutoff_norm must be <= 0.45/factor).
AudioBuffer decimate(const AudioBuffer& buffer, int factor, const FirFilter& filter);

}  // namespace dscn

#pragma once

#include <complex>
#include <vector>

#include "dscn/image.hpp"
#include "dscn/wav.hpp"

namespace dscn {

enum class WindowFn { kHann };

struct SpectrogramConfig {
  int fft_size = 512;
  int hop = 128;
  WindowFn window_fn = WindowFn::kHann;
  double db_floor = -80.0;
};

// One-sided complex STFT frames: frame k covers samples [k*hop, k*hop+fft),
// bins 0..fft/2 inclusive.
struct ComplexSpectra {
  int n_frames = 0;
  int n_bins = 0;
  std::vector<std::complex<double>> values;  // n_frames * n_bins, frame-major

  std::complex<double> at(int frame, int bin) const {
    return values[static_cast<size_t>(frame) * n_bins + bin];
  }
};

// dB magnitudes, clamped below at db_floor.
struct Spectrogram {
  int n_frames = 0;
  int n_bins = 0;
  std::vector<double> values;  // n_frames * n_bins, frame-major
  double bin_hz = 0.0;
  double frame_s = 0.0;
  double db_floor = -80.0;

  double at(int frame, int bin) const {
    return values[static_cast<size_t>(frame) * n_bins + bin];
  }
};

// Periodic Hann analysis; throws SignalTooShort when len < fft_size.
ComplexSpectra stft(const AudioBuffer& buffer, const SpectrogramConfig& config);

// 20*log10(|X| + 1e-10), clamped at config.db_floor.
Spectrogram spectrogram(const AudioBuffer& buffer, const SpectrogramConfig& config);

// Bilinear resample with the pixel-center convention
// src = (i + 0.5) * in / out - 0.5, clamped to the valid range.
std::vector<double> resize_bilinear(const std::vector<double>& src, int in_h, int in_w,
                                    int out_h, int out_w);

// Min-max normalizes (constant input maps to all-zero), orients frequency
// vertically with bin 0 at the bottom, resizes to out_size x out_size and
// applies the colormap.
ImageTensor render_image(const Spectrogram& spec, int out_size, const ColormapSpec& colormap);

}  // namespace dscn

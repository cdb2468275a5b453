#include "dscn/spectrogram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dscn/errors.hpp"
#include "dscn/fft.hpp"

namespace dscn {

namespace {

void validate_config(const SpectrogramConfig& c) {
  if (!is_power_of_two(c.fft_size))
    throw std::invalid_argument("fft_size must be a power of two");
  if (c.hop <= 0 || c.hop > c.fft_size)
    throw std::invalid_argument("hop must satisfy 0 < hop <= fft_size");
}

}  // namespace

ComplexSpectra stft(const AudioBuffer& buffer, const SpectrogramConfig& config) {
  validate_config(config);
  const int fft = config.fft_size;
  const int hop = config.hop;
  const int64_t len = static_cast<int64_t>(buffer.samples.size());
  if (len < fft)
    throw SignalTooShort("signal of " + std::to_string(len) + " samples, need >= " +
                         std::to_string(fft));

  // periodic Hann
  std::vector<double> window(static_cast<size_t>(fft));
  for (int j = 0; j < fft; ++j)
    window[static_cast<size_t>(j)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * j / fft));

  ComplexSpectra out;
  out.n_frames = static_cast<int>((len - fft) / hop) + 1;
  out.n_bins = fft / 2 + 1;
  out.values.resize(static_cast<size_t>(out.n_frames) * out.n_bins);

  std::vector<std::complex<double>> frame(static_cast<size_t>(fft));
  for (int k = 0; k < out.n_frames; ++k) {
    const double* x = buffer.samples.data() + static_cast<int64_t>(k) * hop;
    for (int j = 0; j < fft; ++j)
      frame[static_cast<size_t>(j)] = {x[j] * window[static_cast<size_t>(j)], 0.0};
    fft_radix2(frame);
    std::copy(frame.begin(), frame.begin() + out.n_bins,
              out.values.begin() + static_cast<size_t>(k) * out.n_bins);
  }
  return out;
}

Spectrogram spectrogram(const AudioBuffer& buffer, const SpectrogramConfig& config) {
  ComplexSpectra spectra = stft(buffer, config);
  Spectrogram out;
  out.n_frames = spectra.n_frames;
  out.n_bins = spectra.n_bins;
  out.db_floor = config.db_floor;
  out.bin_hz = static_cast<double>(buffer.sample_rate_hz) / config.fft_size;
  out.frame_s = static_cast<double>(config.hop) / buffer.sample_rate_hz;
  out.values.resize(spectra.values.size());
  for (size_t i = 0; i < spectra.values.size(); ++i) {
    double db = 20.0 * std::log10(std::abs(spectra.values[i]) + 1e-10);
    out.values[i] = std::max(db, config.db_floor);
  }
  return out;
}

std::vector<double> resize_bilinear(const std::vector<double>& src, int in_h, int in_w,
                                    int out_h, int out_w) {
  std::vector<double> dst(static_cast<size_t>(out_h) * out_w);
  for (int i = 0; i < out_h; ++i) {
    double sy = (i + 0.5) * static_cast<double>(in_h) / out_h - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(in_h - 1));
    int y0 = static_cast<int>(std::floor(sy));
    int y1 = std::min(y0 + 1, in_h - 1);
    double fy = sy - y0;
    for (int j = 0; j < out_w; ++j) {
      double sx = (j + 0.5) * static_cast<double>(in_w) / out_w - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(in_w - 1));
      int x0 = static_cast<int>(std::floor(sx));
      int x1 = std::min(x0 + 1, in_w - 1);
      double fx = sx - x0;
      double top = src[static_cast<size_t>(y0) * in_w + x0] * (1.0 - fx) +
                   src[static_cast<size_t>(y0) * in_w + x1] * fx;
      double bot = src[static_cast<size_t>(y1) * in_w + x0] * (1.0 - fx) +
                   src[static_cast<size_t>(y1) * in_w + x1] * fx;
      dst[static_cast<size_t>(i) * out_w + j] = top * (1.0 - fy) + bot * fy;
    }
  }
  return dst;
}

ImageTensor render_image(const Spectrogram& spec, int out_size, const ColormapSpec& colormap) {
  if (spec.n_frames <= 0 || spec.n_bins <= 0 || spec.values.empty())
    throw EmptySpectrogram("cannot render empty spectrogram");
  if (out_size < 16) throw std::invalid_argument("out_size must be >= 16");

  auto [mn_it, mx_it] = std::minmax_element(spec.values.begin(), spec.values.end());
  const double mn = *mn_it, mx = *mx_it;
  const double span = mx - mn;

  // rows = frequency (bin n_bins-1 at the top), columns = time
  std::vector<double> grid(static_cast<size_t>(spec.n_bins) * spec.n_frames);
  for (int r = 0; r < spec.n_bins; ++r) {
    int bin = spec.n_bins - 1 - r;
    for (int c = 0; c < spec.n_frames; ++c) {
      double v = spec.at(c, bin);
      grid[static_cast<size_t>(r) * spec.n_frames + c] = span > 0.0 ? (v - mn) / span : 0.0;
    }
  }

  std::vector<double> resized = resize_bilinear(grid, spec.n_bins, spec.n_frames,
                                                out_size, out_size);
  ImageTensor img = ImageTensor::zeros(out_size, out_size);
  for (int y = 0; y < out_size; ++y)
    for (int x = 0; x < out_size; ++x) {
      float v = static_cast<float>(resized[static_cast<size_t>(y) * out_size + x]);
      auto rgb = colormap.map(v);
      img.at(y, x, 0) = rgb[0];
      img.at(y, x, 1) = rgb[1];
      img.at(y, x, 2) = rgb[2];
    }
  return img;
}

}  // namespace dscn

#include "dscn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dscn/rng.hpp"

namespace dscn {

ImageTensor augment(const ImageTensor& image, const AugmentSpec& spec, int draw) {
  auto check_frac = [](double f, const char* name) {
    if (f < 0.0 || f > 0.5)
      throw std::invalid_argument(std::string(name) + " must lie in [0, 0.5]");
  };
  check_frac(spec.time_shift_frac, "time_shift_frac");
  check_frac(spec.time_mask_frac, "time_mask_frac");
  check_frac(spec.freq_mask_frac, "freq_mask_frac");
  check_frac(spec.brightness_delta, "brightness_delta");

  if (draw == 0) return image;

  const int h = image.height, w = image.width;
  Rng rng(mix_seed(spec.rng_seed, static_cast<uint64_t>(draw)));
  ImageTensor out = ImageTensor::zeros(h, w);

  // horizontal (time-axis) circular shift
  int max_shift = static_cast<int>(std::lround(spec.time_shift_frac * w));
  int shift = rng.uniform_int(-max_shift, max_shift);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int sx = (x - shift) % w;
      if (sx < 0) sx += w;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, sx, c);
    }

  // one time mask (zeroed column band)
  int tmax = static_cast<int>(std::lround(spec.time_mask_frac * w));
  int tw = rng.uniform_int(0, tmax);
  int tstart = rng.uniform_int(0, std::max(0, w - tw));
  for (int y = 0; y < h; ++y)
    for (int x = tstart; x < tstart + tw; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = 0.0f;

  // one frequency mask (zeroed row band)
  int fmax = static_cast<int>(std::lround(spec.freq_mask_frac * h));
  int fw = rng.uniform_int(0, fmax);
  int fstart = rng.uniform_int(0, std::max(0, h - fw));
  for (int y = fstart; y < fstart + fw; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = 0.0f;

  // brightness offset, clamped back into [0, 1]
  float delta = static_cast<float>(rng.uniform(-spec.brightness_delta, spec.brightness_delta));
  for (float& p : out.pixels) p = std::clamp(p + delta, 0.0f, 1.0f);

  return out;
}

}  // namespace dscn

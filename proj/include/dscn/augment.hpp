#pragma once

#include <cstdint>

#include "dscn/image.hpp"

namespace dscn {

// Spectrogram-image augmentation: circular time shift, one time mask, one
// frequency mask, brightness offset. draw 0 is reserved as the identity.
struct AugmentSpec {
  double time_shift_frac = 0.1;
  double time_mask_frac = 0.1;
  double freq_mask_frac = 0.1;
  double brightness_delta = 0.1;
  uint64_t rng_seed = 0;
};

// Pure in (image, spec, draw): the same triple always yields the same pixels.
ImageTensor augment(const ImageTensor& image, const AugmentSpec& spec, int draw);

}  // namespace dscn

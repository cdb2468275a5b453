#pragma once

#include <complex>
#include <vector>

namespace dscn {

// In-place iterative radix-2 transform. Size must be a power of two.
// inverse=true applies the conjugate transform and scales by 1/N.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse = false);

bool is_power_of_two(int n);

}  // namespace dscn

#pragma once

#include <cstdint>
#include <string>

#include "dscn/manifest.hpp"
#include "dscn/wav.hpp"

namespace dscn {

// Desk-scale stand-in for the licensed interview corpus. Class A ("depressed"
// proxy, phq8 >= 10) is a harmonic tone with slow amplitude and frequency
// modulation; class B is a steady harmonic tone plus broadband noise.
struct SynthOptions {
  int n_class_a = 0;
  int n_class_b = 0;
  double duration_s = 80.0;
  int sample_rate_hz = 16000;
};

// Writes one WAV per sample plus <out_dir>/manifest.csv; returns the
// manifest (paths point into out_dir). Byte-deterministic for a fixed seed.
Manifest generate_synthetic_corpus(const SynthOptions& options, uint64_t seed,
                                   const std::string& out_dir);

// Balanced convenience entry: n_per_class of each class.
Manifest generate_synthetic_corpus(int n_per_class, uint64_t seed, const std::string& out_dir);

}  // namespace dscn

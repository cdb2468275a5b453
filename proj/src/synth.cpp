#include "dscn/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "dscn/rng.hpp"

namespace dscn {

namespace {

// Class A: harmonic stack whose amplitude breathes and whose pitch wobbles.
// Class B: the same kind of stack, steady, buried in broadband noise.
AudioBuffer synth_voice(bool modulated, Rng& rng, double duration_s, int rate) {
  const double f0 = rng.uniform(120.0, 260.0);
  const int harmonics = rng.uniform_int(4, 6);
  const double base_amp = rng.uniform(0.25, 0.4);

  const double am_depth = modulated ? rng.uniform(0.4, 0.7) : 0.0;
  const double am_hz = rng.uniform(0.25, 0.6);
  const double fm_depth = modulated ? rng.uniform(0.02, 0.04) : 0.0;
  const double fm_hz = rng.uniform(0.3, 0.7);
  const double noise_amp = modulated ? 0.0 : rng.uniform(0.03, 0.06);

  const int64_t n = std::llround(duration_s * rate);
  AudioBuffer buf;
  buf.sample_rate_hz = rate;
  buf.samples.resize(static_cast<size_t>(n));

  double harm_norm = 0.0;
  for (int h = 1; h <= harmonics; ++h) harm_norm += 1.0 / h;

  for (int64_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / rate;
    // phase of a carrier with sinusoidal vibrato, integrated analytically
    double phase = 2.0 * M_PI * f0 *
                   (t + fm_depth / (2.0 * M_PI * fm_hz) * std::sin(2.0 * M_PI * fm_hz * t));
    double tone = 0.0;
    for (int h = 1; h <= harmonics; ++h) tone += std::sin(h * phase) / h;
    tone /= harm_norm;
    double env = 1.0 + am_depth * std::sin(2.0 * M_PI * am_hz * t);
    double s = base_amp * env * tone / (1.0 + am_depth);
    if (noise_amp > 0.0) s += noise_amp * (rng.uniform() * 2.0 - 1.0);
    buf.samples[static_cast<size_t>(i)] = s;
  }
  return buf;
}

}  // namespace

Manifest generate_synthetic_corpus(const SynthOptions& options, uint64_t seed,
                                   const std::string& out_dir) {
  if (options.n_class_a < 1 || options.n_class_b < 1)
    throw std::invalid_argument("need at least one sample per class");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

  Manifest m;
  m.seed = seed;
  int file_no = 0;
  for (int cls = 0; cls < 2; ++cls) {
    bool depressed_proxy = cls == 0;
    int count = depressed_proxy ? options.n_class_a : options.n_class_b;
    for (int i = 0; i < count; ++i, ++file_no) {
      Rng rng(mix_seed(seed, static_cast<uint64_t>(file_no) + 1));
      AudioBuffer buf =
          synth_voice(depressed_proxy, rng, options.duration_s, options.sample_rate_hz);

      char name[32];
      std::snprintf(name, sizeof(name), "P%03d.wav", file_no);
      std::string path = (std::filesystem::path(out_dir) / name).string();
      buf.source_id = path;
      write_wav_file(buf, path);

      SampleRecord rec;
      rec.participant_id = std::string(name, 4);  // "Pnnn"
      rec.path = path;
      rec.phq8 = depressed_proxy ? rng.uniform_int(10, 24) : rng.uniform_int(0, 9);
      rec.label = label_from_phq8(rec.phq8);
      m.records.push_back(std::move(rec));
    }
  }
  save_manifest(m, (std::filesystem::path(out_dir) / "manifest.csv").string());
  return m;
}

Manifest generate_synthetic_corpus(int n_per_class, uint64_t seed, const std::string& out_dir) {
  SynthOptions options;
  options.n_class_a = n_per_class;
  options.n_class_b = n_per_class;
  return generate_synthetic_corpus(options, seed, out_dir);
}

}  // namespace dscn

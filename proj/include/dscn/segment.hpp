#pragma once

#include <optional>
#include <vector>

#include "dscn/wav.hpp"

namespace dscn {

// Fixed-window extraction policy. Dataset A: one window per recording at
// [offset, offset+window). Dataset B: back-to-back windows from offset until
// end_s (or the recording end, whichever comes first).
struct SegmentPolicy {
  double offset_s = 60.0;
  double window_s = 15.0;
  std::optional<double> end_s;  // absent for Dataset A; 420 for Dataset B

  static SegmentPolicy dataset_a() { return {}; }
  static SegmentPolicy dataset_b() { return {60.0, 15.0, 420.0}; }
};

struct SegmentWindow {
  double start_s = 0.0;
  double end_s = 0.0;
  int index = 0;
};

// Plans whole windows only; a partial trailing window is discarded. Throws
// RecordingTooShort when the recording cannot yield even one window.
std::vector<SegmentWindow> plan_segments(double duration_s, const SegmentPolicy& policy);

// Copies round(window_s * sample_rate) samples at [start_s, end_s); the
// source_id gains a "#<index>" suffix. Throws WindowOutOfRange when the
// window does not fit into the buffer.
AudioBuffer extract_segment(const AudioBuffer& buffer, const SegmentWindow& window);

}  // namespace dscn

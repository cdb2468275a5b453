#include "dscn/segment.hpp"

#include <cmath>
#include <stdexcept>

namespace dscn {

static void validate_policy(const SegmentPolicy& p) {
  if (p.window_s <= 0.0) throw std::invalid_argument("window_s must be positive");
  if (p.offset_s < 0.0) throw std::invalid_argument("offset_s must be non-negative");
  if (p.end_s && *p.end_s < p.offset_s + p.window_s)
    throw std::invalid_argument("end_s must allow at least one window");
}

std::vector<SegmentWindow> plan_segments(double duration_s, const SegmentPolicy& policy) {
  validate_policy(policy);
  if (duration_s < policy.offset_s + policy.window_s)
    throw RecordingTooShort("recording of " + std::to_string(duration_s) +
                            " s cannot yield a window of " + std::to_string(policy.window_s) +
                            " s at offset " + std::to_string(policy.offset_s));

  std::vector<SegmentWindow> windows;
  if (!policy.end_s) {
    windows.push_back({policy.offset_s, policy.offset_s + policy.window_s, 0});
    return windows;
  }
  double limit = std::min(*policy.end_s, duration_s);
  int count = static_cast<int>(std::floor((limit - policy.offset_s) / policy.window_s));
  if (count < 1)
    throw RecordingTooShort("no whole window fits before the end bound");
  windows.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    double start = policy.offset_s + k * policy.window_s;
    windows.push_back({start, start + policy.window_s, k});
  }
  return windows;
}

AudioBuffer extract_segment(const AudioBuffer& buffer, const SegmentWindow& window) {
  const double rate = buffer.sample_rate_hz;
  int64_t start = std::llround(window.start_s * rate);
  int64_t count = std::llround((window.end_s - window.start_s) * rate);
  if (start < 0 || count < 0 ||
      start + count > static_cast<int64_t>(buffer.samples.size()))
    throw WindowOutOfRange("window [" + std::to_string(window.start_s) + ", " +
                           std::to_string(window.end_s) + ") outside buffer of " +
                           std::to_string(buffer.duration_s()) + " s");

  AudioBuffer out;
  out.sample_rate_hz = buffer.sample_rate_hz;
  out.source_id = buffer.source_id + "#" + std::to_string(window.index);
  out.samples.assign(buffer.samples.begin() + start, buffer.samples.begin() + start + count);
  return out;
}

}  // namespace dscn

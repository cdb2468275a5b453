#pragma once

#include <cstdint>

namespace dscn {

// Cosine annealing with warm restarts. Cycle i spans
// cycle_len * cycle_mult^i epochs; within a cycle at position t (epochs),
//   lr(t) = lr_min + (lr_max - lr_min)/2 * (1 + cos(pi * t / T_i)).
// Restarts land at cumulative epochs 0, T_0, T_0+T_1, ...
struct SgdrSchedule {
  double lr_max = 0.01;
  double lr_min = 0.0001;  // convention: lr_max / 100
  int cycle_len = 1;
  int cycle_mult = 2;
  int steps_per_epoch = 1;

  static SgdrSchedule from_lr_max(double lr_max_, int cycle_len_, int cycle_mult_,
                                  int steps_per_epoch_) {
    return {lr_max_, lr_max_ / 100.0, cycle_len_, cycle_mult_, steps_per_epoch_};
  }
};

// Closed form at within-cycle position t of a cycle of length t_cycle epochs.
double sgdr_lr_at(double t, double t_cycle, double lr_min, double lr_max);

// Learning rate for optimizer step index `step` (step 0 = first step).
double sgdr_lr(int64_t step, const SgdrSchedule& schedule);

// Index of the cycle containing epoch position `epoch` (0-based, fractional
// positions allowed), and the cumulative epoch at which that cycle starts.
int sgdr_cycle_index(double epoch, const SgdrSchedule& schedule);
double sgdr_cycle_start_epoch(int cycle, const SgdrSchedule& schedule);
double sgdr_cycle_length(int cycle, const SgdrSchedule& schedule);

}  // namespace dscn

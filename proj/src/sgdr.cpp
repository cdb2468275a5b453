#include "dscn/sgdr.hpp"

#include <cmath>
#include <stdexcept>

namespace dscn {

namespace {

void validate(const SgdrSchedule& s) {
  if (!(s.lr_max > s.lr_min) || s.lr_min < 0.0)
    throw std::invalid_argument("need lr_max > lr_min >= 0");
  if (s.cycle_len < 1 || s.cycle_mult < 1 || s.steps_per_epoch < 1)
    throw std::invalid_argument("cycle_len, cycle_mult, steps_per_epoch must be >= 1");
}

}  // namespace

double sgdr_lr_at(double t, double t_cycle, double lr_min, double lr_max) {
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * t / t_cycle));
}

double sgdr_cycle_length(int cycle, const SgdrSchedule& schedule) {
  double len = schedule.cycle_len;
  for (int i = 0; i < cycle; ++i) len *= schedule.cycle_mult;
  return len;
}

double sgdr_cycle_start_epoch(int cycle, const SgdrSchedule& schedule) {
  // geometric partial sum of cycle lengths
  if (schedule.cycle_mult == 1) return static_cast<double>(schedule.cycle_len) * cycle;
  double pw = 1.0;
  for (int i = 0; i < cycle; ++i) pw *= schedule.cycle_mult;
  return schedule.cycle_len * (pw - 1.0) / (schedule.cycle_mult - 1.0);
}

int sgdr_cycle_index(double epoch, const SgdrSchedule& schedule) {
  int cycle = 0;
  while (sgdr_cycle_start_epoch(cycle + 1, schedule) <= epoch) ++cycle;
  return cycle;
}

double sgdr_lr(int64_t step, const SgdrSchedule& schedule) {
  validate(schedule);
  if (step < 0) throw std::invalid_argument("step must be >= 0");
  double epoch = static_cast<double>(step) / schedule.steps_per_epoch;
  int cycle = sgdr_cycle_index(epoch, schedule);
  double t = epoch - sgdr_cycle_start_epoch(cycle, schedule);
  return sgdr_lr_at(t, sgdr_cycle_length(cycle, schedule), schedule.lr_min, schedule.lr_max);
}

}  // namespace dscn

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dscn/errors.hpp"

namespace dscn {

enum class Label { kNonDepressed = 0, kDepressed = 1 };
enum class Split { kTrain, kTest };

constexpr int kPhq8DepressedThreshold = 10;

inline Label label_from_phq8(int phq8) {
  return phq8 >= kPhq8DepressedThreshold ? Label::kDepressed : Label::kNonDepressed;
}

// One labeled file (audio or rendered image, depending on pipeline stage).
struct SampleRecord {
  std::string participant_id;
  std::string path;
  int phq8 = 0;
  Label label = Label::kNonDepressed;
  std::optional<Split> split;
};

struct Manifest {
  std::vector<SampleRecord> records;
  uint64_t seed = 0;
};

// CSV with header "participant_id,path,phq8" and an optional trailing
// "split" column. No quoting; paths containing commas are rejected.
Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

// Seeded shuffle then partition; test size = round-half-up(test_fraction*N).
// Throws AlreadySplit if any record carries a split assignment.
std::pair<Manifest, Manifest> split_manifest(const Manifest& manifest, double test_fraction,
                                             uint64_t seed);

// Same partition rule but returns one manifest with the split column filled.
// by_participant keeps all records of a participant on the same side; the
// test side is grown participant by participant until it reaches the target
// record count.
Manifest assign_split(const Manifest& manifest, double test_fraction, uint64_t seed,
                      bool by_participant = false);

// Duplicates minority-class records (seeded, with replacement) until class
// counts are equal. Originals are all retained.
Manifest oversample_minority(const Manifest& train, uint64_t seed);

}  // namespace dscn

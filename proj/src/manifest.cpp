#include "dscn/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dscn/rng.hpp"

namespace dscn {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

int parse_phq8(const std::string& s, int line_no) {
  size_t idx = 0;
  int v;
  try {
    v = std::stoi(s, &idx);
  } catch (const std::exception&) {
    throw ManifestParseError("line " + std::to_string(line_no) + ": phq8 '" + s +
                             "' is not an integer");
  }
  if (idx != s.size())
    throw ManifestParseError("line " + std::to_string(line_no) + ": phq8 '" + s +
                             "' is not an integer");
  if (v < 0 || v > 24)
    throw ManifestParseError("line " + std::to_string(line_no) + ": phq8 " +
                             std::to_string(v) + " outside 0-24");
  return v;
}

// seeded Fisher-Yates
std::vector<size_t> shuffled_indices(size_t n, uint64_t seed) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(mix_seed(seed, 0x5117ULL));
  for (size_t i = n; i > 1; --i) {
    size_t j = rng.next_u64() % i;
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

size_t test_count(size_t n, double test_fraction) {
  // round half up, so 107 * 0.25 -> 27
  return static_cast<size_t>(std::floor(test_fraction * static_cast<double>(n) + 0.5));
}

}  // namespace

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ManifestParseError("cannot open manifest " + path);
  std::string line;
  if (!std::getline(f, line)) throw ManifestParseError(path + ": empty file");

  std::vector<std::string> header = split_fields(line);
  bool has_split;
  if (header.size() == 3 && header[0] == "participant_id" && header[1] == "path" &&
      header[2] == "phq8") {
    has_split = false;
  } else if (header.size() == 4 && header[0] == "participant_id" && header[1] == "path" &&
             header[2] == "phq8" && header[3] == "split") {
    has_split = true;
  } else {
    throw ManifestParseError(path + ": bad header '" + line + "'");
  }

  Manifest m;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields = split_fields(line);
    size_t want = has_split ? 4 : 3;
    if (fields.size() != want)
      throw ManifestParseError(path + ": line " + std::to_string(line_no) + ": want " +
                               std::to_string(want) + " fields, got " +
                               std::to_string(fields.size()));
    SampleRecord rec;
    rec.participant_id = fields[0];
    rec.path = fields[1];
    rec.phq8 = parse_phq8(fields[2], line_no);
    rec.label = label_from_phq8(rec.phq8);
    if (has_split && !fields[3].empty()) {
      if (fields[3] == "train")
        rec.split = Split::kTrain;
      else if (fields[3] == "test")
        rec.split = Split::kTest;
      else
        throw ManifestParseError(path + ": line " + std::to_string(line_no) +
                                 ": split must be train/test/empty, got '" + fields[3] + "'");
    }
    m.records.push_back(std::move(rec));
  }
  return m;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  bool any_split = std::any_of(manifest.records.begin(), manifest.records.end(),
                               [](const SampleRecord& r) { return r.split.has_value(); });
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "participant_id,path,phq8" << (any_split ? ",split" : "") << "\n";
  for (const SampleRecord& r : manifest.records) {
    if (r.participant_id.find(',') != std::string::npos ||
        r.path.find(',') != std::string::npos)
      throw ManifestParseError("comma in field not representable: " + r.path);
    f << r.participant_id << ',' << r.path << ',' << r.phq8;
    if (any_split) {
      f << ',';
      if (r.split) f << (*r.split == Split::kTrain ? "train" : "test");
    }
    f << "\n";
  }
  if (!f) throw IoError("short write to " + path);
}

std::pair<Manifest, Manifest> split_manifest(const Manifest& manifest, double test_fraction,
                                             uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  for (const SampleRecord& r : manifest.records)
    if (r.split) throw AlreadySplit("manifest already carries split assignments");

  const size_t n = manifest.records.size();
  std::vector<size_t> order = shuffled_indices(n, seed);
  size_t n_test = test_count(n, test_fraction);

  Manifest train, test;
  train.seed = test.seed = seed;
  for (size_t i = 0; i < n; ++i) {
    SampleRecord rec = manifest.records[order[i]];
    if (i < n_test) {
      rec.split = Split::kTest;
      test.records.push_back(std::move(rec));
    } else {
      rec.split = Split::kTrain;
      train.records.push_back(std::move(rec));
    }
  }
  return {std::move(train), std::move(test)};
}

Manifest assign_split(const Manifest& manifest, double test_fraction, uint64_t seed,
                      bool by_participant) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  for (const SampleRecord& r : manifest.records)
    if (r.split) throw AlreadySplit("manifest already carries split assignments");

  Manifest out = manifest;
  out.seed = seed;
  const size_t n = out.records.size();
  size_t n_test = test_count(n, test_fraction);

  if (!by_participant) {
    std::vector<size_t> order = shuffled_indices(n, seed);
    for (size_t i = 0; i < n; ++i)
      out.records[order[i]].split = i < n_test ? Split::kTest : Split::kTrain;
    return out;
  }

  // participant-level assignment: grow the test side until the record target
  std::vector<std::string> participants;
  for (const SampleRecord& r : out.records)
    if (std::find(participants.begin(), participants.end(), r.participant_id) ==
        participants.end())
      participants.push_back(r.participant_id);
  std::vector<size_t> order = shuffled_indices(participants.size(), seed);

  std::vector<std::string> test_side;
  size_t assigned = 0;
  for (size_t oi : order) {
    if (assigned >= n_test) break;
    const std::string& pid = participants[oi];
    test_side.push_back(pid);
    for (const SampleRecord& r : out.records)
      if (r.participant_id == pid) ++assigned;
  }
  for (SampleRecord& r : out.records) {
    bool in_test = std::find(test_side.begin(), test_side.end(), r.participant_id) !=
                   test_side.end();
    r.split = in_test ? Split::kTest : Split::kTrain;
  }
  return out;
}

Manifest oversample_minority(const Manifest& train, uint64_t seed) {
  size_t n_pos = 0, n_neg = 0;
  for (const SampleRecord& r : train.records)
    (r.label == Label::kDepressed ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw SingleClass("oversampling needs both classes present");
  if (n_pos == n_neg) return train;

  Label minority = n_pos < n_neg ? Label::kDepressed : Label::kNonDepressed;
  std::vector<size_t> pool;
  for (size_t i = 0; i < train.records.size(); ++i)
    if (train.records[i].label == minority) pool.push_back(i);

  size_t deficit = (n_pos < n_neg ? n_neg - n_pos : n_pos - n_neg);
  Manifest out = train;
  Rng rng(mix_seed(seed, 0xb00575ULL));
  for (size_t k = 0; k < deficit; ++k) {
    size_t pick = pool[rng.next_u64() % pool.size()];
    out.records.push_back(train.records[pick]);
  }
  return out;
}

}  // namespace dscn

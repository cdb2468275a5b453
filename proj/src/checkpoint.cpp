#include "dscn/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace dscn {

namespace {

constexpr uint16_t kVersion = 1;
const char kMagic[4] = {'D', 'S', 'C', 'N'};

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const uint8_t* p;
  size_t left;
  void need(size_t n) const {
    if (left < n) throw IoError("truncated checkpoint");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(p[0] | (p[1] << 8));
    p += 2;
    left -= 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                 (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    p += 4;
    left -= 4;
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
  void floats(float* dst, size_t n) {
    need(n * 4);
    std::memcpy(dst, p, n * 4);
    p += n * 4;
    left -= n * 4;
  }
};

}  // namespace

std::vector<uint8_t> serialize_checkpoint(const Model<float>& model) {
  const ModelConfig& cfg = model.config();
  nlohmann::json j;
  j["arch_tag"] = cfg.arch_tag;
  j["stage_blocks"] = cfg.stage_blocks;
  j["stage_channels"] = cfg.stage_channels;
  j["num_classes"] = cfg.num_classes;
  j["input_size"] = cfg.input_size;
  nlohmann::json groups = nlohmann::json::array();
  for (const ParamGroup& g : model.groups())
    groups.push_back({{"frozen", g.frozen}, {"lr_scale", g.lr_scale}});
  j["groups"] = groups;
  std::string config_json = j.dump();

  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kVersion);
  put_u32(out, static_cast<uint32_t>(config_json.size()));
  out.insert(out.end(), config_json.begin(), config_json.end());

  for (const auto& s : model.slots()) {
    put_u32(out, static_cast<uint32_t>(s.name.size()));
    out.insert(out.end(), s.name.begin(), s.name.end());
    put_u32(out, static_cast<uint32_t>(s.value.shape.size()));
    for (int d : s.value.shape) put_u32(out, static_cast<uint32_t>(d));
    size_t pos = out.size();
    out.resize(pos + s.value.data.size() * 4);
    std::memcpy(out.data() + pos, s.value.data.data(), s.value.data.size() * 4);
  }

  uint32_t crc = static_cast<uint32_t>(crc32(0, out.data(), static_cast<uInt>(out.size())));
  put_u32(out, crc);
  return out;
}

Model<float> deserialize_checkpoint(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IoError("not a DSCN checkpoint");
  uint32_t stored_crc = static_cast<uint32_t>(bytes[bytes.size() - 4]) |
                        (static_cast<uint32_t>(bytes[bytes.size() - 3]) << 8) |
                        (static_cast<uint32_t>(bytes[bytes.size() - 2]) << 16) |
                        (static_cast<uint32_t>(bytes[bytes.size() - 1]) << 24);
  uint32_t actual_crc =
      static_cast<uint32_t>(crc32(0, bytes.data(), static_cast<uInt>(bytes.size() - 4)));
  if (stored_crc != actual_crc) throw ChecksumMismatch("checkpoint CRC32 mismatch");

  Reader r{bytes.data() + 4, bytes.size() - 8};
  uint16_t version = r.u16();
  if (version != kVersion)
    throw VersionMismatch("checkpoint version " + std::to_string(version) + ", want " +
                          std::to_string(kVersion));

  uint32_t json_len = r.u32();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(r.str(json_len));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad checkpoint config: ") + e.what());
  }

  ModelConfig cfg;
  try {
    cfg.arch_tag = j.at("arch_tag").get<std::string>();
    cfg.stage_blocks = j.at("stage_blocks").get<std::vector<int>>();
    cfg.stage_channels = j.at("stage_channels").get<std::vector<int>>();
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.input_size = j.at("input_size").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad checkpoint config: ") + e.what());
  }

  Model<float> model = Model<float>::build(cfg, 0);
  if (j.contains("groups")) {
    auto& groups = model.groups();
    for (size_t i = 0; i < 3 && i < j["groups"].size(); ++i) {
      groups[i].frozen = j["groups"][i].value("frozen", false);
      groups[i].lr_scale = j["groups"][i].value("lr_scale", 1.0);
    }
  }

  auto& slots = model.slots();
  for (auto& s : slots) {
    uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    if (name != s.name) throw IoError("checkpoint tensor order mismatch at '" + name + "'");
    uint32_t rank = r.u32();
    if (rank != s.value.shape.size()) throw IoError("rank mismatch for " + name);
    for (size_t d = 0; d < rank; ++d)
      if (r.u32() != static_cast<uint32_t>(s.value.shape[d]))
        throw IoError("dim mismatch for " + name);
    r.floats(s.value.data.data(), s.value.data.size());
  }
  if (r.left != 0) throw IoError("trailing bytes in checkpoint");
  return model;
}

void save_checkpoint(const Model<float>& model, const std::string& path) {
  std::vector<uint8_t> bytes = serialize_checkpoint(model);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

Model<float> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace dscn

#include "absa/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "absa/error.hpp"

using json = nlohmann::json;

namespace absa::ckpt {

namespace {

constexpr char kMagic[] = "ABSACKPT1\n";
constexpr size_t kMagicLen = sizeof(kMagic) - 1;

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_doubles_le(std::ostream& out, const std::vector<double>& vals) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * sizeof(double)));
  } else {
    for (double d : vals) {
      uint64_t bits;
      std::memcpy(&bits, &d, 8);
      write_u64(out, bits);
    }
  }
}

void read_doubles_le(std::istream& in, std::vector<double>& vals) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(double)));
  } else {
    for (double& d : vals) {
      uint64_t bits = read_u64(in);
      std::memcpy(&d, &bits, 8);
    }
  }
}

}  // namespace

void save(const std::string& path, const Checkpoint& c) {
  json header;
  header["config"] = c.config;
  header["vocab"] = {{"tokens", c.vocab_tokens}, {"lowercase", c.vocab_lowercase}};
  header["relations"] = c.relation_labels;
  json manifest = json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : c.tensors) {
    manifest.push_back({{"name", name},
                        {"dtype", "f64"},
                        {"shape", t.shape},
                        {"offset", offset},
                        {"count", t.numel()}});
    offset += static_cast<uint64_t>(t.numel()) * sizeof(double);
  }
  header["tensors"] = manifest;
  std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
  write_u64(out, header_str.size());
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, t] : c.tensors) write_doubles_le(out, t.data);
  if (!out) throw Error("failed writing checkpoint: " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  char magic[kMagicLen];
  in.read(magic, static_cast<std::streamsize>(kMagicLen));
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0)
    throw Error("not a checkpoint file (bad magic): " + path);
  uint64_t header_len = read_u64(in);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw Error("truncated checkpoint header: " + path);
  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw Error(std::string("bad checkpoint header: ") + e.what());
  }

  Checkpoint c;
  c.config = header.at("config");
  c.vocab_tokens = header.at("vocab").at("tokens").get<std::vector<std::string>>();
  c.vocab_lowercase = header.at("vocab").at("lowercase").get<bool>();
  c.relation_labels = header.at("relations").get<std::vector<std::string>>();
  for (const auto& entry : header.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    if (entry.at("dtype").get<std::string>() != "f64")
      throw Error("unsupported tensor dtype in checkpoint");
    std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    nn::Tensor t = nn::Tensor::zeros(shape);
    if (t.numel() != entry.at("count").get<int>())
      throw Error("tensor count mismatch in checkpoint for '" + name + "'");
    read_doubles_le(in, t.data);
    if (!in) throw Error("truncated checkpoint payload at tensor '" + name + "'");
    c.tensors.emplace(std::move(name), std::move(t));
  }
  return c;
}

}  // namespace absa::ckpt

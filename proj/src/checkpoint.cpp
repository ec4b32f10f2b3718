#include "edgmat/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace edgmat {

namespace {

constexpr std::string_view kMagicPrefix = "EDGMAT";
constexpr char kVersion = '1';
constexpr std::string_view kParamPrefix = "param.";

using Kind = CheckpointError::Kind;

std::string shape_text(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.rank() == 2 ? t.cols() : 1);
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

}  // namespace

const char* to_string(CheckpointError::Kind kind) noexcept {
  switch (kind) {
    case Kind::io: return "io";
    case Kind::bad_magic: return "bad_magic";
    case Kind::version_mismatch: return "version_mismatch";
    case Kind::truncated: return "truncated";
    case Kind::malformed_header: return "malformed_header";
    case Kind::shape_mismatch: return "shape_mismatch";
    case Kind::trailing_data: return "trailing_data";
  }
  return "unknown";
}

std::string serialize_checkpoint(const EdgmatModel& model) {
  KvConfig header = model.config().to_kv();
  const auto params = model.parameters();
  for (const Parameter* p : params) {
    header.set(std::string(kParamPrefix) + p->name, shape_text(p->value));
  }
  const std::string text = header.serialize();

  std::string out(kMagicPrefix);
  out.push_back(kVersion);
  put_u64(out, text.size());
  out += text;
  for (const Parameter* p : params) {
    for (double v : p->value.data()) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }
  return out;
}

EdgmatModel deserialize_checkpoint(std::string_view bytes) {
  const std::size_t magic_len = kMagicPrefix.size() + 1;
  if (bytes.size() < magic_len) {
    if (kMagicPrefix.starts_with(bytes.substr(0, kMagicPrefix.size()))) {
      throw CheckpointError(Kind::truncated, "checkpoint truncated inside the magic string");
    }
    throw CheckpointError(Kind::bad_magic, "not an EDGMAT checkpoint");
  }
  if (bytes.substr(0, kMagicPrefix.size()) != kMagicPrefix) {
    throw CheckpointError(Kind::bad_magic, "not an EDGMAT checkpoint (bad magic)");
  }
  if (bytes[kMagicPrefix.size()] != kVersion) {
    throw CheckpointError(Kind::version_mismatch,
                          std::string("checkpoint format version '") + bytes[kMagicPrefix.size()] +
                              "' unsupported (expected '" + kVersion + "')");
  }
  bytes.remove_prefix(magic_len);
  if (bytes.size() < 8) throw CheckpointError(Kind::truncated, "checkpoint truncated before header length");
  const std::uint64_t header_len = get_u64(bytes);
  bytes.remove_prefix(8);
  if (header_len > bytes.size()) {
    throw CheckpointError(Kind::truncated, "checkpoint truncated inside the header");
  }
  const std::string_view header_text = bytes.substr(0, header_len);
  bytes.remove_prefix(header_len);

  KvConfig header;
  ModelConfig cfg;
  try {
    header = KvConfig::parse(header_text, "checkpoint header");
    cfg = ModelConfig::from_kv(header);
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::malformed_header, std::string("checkpoint header: ") + e.what());
  }

  std::vector<std::pair<std::string, std::string>> manifest;
  for (const auto& [k, v] : header.entries()) {
    if (k.starts_with(kParamPrefix)) manifest.emplace_back(k.substr(kParamPrefix.size()), v);
  }

  EdgmatModel model = [&] {
    try {
      return EdgmatModel(cfg);
    } catch (const std::exception& e) {
      throw CheckpointError(Kind::malformed_header, std::string("checkpoint config: ") + e.what());
    }
  }();
  auto params = model.parameters();
  if (manifest.size() != params.size()) {
    throw CheckpointError(Kind::shape_mismatch,
                          "checkpoint lists " + std::to_string(manifest.size()) +
                              " parameters, config implies " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, shape] = manifest[i];
    if (name != params[i]->name) {
      throw CheckpointError(Kind::shape_mismatch,
                            "parameter " + std::to_string(i) + " is '" + name + "', expected '" +
                                params[i]->name + "'",
                            name);
    }
    const std::string expected = shape_text(params[i]->value);
    if (shape != expected) {
      throw CheckpointError(Kind::shape_mismatch,
                            "parameter '" + name + "' has shape " + shape + ", config implies " +
                                expected,
                            name);
    }
  }

  for (Parameter* p : params) {
    const std::size_t need = p->value.numel() * 4;
    if (bytes.size() < need) {
      throw CheckpointError(Kind::truncated, "checkpoint truncated in payload of '" + p->name + "'",
                            p->name);
    }
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
      }
      p->value[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    bytes.remove_prefix(need);
  }
  if (!bytes.empty()) {
    throw CheckpointError(Kind::trailing_data,
                          std::to_string(bytes.size()) + " unexpected bytes after the payload");
  }
  return model;
}

void save_checkpoint(const EdgmatModel& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(Kind::io, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(Kind::io, "write failed for checkpoint " + path.string());
}

EdgmatModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::io, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace edgmat

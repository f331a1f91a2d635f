#include "aboots/autodiff/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aboots/errors.hpp"

namespace aboots::ad {

namespace {

constexpr const char* kMagic = "aboots-params";

Shape parse_shape(const std::string& text) {
  Shape shape;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find('x', pos);
    const std::string part = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw CheckpointError("bad shape '" + text + "' in parameter manifest");
    shape.push_back(std::stoull(part));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return shape;
}

void write_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

double read_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_parameters(const ParameterSet& params, std::ostream& out) {
  out << kMagic << " 1 " << params.size() << '\n';
  std::size_t offset = 0;
  for (const auto& [name, p] : params) {
    out << name << ' ' << group_name(p.group) << ' ' << shape_string(p.value.shape()) << ' ' << offset << '\n';
    offset += p.value.size() * 8;
  }
  for (const auto& [name, p] : params)
    for (double v : p.value.values()) write_le(out, v);
  if (!out) throw IoError("failed writing parameter payload");
}

void save_parameters(const ParameterSet& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_parameters(params, out);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

ParameterSet load_parameters(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw CheckpointError("empty parameter file");
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(hs >> magic >> version >> count) || magic != kMagic || version != 1)
    throw CheckpointError("not a parameter file (header '" + header + "')");

  struct Entry {
    std::string name;
    Group group;
    Shape shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  std::size_t expected_offset = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::string line;
    if (!std::getline(in, line)) throw CheckpointError("truncated parameter manifest");
    std::istringstream ls(line);
    std::string name, group, shape;
    std::size_t offset = 0;
    if (!(ls >> name >> group >> shape >> offset)) throw CheckpointError("bad manifest line '" + line + "'");
    Entry e{name, Group::generator, parse_shape(shape), offset};
    try {
      e.group = parse_group(group);
    } catch (const ConfigError& err) {
      throw CheckpointError(err.what());
    }
    if (offset != expected_offset) throw CheckpointError("manifest offset mismatch for '" + name + "'");
    expected_offset += shape_size(e.shape) * 8;
    entries.push_back(std::move(e));
  }

  std::vector<unsigned char> payload(expected_offset);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) throw CheckpointError("truncated parameter payload");

  ParameterSet params;
  for (const Entry& e : entries) {
    Tensor t(e.shape);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = read_le(payload.data() + e.offset + 8 * k);
    params.add(e.name, e.group, std::move(t));
  }
  return params;
}

ParameterSet load_parameters(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_parameters(in);
}

void assign_parameters(ParameterSet& target, const ParameterSet& loaded) {
  if (target.size() != loaded.size())
    throw CheckpointError("checkpoint has " + std::to_string(loaded.size()) + " tensors, model expects " +
                          std::to_string(target.size()));
  for (auto& [name, p] : target) {
    if (!loaded.contains(name)) throw CheckpointError("checkpoint is missing parameter '" + name + "'");
    const Parameter& src = loaded.get(name);
    if (src.group != p.group || src.value.shape() != p.value.shape())
      throw CheckpointError("checkpoint parameter '" + name + "' has shape " + shape_string(src.value.shape()) +
                            " (" + std::string(group_name(src.group)) + "), model expects " +
                            shape_string(p.value.shape()) + " (" + std::string(group_name(p.group)) + ")");
    p.value = src.value;
  }
}

}  // namespace aboots::ad

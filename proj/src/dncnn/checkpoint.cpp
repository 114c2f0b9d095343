#include <string>

#include "../binary_io.hpp"
#include "polsar/dncnn/model.hpp"

namespace polsar::nn {

using detail::ByteReader;
using detail::ByteWriter;

namespace {

constexpr char kMagic[] = "PSM1";
constexpr std::uint32_t kVersion = 1;

struct TensorRef {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::span<float> data;
};

std::vector<TensorRef> tensor_manifest(Network<float>& net) {
  std::vector<TensorRef> out;
  for (std::size_t l = 0; l < net.conv.size(); ++l) {
    auto& w = net.conv[l].weight;
    const std::string prefix = "conv" + std::to_string(l);
    out.push_back({prefix + ".weight",
                   {static_cast<std::uint32_t>(w.n()), static_cast<std::uint32_t>(w.c()),
                    static_cast<std::uint32_t>(w.h()), static_cast<std::uint32_t>(w.w())},
                   w.values()});
    if (!net.conv[l].bias.empty()) {
      out.push_back({prefix + ".bias", {static_cast<std::uint32_t>(net.conv[l].bias.size())}, net.conv[l].bias});
    }
    if (l >= 1 && l <= net.bn.size()) {
      auto& bn = net.bn[l - 1];
      const std::string b = "bn" + std::to_string(l);
      const auto c = static_cast<std::uint32_t>(bn.channels());
      out.push_back({b + ".gamma", {c}, bn.gamma});
      out.push_back({b + ".beta", {c}, bn.beta});
      out.push_back({b + ".running_mean", {c}, bn.running_mean});
      out.push_back({b + ".running_var", {c}, bn.running_var});
    }
  }
  return out;
}

}  // namespace

std::vector<std::byte> encode_checkpoint(const NetworkModel& model) {
  const auto& cfg = model.net.config;
  ByteWriter w;
  w.put_chars(std::string_view(kMagic, 4));
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(cfg.depth));
  w.put(static_cast<std::uint32_t>(cfg.width));
  w.put(static_cast<std::uint32_t>(cfg.kernel));
  w.put(static_cast<std::uint32_t>(cfg.in_channels));
  w.put(static_cast<std::uint32_t>(cfg.out_channels));
  w.put(cfg.bn_epsilon);
  w.put(cfg.bn_momentum);
  for (double v : model.norm.x_min) w.put(v);
  for (double v : model.norm.x_max) w.put(v);
  auto manifest = tensor_manifest(const_cast<Network<float>&>(model.net));
  w.put(static_cast<std::uint32_t>(manifest.size()));
  for (const auto& t : manifest) {
    w.put_string(t.name);
    w.put(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) w.put(d);
    for (float v : t.data) w.put(v);
  }
  return w.take();
}

NetworkModel decode_checkpoint(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  if (r.get_chars(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("bad magic: expected \"PSM1\"", 0);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) throw FormatError("unsupported PSM1 version " + std::to_string(version), 4);
  NetConfig cfg;
  cfg.depth = r.get<std::uint32_t>("config");
  cfg.width = r.get<std::uint32_t>("config");
  cfg.kernel = r.get<std::uint32_t>("config");
  cfg.in_channels = r.get<std::uint32_t>("config");
  cfg.out_channels = r.get<std::uint32_t>("config");
  cfg.bn_epsilon = r.get<double>("config");
  cfg.bn_momentum = r.get<double>("config");
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid network config: ") + e.what(), 8);
  }
  NetworkModel model;
  for (auto& v : model.norm.x_min) v = r.get<double>("norm stats");
  for (auto& v : model.norm.x_max) v = r.get<double>("norm stats");
  model.net = Network<float>::zeros(cfg);
  auto manifest = tensor_manifest(model.net);
  const auto count_at = r.offset();
  const auto count = r.get<std::uint32_t>("tensor count");
  if (count != manifest.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, config implies " +
                          std::to_string(manifest.size()),
                      count_at);
  }
  for (auto& t : manifest) {
    const auto at = r.offset();
    const auto name = r.get_string("tensor name");
    if (name != t.name) throw FormatError("expected tensor " + t.name + ", found " + name, at);
    const auto rank = r.get<std::uint8_t>("tensor rank");
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = r.get<std::uint32_t>("tensor dims");
    if (dims != t.dims) throw FormatError("shape audit failed for tensor " + t.name, at);
    r.need(t.data.size() * sizeof(float), "tensor data");
    for (auto& v : t.data) v = r.get<float>();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last tensor", r.offset());
  for (const auto& bn : model.net.bn) {
    for (float v : bn.running_var) {
      if (!(v >= 0.0f)) throw FormatError("negative running variance in checkpoint", 0);
    }
  }
  return model;
}

void save_checkpoint(const NetworkModel& model, const std::filesystem::path& path) {
  detail::write_file(path, encode_checkpoint(model));
}

NetworkModel load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(detail::read_file(path)); }

}  // namespace polsar::nn

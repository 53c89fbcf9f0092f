#include "rulforge/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "rulforge/error.hpp"

namespace rulforge {
namespace {

constexpr std::array<char, 8> kMagic = {'R', 'U', 'L', 'F', 'M', 'D', 'L', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

std::uint64_t read_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw DataError("model file truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  for (double v : t.values()) write_u64(out, std::bit_cast<std::uint64_t>(v));
}

void read_tensor(std::istream& in, Tensor& t) {
  for (auto& v : t.values()) v = std::bit_cast<double>(read_u64(in));
}

nlohmann::json tensor_shapes(const std::vector<LayerParams>& layers) {
  auto arr = nlohmann::json::array();
  for (const auto& l : layers) arr.push_back({{"weights", l.weights.shape()}, {"bias", l.bias.shape()}});
  return arr;
}

std::vector<LayerParams> shaped_layers(const nlohmann::json& shapes) {
  std::vector<LayerParams> layers;
  for (const auto& s : shapes) {
    const auto make = [](const Shape& shape) { return shape.empty() ? Tensor() : Tensor(shape); };
    layers.push_back({make(s.at("weights").get<Shape>()), make(s.at("bias").get<Shape>())});
  }
  return layers;
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  check_params(model.spec, model.params);
  const bool has_moments = !model.params.first_moment.empty();
  nlohmann::json header = {
      {"format", "rulforge-model"},
      {"version", kModelFormatVersion},
      {"spec", model.spec},
      {"tensors", tensor_shapes(model.params.layers)},
      {"has_moments", has_moments},
      {"generation", model.params.generation},
  };
  const std::string text = header.dump();
  out.write(kMagic.data(), kMagic.size());
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto write_all = [&](const std::vector<LayerParams>& layers) {
    for (const auto& l : layers) {
      write_tensor(out, l.weights);
      write_tensor(out, l.bias);
    }
  };
  write_all(model.params.layers);
  if (has_moments) {
    write_all(model.params.first_moment);
    write_all(model.params.second_moment);
  }
}

Model read_model(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw SchemaError("not a rulforge model file");
  const auto len = read_u64(in);
  if (len > (1u << 30)) throw SchemaError("model header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("model file truncated");
  const auto header = nlohmann::json::parse(text);
  if (header.value("format", "") != "rulforge-model") throw SchemaError("not a rulforge model file");
  if (header.at("version").get<int>() != kModelFormatVersion) {
    throw SchemaError("unsupported model format version " + header.at("version").dump());
  }
  Model m;
  header.at("spec").get_to(m.spec);
  m.params.layers = shaped_layers(header.at("tensors"));
  m.params.generation = header.value("generation", std::uint64_t{0});
  const auto read_all = [&](std::vector<LayerParams>& layers) {
    for (auto& l : layers) {
      read_tensor(in, l.weights);
      read_tensor(in, l.bias);
    }
  };
  read_all(m.params.layers);
  if (header.value("has_moments", false)) {
    m.params.first_moment = shaped_layers(header.at("tensors"));
    m.params.second_moment = shaped_layers(header.at("tensors"));
    read_all(m.params.first_moment);
    read_all(m.params.second_moment);
  }
  check_params(m.spec, m.params);
  return m;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_model(out, model);
  if (!out) throw DataError("write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  return read_model(in);
}

}  // namespace rulforge

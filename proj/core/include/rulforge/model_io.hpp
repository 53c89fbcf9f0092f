#pragma once

#include <filesystem>
#include <iosfwd>

#include "rulforge/network.hpp"

namespace rulforge {

struct Model {
  NetworkSpec spec;
  ParamSet params;
  friend bool operator==(const Model&, const Model&) = default;
};

inline constexpr int kModelFormatVersion = 1;

// Layout: 8-byte magic "RULFMDL1", uint64 little-endian header length, JSON
// header (format version, spec, tensor shapes), then every tensor as raw
// little-endian float64 in declaration order: per layer weights then bias,
// followed by the Adam moments when present.
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace rulforge

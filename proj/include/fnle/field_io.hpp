#pragma once

// Field files: raw little-endian float64 values plus a JSON sidecar describing the grid,
// and CSV export of 1D/2D slices.

#include <json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>

#include "fnle/grid.hpp"

namespace fnle {

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | ((v >> (8 * i)) & 0xffu);
  return out;
}

}  // namespace detail

/// Writes `path` (binary) and `path` + ".json" (sidecar).
inline void write_field(const ScalarField& f, const std::filesystem::path& path, const std::string& name = "u") {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(f[i]));
    bin.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!bin) throw IoError("write failed: " + path.string());

  nlohmann::json side = f.grid().describe();
  side["name"] = name;
  side["shape"] = std::vector<int>(static_cast<std::size_t>(f.grid().axes()), f.grid().points_per_axis());
  side["dtype"] = "float64-le";
  side["order"] = "row-major, axis 0 slowest";
  std::ofstream js(path.string() + ".json");
  if (!js) throw IoError("cannot open sidecar for " + path.string());
  js << side.dump(2) << '\n';
}

/// Reads a field written by write_field; the grid is rebuilt from the sidecar.
inline ScalarField read_field(const std::filesystem::path& path) {
  std::ifstream js(path.string() + ".json");
  if (!js) throw IoError("missing sidecar " + path.string() + ".json");
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad sidecar " + path.string() + ".json: " + e.what());
  }
  PeriodicGrid grid = [&] {
    try {
      const Mode mode = side.at("mode").get<std::string>() == "real" ? Mode::real : Mode::complex;
      const Layout layout = side.at("layout").get<std::string>() == "tube" ? Layout::tube : Layout::full;
      return PeriodicGrid::make(mode, layout, side.at("dimension").get<int>(), side.at("points_per_axis").get<int>(),
                                side.at("periods").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw IoError("bad sidecar " + path.string() + ".json: " + e.what());
    }
  }();
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + path.string());
  ScalarField f(grid);
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::uint64_t bits = 0;
    if (!bin.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw IoError("truncated field file " + path.string());
    f[i] = std::bit_cast<double>(detail::to_little_endian(bits));
  }
  return f;
}

/// CSV of the slice through the origin spanned by the first one or two axes:
/// columns axis coordinates then value.
inline void write_csv_slice(const ScalarField& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const PeriodicGrid& g = f.grid();
  const int N = g.points_per_axis();
  const std::size_t stride0 = g.axes() >= 2 ? g.size() / static_cast<std::size_t>(N) : 1;
  const std::size_t stride1 = g.axes() >= 2 ? stride0 / static_cast<std::size_t>(N) : 0;
  out << std::setprecision(17);
  if (g.axes() == 1) {
    out << "x0,value\n";
    for (int i = 0; i < N; ++i) out << i * g.spacing(0) << ',' << f[static_cast<std::size_t>(i)] << '\n';
    return;
  }
  out << "x0,x1,value\n";
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      out << i * g.spacing(0) << ',' << j * g.spacing(1) << ','
          << f[static_cast<std::size_t>(i) * stride0 + static_cast<std::size_t>(j) * stride1] << '\n';
}

}  // namespace fnle

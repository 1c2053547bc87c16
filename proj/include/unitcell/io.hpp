#pragma once

/**
 * @file io.hpp
 *
 * Field dumps: a JSON metadata sidecar describing the grid and layout, one
 * flat little-endian float64 binary per tensor component (row-major, index =
 * iy*nx + ix), and a plain-text CSV option for small grids.
 */

#include <bit>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "unitcell/fields.hpp"
#include "unitcell/microstructure.hpp"

namespace unitcell {

static_assert(std::endian::native == std::endian::little, "field dumps assume a little-endian host");

namespace detail {

inline void write_plane(const std::filesystem::path& path, const Eigen::ArrayXXd& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_plane: cannot open " + path.string());
  for (Eigen::Index iy = 0; iy < a.cols(); ++iy)
    for (Eigen::Index ix = 0; ix < a.rows(); ++ix) {
      const double v = a(ix, iy);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  if (!out) throw std::runtime_error("write_plane: write failed for " + path.string());
}

inline nlohmann::json grid_meta(const Grid2& g) {
  return {{"nx", g.nx}, {"ny", g.ny}, {"lx", g.lx}, {"ly", g.ly}};
}

}  // namespace detail

/** Reads one component plane written by a field dump. */
inline Eigen::ArrayXXd read_plane(const std::filesystem::path& path, const Grid2& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_plane: cannot open " + path.string());
  Eigen::ArrayXXd a(grid.nx, grid.ny);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      double v = 0.0;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw std::runtime_error("read_plane: truncated file " + path.string());
      a(ix, iy) = v;
    }
  return a;
}

/**
 * Writes <name>.json plus <name>_11.bin, <name>_22.bin, <name>_12.bin into
 * dir.  `extra` is merged into the sidecar (load case, solver, ...).
 */
inline void save_tensor_field(const std::filesystem::path& dir, const std::string& name,
                              const TensorField2& f, const nlohmann::json& extra = nlohmann::json::object()) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta = {
      {"grid", detail::grid_meta(f.grid)},
      {"components", {"11", "22", "12"}},
      {"files", {{"11", name + "_11.bin"}, {"22", name + "_22.bin"}, {"12", name + "_12.bin"}}},
      {"format", "float64 little-endian"},
      {"ordering", "row-major: index = iy*nx + ix, iy ascending"},
  };
  meta.update(extra);
  std::ofstream side(dir / (name + ".json"));
  if (!side) throw std::runtime_error("save_tensor_field: cannot open sidecar in " + dir.string());
  side << meta.dump(2) << "\n";
  detail::write_plane(dir / (name + "_11.bin"), f.c11);
  detail::write_plane(dir / (name + "_22.bin"), f.c22);
  detail::write_plane(dir / (name + "_12.bin"), f.c12);
}

/** Writes <name>.json plus <name>.bin for a scalar per-cell field. */
inline void save_scalar_field(const std::filesystem::path& dir, const std::string& name,
                              const Grid2& grid, const Eigen::ArrayXXd& values,
                              const nlohmann::json& extra = nlohmann::json::object()) {
  if (values.rows() != grid.nx || values.cols() != grid.ny)
    throw std::invalid_argument("save_scalar_field: values do not match the grid");
  std::filesystem::create_directories(dir);
  nlohmann::json meta = {
      {"grid", detail::grid_meta(grid)},
      {"files", {{"value", name + ".bin"}}},
      {"format", "float64 little-endian"},
      {"ordering", "row-major: index = iy*nx + ix, iy ascending"},
  };
  meta.update(extra);
  std::ofstream side(dir / (name + ".json"));
  if (!side) throw std::runtime_error("save_scalar_field: cannot open sidecar in " + dir.string());
  side << meta.dump(2) << "\n";
  detail::write_plane(dir / (name + ".bin"), values);
}

/** Plain-text dump for small grids: one row per cell, full precision. */
inline void save_tensor_field_csv(const std::filesystem::path& path, const TensorField2& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_tensor_field_csv: cannot open " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "ix,iy,c11,c22,c12\n";
  for (int iy = 0; iy < f.grid.ny; ++iy)
    for (int ix = 0; ix < f.grid.nx; ++ix)
      out << ix << ',' << iy << ',' << f.c11(ix, iy) << ',' << f.c22(ix, iy) << ','
          << f.c12(ix, iy) << '\n';
  if (!out) throw std::runtime_error("save_tensor_field_csv: write failed for " + path.string());
}

}  // namespace unitcell

#pragma once

/**
 * @file microstructure.hpp
 *
 * Unit-cell geometry: rectangular periodic grids, per-cell phase maps with an
 * isotropic-moduli phase table, generators for the built-in geometries
 * (centered fiber, fiber pair, grid-aligned laminate), and plain-text phase
 * map ingestion.
 *
 * Cells are indexed (ix, iy) with ix in [0, nx) and iy in [0, ny); cell
 * centers sit at ((ix + 1/2) * lx / nx, (iy + 1/2) * ly / ny). Phase
 * membership is decided by the cell-center point (no partial volumes).
 */

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "unitcell/tensor.hpp"

namespace unitcell {

/** Rectangular periodic cell: nx x ny cells over physical size lx x ly. */
struct Grid2 {
  int nx = 0;
  int ny = 0;
  double lx = 1.0;
  double ly = 1.0;

  Grid2() = default;
  Grid2(int nx_, int ny_, double lx_ = 1.0, double ly_ = 1.0) : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("Grid2: nx, ny must be >= 2");
    if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("Grid2: lx, ly must be > 0");
  }

  int cells() const { return nx * ny; }

  bool operator==(const Grid2& o) const = default;
};

/** Isotropic phase moduli. */
struct Phase {
  double E = 0.0;
  double nu = 0.0;
};

/**
 * Per-cell phase IDs plus the phase table mapping ID to isotropic moduli.
 *
 * Invariants: every ID stored in the array has a table entry, and at least
 * one phase has E > 0 (enforced by validate(), called by all generators).
 */
struct MaterialField {
  Grid2 grid;
  Eigen::ArrayXXi phase_id;  // nx rows, ny cols; (ix, iy) = (row, col)
  std::vector<Phase> phases;

  int phase_at(int ix, int iy) const { return phase_id(ix, iy); }

  /** Throws std::invalid_argument if an invariant is violated. */
  void validate() const {
    if (phase_id.rows() != grid.nx || phase_id.cols() != grid.ny)
      throw std::invalid_argument("MaterialField: phase array does not match grid");
    const int n_phases = static_cast<int>(phases.size());
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix) {
        const int p = phase_id(ix, iy);
        if (p < 0 || p >= n_phases)
          throw std::invalid_argument("MaterialField: phase ID " + std::to_string(p) +
                                      " has no table entry");
      }
    bool any_stiff = false;
    for (const Phase& ph : phases) any_stiff = any_stiff || ph.E > 0.0;
    if (!any_stiff) throw std::invalid_argument("MaterialField: all phases have E = 0");
  }
};

namespace detail {

inline double cell_center(int i, int n, double l) { return (i + 0.5) * l / n; }

/** Squared distance from a cell center to a point, shortest periodic image. */
inline double periodic_dist2(double x, double y, double cx, double cy, const Grid2& g) {
  double dx = std::fabs(x - cx);
  double dy = std::fabs(y - cy);
  dx = std::min(dx, g.lx - dx);
  dy = std::min(dy, g.ly - dy);
  return dx * dx + dy * dy;
}

}  // namespace detail

/**
 * Circular fiber centered at the geometric center of the cell.
 *
 * radius_ratio is the fiber radius divided by min(lx, ly); it must lie in
 * (0, 0.5) so the fiber fits the cell. The returned field uses phase 0 for
 * the matrix and phase 1 for the fiber. A radius so small that no cell
 * center falls inside the disk is rejected as degenerate.
 */
inline MaterialField single_fiber(const Grid2& grid, double radius_ratio, const Phase& fiber,
                                  const Phase& matrix) {
  if (!(radius_ratio > 0.0 && radius_ratio < 0.5))
    throw std::invalid_argument("single_fiber: radius_ratio must lie in (0, 0.5)");
  const double r = radius_ratio * std::min(grid.lx, grid.ly);
  const double cx = 0.5 * grid.lx;
  const double cy = 0.5 * grid.ly;

  MaterialField field;
  field.grid = grid;
  field.phases = {matrix, fiber};
  field.phase_id.resize(grid.nx, grid.ny);
  int inside = 0;
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = detail::cell_center(ix, grid.nx, grid.lx);
      const double y = detail::cell_center(iy, grid.ny, grid.ly);
      const bool in = detail::periodic_dist2(x, y, cx, cy, grid) <= r * r;
      field.phase_id(ix, iy) = in ? 1 : 0;
      inside += in;
    }
  if (inside == 0)
    throw std::invalid_argument("single_fiber: no cell center inside the fiber (degenerate radius)");
  field.validate();
  return field;
}

/**
 * Two fibers of radius a and 2a on the horizontal midline of a wide cell,
 * centers separated by `separation` along x and centered as a pair.
 *
 * Phases: 0 = matrix, 1 = small fiber, 2 = large fiber (same moduli for both
 * fibers). Overlapping or out-of-cell disks are rejected.
 */
inline MaterialField two_fibers(const Grid2& grid, double a, double separation, const Phase& fiber,
                                const Phase& matrix) {
  if (!(a > 0.0)) throw std::invalid_argument("two_fibers: radius must be > 0");
  if (separation < 3.0 * a) throw std::invalid_argument("two_fibers: disks of radius a and 2a overlap");
  const double cy = 0.5 * grid.ly;
  const double c1x = 0.5 * grid.lx - 0.5 * separation;  // radius a
  const double c2x = 0.5 * grid.lx + 0.5 * separation;  // radius 2a
  if (c1x - a < 0.0 || c2x + 2.0 * a > grid.lx || cy - 2.0 * a < 0.0 || cy + 2.0 * a > grid.ly)
    throw std::invalid_argument("two_fibers: disk extends outside the cell");

  MaterialField field;
  field.grid = grid;
  field.phases = {matrix, fiber, fiber};
  field.phase_id.resize(grid.nx, grid.ny);
  int inside = 0;
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = detail::cell_center(ix, grid.nx, grid.lx);
      const double y = detail::cell_center(iy, grid.ny, grid.ly);
      int p = 0;
      if (detail::periodic_dist2(x, y, c1x, cy, grid) <= a * a) p = 1;
      if (detail::periodic_dist2(x, y, c2x, cy, grid) <= 4.0 * a * a) p = 2;
      field.phase_id(ix, iy) = p;
      inside += p != 0;
    }
  if (inside == 0) throw std::invalid_argument("two_fibers: no cell center inside either fiber");
  field.validate();
  return field;
}

/**
 * Grid-aligned two-phase laminate: phase 0 occupies fraction f in stripes
 * normal to the given axis (0 = x, 1 = y), phase 1 the rest.
 *
 * f times the cell count along the normal axis must be an integer so layers
 * are exactly grid-aligned; this keeps the closed-form effective response
 * exactly comparable.
 */
inline MaterialField laminate(const Grid2& grid, double f, const Phase& phase1, const Phase& phase2,
                              int normal) {
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("laminate: fraction must lie in (0, 1)");
  if (normal != 0 && normal != 1) throw std::invalid_argument("laminate: normal must be 0 (x) or 1 (y)");
  const int n = normal == 0 ? grid.nx : grid.ny;
  const double layers = f * n;
  const double rounded = std::round(layers);
  if (std::fabs(layers - rounded) > 1e-9 * n || rounded < 1.0 || rounded > n - 1.0)
    throw std::invalid_argument("laminate: fraction " + std::to_string(f) + " is not grid-aligned on " +
                                std::to_string(n) + " cells");
  const int n1 = static_cast<int>(rounded);

  MaterialField field;
  field.grid = grid;
  field.phases = {phase1, phase2};
  field.phase_id.resize(grid.nx, grid.ny);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const int along = normal == 0 ? ix : iy;
      field.phase_id(ix, iy) = along < n1 ? 0 : 1;
    }
  field.validate();
  return field;
}

/** Fraction of cells carrying the given phase ID. */
inline double volume_fraction(const MaterialField& field, int phase) {
  if (phase < 0 || phase >= static_cast<int>(field.phases.size()))
    throw std::invalid_argument("volume_fraction: unknown phase ID " + std::to_string(phase));
  return static_cast<double>((field.phase_id == phase).count()) / field.grid.cells();
}

/**
 * Write the phase ID array as plain text: first line "nx ny", then ny lines
 * of nx integers, top row (iy = ny-1) first.
 */
inline void save_phase_map(const MaterialField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_phase_map: cannot open " + path);
  out << field.grid.nx << ' ' << field.grid.ny << '\n';
  for (int iy = field.grid.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < field.grid.nx; ++ix) out << field.phase_id(ix, iy) << (ix + 1 < field.grid.nx ? " " : "");
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_phase_map: write failed for " + path);
}

/**
 * Read a phase map written in the save_phase_map layout and attach the given
 * phase table. Physical dimensions default to a unit-height cell with the
 * grid's aspect ratio; pass lx/ly to override.
 */
inline MaterialField load_phase_map(const std::string& path, const std::vector<Phase>& phases,
                                    double lx = 0.0, double ly = 0.0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_phase_map: cannot open " + path);
  int nx = 0, ny = 0;
  if (!(in >> nx >> ny) || nx < 2 || ny < 2)
    throw std::runtime_error("load_phase_map: malformed header in " + path);

  MaterialField field;
  if (ly <= 0.0) ly = 1.0;
  if (lx <= 0.0) lx = ly * static_cast<double>(nx) / ny;
  field.grid = Grid2(nx, ny, lx, ly);
  field.phases = phases;
  field.phase_id.resize(nx, ny);
  for (int iy = ny - 1; iy >= 0; --iy)
    for (int ix = 0; ix < nx; ++ix) {
      int p = 0;
      if (!(in >> p)) throw std::runtime_error("load_phase_map: truncated data in " + path);
      field.phase_id(ix, iy) = p;
    }
  field.validate();
  return field;
}

}  // namespace unitcell

#include "eitdg/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/core.h>

namespace eitdg {

Mesh::Mesh(const Box& box, int nx, int ny) : box_(box), nx_(nx), ny_(ny) {
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument(fmt::format("mesh: cell counts must be positive (got {}x{})", nx, ny));
  }
  if (!(box.xmin < box.xmax) || !(box.ymin < box.ymax)) {
    throw std::invalid_argument(fmt::format("mesh: degenerate box [{}, {}] x [{}, {}]", box.xmin,
                                            box.xmax, box.ymin, box.ymax));
  }
  hx_ = box.width() / nx;
  hy_ = box.height() / ny;

  auto xline = [&](int i) { return i == nx ? box.xmax : box.xmin + i * hx_; };
  auto yline = [&](int j) { return j == ny ? box.ymax : box.ymin + j * hy_; };

  cells_.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      cells_.push_back(Cell{xline(i), xline(i + 1), yline(j), yline(j + 1), {-1, -1, -1, -1}});
    }
  }

  edges_.reserve(static_cast<std::size_t>((nx + 1) * ny + nx * (ny + 1)));
  // Vertical edges x = x_i, spanning row j.
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      Edge e;
      e.vertical = true;
      e.start = {xline(i), yline(j)};
      e.end = {xline(i), yline(j + 1)};
      e.length = hy_;
      if (i == 0) {
        e.cells = {cell_index(0, j), kNoCell};
        e.faces = {Face::kLeft, Face::kLeft};
        e.normal = {-1.0, 0.0};
      } else if (i == nx) {
        e.cells = {cell_index(nx - 1, j), kNoCell};
        e.faces = {Face::kRight, Face::kRight};
        e.normal = {1.0, 0.0};
      } else {
        e.cells = {cell_index(i - 1, j), cell_index(i, j)};
        e.faces = {Face::kRight, Face::kLeft};
        e.normal = {1.0, 0.0};
      }
      edges_.push_back(e);
    }
  }
  // Horizontal edges y = y_j, spanning column i.
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      Edge e;
      e.vertical = false;
      e.start = {xline(i), yline(j)};
      e.end = {xline(i + 1), yline(j)};
      e.length = hx_;
      if (j == 0) {
        e.cells = {cell_index(i, 0), kNoCell};
        e.faces = {Face::kBottom, Face::kBottom};
        e.normal = {0.0, -1.0};
      } else if (j == ny) {
        e.cells = {cell_index(i, ny - 1), kNoCell};
        e.faces = {Face::kTop, Face::kTop};
        e.normal = {0.0, 1.0};
      } else {
        e.cells = {cell_index(i, j - 1), cell_index(i, j)};
        e.faces = {Face::kTop, Face::kBottom};
        e.normal = {0.0, 1.0};
      }
      edges_.push_back(e);
    }
  }

  boundary_slot_.assign(edges_.size(), -1);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    const int id = static_cast<int>(k);
    for (int side = 0; side < 2; ++side) {
      if (e.cells[side] != kNoCell) {
        cells_[static_cast<std::size_t>(e.cells[side])].edges[static_cast<int>(e.faces[side])] = id;
      }
    }
    if (e.is_boundary()) {
      boundary_slot_[k] = static_cast<int>(boundary_.size());
      boundary_.push_back(id);
    } else {
      interior_.push_back(id);
    }
  }
}

Vec2 Mesh::face_normal(Face face) {
  switch (face) {
    case Face::kLeft: return {-1.0, 0.0};
    case Face::kRight: return {1.0, 0.0};
    case Face::kBottom: return {0.0, -1.0};
    case Face::kTop: return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

int Mesh::locate(double x, double y) const {
  const int i = std::clamp(static_cast<int>(std::floor((x - box_.xmin) / hx_)), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor((y - box_.ymin) / hy_)), 0, ny_ - 1);
  return cell_index(i, j);
}

Mesh build_mesh(const Box& box, int nx, int ny) { return Mesh(box, nx, ny); }

EdgeClassification classify_edges(const Mesh& mesh, const Vec2& v) {
  if (v.norm() == 0.0) {
    throw std::invalid_argument("classify_edges: upwind vector must be nonzero");
  }
  EdgeClassification out;
  out.v = v;
  out.sign.resize(mesh.edges().size());
  for (std::size_t k = 0; k < mesh.edges().size(); ++k) {
    const Edge& e = mesh.edge(k);
    const double d = v.dot(e.normal);
    if (d == 0.0) {
      throw std::invalid_argument(fmt::format(
          "classify_edges: v=({}, {}) is tangent to edge {} from ({}, {}) to ({}, {})", v.x(), v.y(),
          k, e.start.x(), e.start.y(), e.end.x(), e.end.y()));
    }
    out.sign[k] = d > 0.0 ? 1 : -1;
    if (e.is_boundary()) {
      (d < 0.0 ? out.inflow : out.outflow).push_back(static_cast<int>(k));
    }
  }
  return out;
}

}  // namespace eitdg

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace eitdg {

using Vec2 = Eigen::Vector2d;

struct Box {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool operator==(const Box&) const = default;
};

/// Local face numbering inside a rectangle.
enum class Face : int { kLeft = 0, kRight = 1, kBottom = 2, kTop = 3 };

inline constexpr int kNoCell = -1;

struct Cell {
  double x0, x1, y0, y1;
  std::array<int, 4> edges;  // indexed by Face

  Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  double area() const { return (x1 - x0) * (y1 - y0); }
};

/// An edge of the structured grid. `normal` points out of `cells[0]`; for a
/// boundary edge it is the outward normal of the box and `cells[1]` is kNoCell.
struct Edge {
  std::array<int, 2> cells{kNoCell, kNoCell};
  std::array<Face, 2> faces{Face::kLeft, Face::kLeft};
  Vec2 normal;
  Vec2 start;  // endpoints, ordered along increasing x or y
  Vec2 end;
  double length = 0.0;
  bool vertical = false;

  bool is_boundary() const { return cells[1] == kNoCell; }
  Vec2 point(double t) const { return 0.5 * (1.0 - t) * start + 0.5 * (1.0 + t) * end; }
};

/// Uniform nx-by-ny partition of a box. Cells are row-major (i fastest).
/// Edges are stored vertical first, then horizontal, each in row-major order.
class Mesh {
 public:
  Mesh(const Box& box, int nx, int ny);

  const Box& box() const { return box_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double h() const { return std::max(hx_, hy_); }

  std::size_t num_cells() const { return cells_.size(); }
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(std::size_t c) const { return cells_.at(c); }
  int cell_index(int i, int j) const { return j * nx_ + i; }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<int>& interior_edges() const { return interior_; }
  const std::vector<int>& boundary_edges() const { return boundary_; }

  /// Position of a global edge index inside boundary_edges(), or -1.
  int boundary_slot(int edge) const { return boundary_slot_.at(static_cast<std::size_t>(edge)); }

  /// Outward unit normal of `face` seen from its cell.
  static Vec2 face_normal(Face face);

  /// Cell containing (x, y); points on shared lines resolve to the upper/right cell
  /// except on the box's max sides.
  int locate(double x, double y) const;

  bool same_grid(const Mesh& other) const {
    return box_ == other.box_ && nx_ == other.nx_ && ny_ == other.ny_;
  }

 private:
  Box box_;
  int nx_, ny_;
  double hx_, hy_;
  std::vector<Cell> cells_;
  std::vector<Edge> edges_;
  std::vector<int> interior_;
  std::vector<int> boundary_;
  std::vector<int> boundary_slot_;
};

Mesh build_mesh(const Box& box, int nx, int ny);

/// Per-edge upwinding labels for a fixed vector v.
struct EdgeClassification {
  Vec2 v;
  std::vector<int> sign;     // sign(v . edge.normal), one per edge, never 0
  std::vector<int> inflow;   // boundary edges with v . n < 0
  std::vector<int> outflow;  // boundary edges with v . n > 0

  /// sign(v . n_K) for the cell on side `side` (0 or 1) of `edge`.
  int side_sign(int edge, int side) const { return side == 0 ? sign[edge] : -sign[edge]; }
};

EdgeClassification classify_edges(const Mesh& mesh, const Vec2& v);

}  // namespace eitdg

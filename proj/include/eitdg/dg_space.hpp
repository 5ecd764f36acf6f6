#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>

#include <Eigen/Core>

#include "eitdg/mesh.hpp"

namespace eitdg {

// Local basis: monomials {1, xi, eta, xi^2, xi*eta, eta^2} in the cell's
// reference coordinates xi, eta in [-1, 1].
inline constexpr int kLocalDim = 6;
inline constexpr int kEdgePoints = 4;
inline constexpr int kCellPoints = kEdgePoints * kEdgePoints;

using ScalarFn = std::function<double(double, double)>;
using LocalMatrix = Eigen::Matrix<double, kLocalDim, kLocalDim>;
using LocalVector = Eigen::Matrix<double, kLocalDim, 1>;
using CellBasisTable = Eigen::Matrix<double, kCellPoints, kLocalDim>;
using EdgeBasisTable = Eigen::Matrix<double, kEdgePoints, kLocalDim>;

/// Piecewise-quadratic discontinuous space on a uniform rectangular mesh,
/// with a 4x4 tensor Gauss rule on cells and a 4-point Gauss rule on edges.
class DgSpace {
 public:
  explicit DgSpace(Mesh mesh);
  static std::shared_ptr<const DgSpace> create(Mesh mesh);

  const Mesh& mesh() const { return mesh_; }
  std::size_t num_cells() const { return mesh_.num_cells(); }
  std::size_t dim() const { return kLocalDim * num_cells(); }

  static LocalVector basis(double xi, double eta);

  /// 1D Gauss-Legendre rule on [-1, 1].
  static const std::array<double, kEdgePoints>& gauss_nodes();
  static const std::array<double, kEdgePoints>& gauss_weights();

  // Cell quadrature; point q = a + 4 * b uses xi = node[a], eta = node[b].
  double cell_xi(int q) const { return gauss_nodes()[q % kEdgePoints]; }
  double cell_eta(int q) const { return gauss_nodes()[q / kEdgePoints]; }
  /// Physical weights (include the cell Jacobian); identical for every cell.
  const std::array<double, kCellPoints>& cell_weights() const { return cell_weights_; }
  Vec2 cell_point(std::size_t cell, int q) const;
  const CellBasisTable& cell_basis() const { return cell_basis_; }
  /// Physical derivatives of the basis at the cell quadrature points.
  const CellBasisTable& cell_dx() const { return cell_dx_; }
  const CellBasisTable& cell_dy() const { return cell_dy_; }

  /// Basis values on a face at the edge quadrature points (edge parameter t = node k).
  const EdgeBasisTable& face_basis(Face face) const { return face_basis_[static_cast<int>(face)]; }
  /// Physical edge weights (length / 2 times the Gauss weight).
  double edge_weight(const Edge& edge, int k) const { return 0.5 * edge.length * gauss_weights()[k]; }
  /// Local (xi, eta) of edge parameter t on a face.
  static Vec2 face_point(Face face, double t);

  const LocalMatrix& mass() const { return mass_; }
  const LocalMatrix& mass_inverse() const { return mass_inv_; }

  /// Reference coordinates of a physical point inside `cell`.
  Vec2 to_reference(std::size_t cell, double x, double y) const;

  bool compatible(const DgSpace& other) const {
    return this == &other || mesh_.same_grid(other.mesh_);
  }

 private:
  Mesh mesh_;
  std::array<double, kCellPoints> cell_weights_{};
  CellBasisTable cell_basis_, cell_dx_, cell_dy_;
  std::array<EdgeBasisTable, 4> face_basis_;
  LocalMatrix mass_, mass_inv_;
};

using SpacePtr = std::shared_ptr<const DgSpace>;

/// Scalar piecewise quadratic: 6 coefficients per cell, cell-major.
class DgFunction {
 public:
  explicit DgFunction(SpacePtr space);
  DgFunction(SpacePtr space, Eigen::VectorXd coeffs);

  const SpacePtr& space() const { return space_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  Eigen::VectorXd& coeffs() { return coeffs_; }
  auto local(std::size_t cell) const { return coeffs_.segment<kLocalDim>(kLocalDim * cell); }
  auto local(std::size_t cell) { return coeffs_.segment<kLocalDim>(kLocalDim * cell); }

  /// Value at a physical point.
  double at(double x, double y) const;

  DgFunction& operator+=(const DgFunction& other);
  DgFunction& operator-=(const DgFunction& other);
  DgFunction& operator*=(double a);
  void axpy(double a, const DgFunction& x);

 private:
  SpacePtr space_;
  Eigen::VectorXd coeffs_;
};

DgFunction operator+(DgFunction a, const DgFunction& b);
DgFunction operator-(DgFunction a, const DgFunction& b);
DgFunction operator*(double s, DgFunction a);

/// Vector field (q1, q2), each component in the scalar space.
/// Per cell: 6 coefficients of q1 followed by 6 of q2.
class FluxField {
 public:
  explicit FluxField(SpacePtr space);
  FluxField(SpacePtr space, Eigen::VectorXd coeffs);

  const SpacePtr& space() const { return space_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  Eigen::VectorXd& coeffs() { return coeffs_; }
  auto component(std::size_t cell, int c) const {
    return coeffs_.segment<kLocalDim>(2 * kLocalDim * cell + kLocalDim * c);
  }
  auto component(std::size_t cell, int c) {
    return coeffs_.segment<kLocalDim>(2 * kLocalDim * cell + kLocalDim * c);
  }
  DgFunction component(int c) const;

  Vec2 value(std::size_t cell, double xi, double eta) const;
  Vec2 at(double x, double y) const;

 private:
  SpacePtr space_;
  Eigen::VectorXd coeffs_;
};

/// Values on boundary-edge quadrature points; row = slot in mesh.boundary_edges().
class BoundaryTrace {
 public:
  explicit BoundaryTrace(SpacePtr space);
  BoundaryTrace(SpacePtr space, Eigen::MatrixXd values);

  const SpacePtr& space() const { return space_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }
  double operator()(std::size_t slot, int k) const { return values_(static_cast<Eigen::Index>(slot), k); }
  double& operator()(std::size_t slot, int k) { return values_(static_cast<Eigen::Index>(slot), k); }

  BoundaryTrace& operator+=(const BoundaryTrace& other);
  BoundaryTrace& operator-=(const BoundaryTrace& other);
  BoundaryTrace& operator*=(double a);

 private:
  SpacePtr space_;
  Eigen::MatrixXd values_;
};

BoundaryTrace operator+(BoundaryTrace a, const BoundaryTrace& b);
BoundaryTrace operator-(BoundaryTrace a, const BoundaryTrace& b);
BoundaryTrace operator*(double s, BoundaryTrace a);

/// Samples at cell quadrature points: rows are cells, columns quadrature points.
using QuadratureField = Eigen::Matrix<double, Eigen::Dynamic, kCellPoints, Eigen::RowMajor>;

DgFunction project(const SpacePtr& space, const ScalarFn& func);
DgFunction project(const SpacePtr& space, const QuadratureField& samples);
double evaluate(const DgFunction& f, std::size_t cell, const Vec2& local);
QuadratureField quadrature_values(const DgFunction& f);
QuadratureField quadrature_values(const SpacePtr& space, const ScalarFn& func);

double inner_l2(const DgFunction& a, const DgFunction& b);
double inner_l2(const FluxField& a, const FluxField& b);
double inner_h1(const DgFunction& a, const DgFunction& b, const FluxField& grad_a,
                const FluxField& grad_b);
double inner_boundary(const BoundaryTrace& a, const BoundaryTrace& b);
double norm_l2(const DgFunction& a);
double norm_boundary(const BoundaryTrace& a);

/// L2 distance between a DG function and a pointwise function, by cell quadrature.
double l2_error(const DgFunction& f, const ScalarFn& exact);

/// Physical location of boundary quadrature point k on boundary slot `slot`.
Vec2 boundary_point(const DgSpace& space, std::size_t slot, int k);
BoundaryTrace sample_boundary(const SpacePtr& space, const ScalarFn& func);
/// Trace of a DG function from the unique adjacent cell.
BoundaryTrace trace(const DgFunction& f);

/// One row per cell: x, y, value at the cell center.
void write_center_csv(std::ostream& os, const DgFunction& f, const char* value_name = "value");
/// One row per cell: cell index and its 6 coefficients.
void write_coeff_csv(std::ostream& os, const DgFunction& f);

void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what);

}  // namespace eitdg

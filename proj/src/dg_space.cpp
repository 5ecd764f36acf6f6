#include "eitdg/dg_space.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <fmt/format.h>

namespace eitdg {

namespace {

Eigen::Matrix<double, kLocalDim, 2> basis_grad_ref(double xi, double eta) {
  Eigen::Matrix<double, kLocalDim, 2> g;
  g << 0.0, 0.0,
       1.0, 0.0,
       0.0, 1.0,
       2.0 * xi, 0.0,
       eta, xi,
       0.0, 2.0 * eta;
  return g;
}

}  // namespace

DgSpace::DgSpace(Mesh mesh) : mesh_(std::move(mesh)) {
  const auto& nodes = gauss_nodes();
  const auto& weights = gauss_weights();
  const double jac = 0.25 * mesh_.hx() * mesh_.hy();
  const double dxi_dx = 2.0 / mesh_.hx();
  const double deta_dy = 2.0 / mesh_.hy();

  for (int q = 0; q < kCellPoints; ++q) {
    const double xi = cell_xi(q);
    const double eta = cell_eta(q);
    cell_weights_[q] = weights[q % kEdgePoints] * weights[q / kEdgePoints] * jac;
    cell_basis_.row(q) = basis(xi, eta).transpose();
    const auto g = basis_grad_ref(xi, eta);
    cell_dx_.row(q) = dxi_dx * g.col(0).transpose();
    cell_dy_.row(q) = deta_dy * g.col(1).transpose();
  }
  for (int f = 0; f < 4; ++f) {
    for (int k = 0; k < kEdgePoints; ++k) {
      const Vec2 p = face_point(static_cast<Face>(f), nodes[k]);
      face_basis_[f].row(k) = basis(p.x(), p.y()).transpose();
    }
  }
  mass_ = cell_basis_.transpose() * Eigen::Map<const Eigen::Matrix<double, kCellPoints, 1>>(
                                        cell_weights_.data()).asDiagonal() * cell_basis_;
  mass_inv_ = mass_.llt().solve(LocalMatrix::Identity());
}

std::shared_ptr<const DgSpace> DgSpace::create(Mesh mesh) {
  return std::make_shared<const DgSpace>(std::move(mesh));
}

LocalVector DgSpace::basis(double xi, double eta) {
  LocalVector v;
  v << 1.0, xi, eta, xi * xi, xi * eta, eta * eta;
  return v;
}

const std::array<double, kEdgePoints>& DgSpace::gauss_nodes() {
  static const std::array<double, kEdgePoints> nodes = {
      -0.86113631159405257522, -0.33998104358485626480, 0.33998104358485626480,
      0.86113631159405257522};
  return nodes;
}

const std::array<double, kEdgePoints>& DgSpace::gauss_weights() {
  static const std::array<double, kEdgePoints> weights = {
      0.34785484513745385737, 0.65214515486254614263, 0.65214515486254614263,
      0.34785484513745385737};
  return weights;
}

Vec2 DgSpace::cell_point(std::size_t cell, int q) const {
  const Cell& c = mesh_.cell(cell);
  const Vec2 mid = c.center();
  return {mid.x() + 0.5 * mesh_.hx() * cell_xi(q), mid.y() + 0.5 * mesh_.hy() * cell_eta(q)};
}

Vec2 DgSpace::face_point(Face face, double t) {
  switch (face) {
    case Face::kLeft: return {-1.0, t};
    case Face::kRight: return {1.0, t};
    case Face::kBottom: return {t, -1.0};
    case Face::kTop: return {t, 1.0};
  }
  return {0.0, 0.0};
}

Vec2 DgSpace::to_reference(std::size_t cell, double x, double y) const {
  const Vec2 mid = mesh_.cell(cell).center();
  return {2.0 * (x - mid.x()) / mesh_.hx(), 2.0 * (y - mid.y()) / mesh_.hy()};
}

void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what) {
  if (!a || !b || !a->compatible(*b)) {
    throw std::invalid_argument(fmt::format("{}: operands live on different DG spaces", what));
  }
}

// ---------------------------------------------------------------------------
// DgFunction

DgFunction::DgFunction(SpacePtr space)
    : space_(std::move(space)), coeffs_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space_->dim()))) {}

DgFunction::DgFunction(SpacePtr space, Eigen::VectorXd coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (static_cast<std::size_t>(coeffs_.size()) != space_->dim()) {
    throw std::invalid_argument(fmt::format("DgFunction: expected {} coefficients, got {}",
                                            space_->dim(), coeffs_.size()));
  }
}

double DgFunction::at(double x, double y) const {
  const auto cell = static_cast<std::size_t>(space_->mesh().locate(x, y));
  return evaluate(*this, cell, space_->to_reference(cell, x, y));
}

DgFunction& DgFunction::operator+=(const DgFunction& other) {
  require_same_space(space_, other.space_, "DgFunction +=");
  coeffs_ += other.coeffs_;
  return *this;
}

DgFunction& DgFunction::operator-=(const DgFunction& other) {
  require_same_space(space_, other.space_, "DgFunction -=");
  coeffs_ -= other.coeffs_;
  return *this;
}

DgFunction& DgFunction::operator*=(double a) {
  coeffs_ *= a;
  return *this;
}

void DgFunction::axpy(double a, const DgFunction& x) {
  require_same_space(space_, x.space_, "DgFunction axpy");
  coeffs_ += a * x.coeffs_;
}

DgFunction operator+(DgFunction a, const DgFunction& b) { return a += b; }
DgFunction operator-(DgFunction a, const DgFunction& b) { return a -= b; }
DgFunction operator*(double s, DgFunction a) { return a *= s; }

// ---------------------------------------------------------------------------
// FluxField

FluxField::FluxField(SpacePtr space)
    : space_(std::move(space)),
      coeffs_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * space_->dim()))) {}

FluxField::FluxField(SpacePtr space, Eigen::VectorXd coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (static_cast<std::size_t>(coeffs_.size()) != 2 * space_->dim()) {
    throw std::invalid_argument(fmt::format("FluxField: expected {} coefficients, got {}",
                                            2 * space_->dim(), coeffs_.size()));
  }
}

DgFunction FluxField::component(int c) const {
  DgFunction out(space_);
  for (std::size_t cell = 0; cell < space_->num_cells(); ++cell) {
    out.local(cell) = component(cell, c);
  }
  return out;
}

Vec2 FluxField::value(std::size_t cell, double xi, double eta) const {
  const LocalVector phi = DgSpace::basis(xi, eta);
  return {phi.dot(component(cell, 0)), phi.dot(component(cell, 1))};
}

Vec2 FluxField::at(double x, double y) const {
  const auto cell = static_cast<std::size_t>(space_->mesh().locate(x, y));
  const Vec2 r = space_->to_reference(cell, x, y);
  return value(cell, r.x(), r.y());
}

// ---------------------------------------------------------------------------
// BoundaryTrace

BoundaryTrace::BoundaryTrace(SpacePtr space)
    : space_(std::move(space)),
      values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space_->mesh().boundary_edges().size()),
                                    kEdgePoints)) {}

BoundaryTrace::BoundaryTrace(SpacePtr space, Eigen::MatrixXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  const auto rows = static_cast<Eigen::Index>(space_->mesh().boundary_edges().size());
  if (values_.rows() != rows || values_.cols() != kEdgePoints) {
    throw std::invalid_argument(fmt::format("BoundaryTrace: expected {}x{} values, got {}x{}", rows,
                                            kEdgePoints, values_.rows(), values_.cols()));
  }
}

BoundaryTrace& BoundaryTrace::operator+=(const BoundaryTrace& other) {
  require_same_space(space_, other.space_, "BoundaryTrace +=");
  values_ += other.values_;
  return *this;
}

BoundaryTrace& BoundaryTrace::operator-=(const BoundaryTrace& other) {
  require_same_space(space_, other.space_, "BoundaryTrace -=");
  values_ -= other.values_;
  return *this;
}

BoundaryTrace& BoundaryTrace::operator*=(double a) {
  values_ *= a;
  return *this;
}

BoundaryTrace operator+(BoundaryTrace a, const BoundaryTrace& b) { return a += b; }
BoundaryTrace operator-(BoundaryTrace a, const BoundaryTrace& b) { return a -= b; }
BoundaryTrace operator*(double s, BoundaryTrace a) { return a *= s; }

// ---------------------------------------------------------------------------
// Projection, evaluation, inner products

QuadratureField quadrature_values(const SpacePtr& space, const ScalarFn& func) {
  QuadratureField out(static_cast<Eigen::Index>(space->num_cells()), kCellPoints);
  for (std::size_t c = 0; c < space->num_cells(); ++c) {
    for (int q = 0; q < kCellPoints; ++q) {
      const Vec2 p = space->cell_point(c, q);
      out(static_cast<Eigen::Index>(c), q) = func(p.x(), p.y());
    }
  }
  return out;
}

QuadratureField quadrature_values(const DgFunction& f) {
  const auto& space = *f.space();
  QuadratureField out(static_cast<Eigen::Index>(space.num_cells()), kCellPoints);
  for (std::size_t c = 0; c < space.num_cells(); ++c) {
    out.row(static_cast<Eigen::Index>(c)) = (space.cell_basis() * f.local(c)).transpose();
  }
  return out;
}

DgFunction project(const SpacePtr& space, const QuadratureField& samples) {
  if (static_cast<std::size_t>(samples.rows()) != space->num_cells()) {
    throw std::invalid_argument("project: sample table does not match the mesh");
  }
  DgFunction out(space);
  const auto& w = space->cell_weights();
  for (std::size_t c = 0; c < space->num_cells(); ++c) {
    LocalVector rhs = LocalVector::Zero();
    for (int q = 0; q < kCellPoints; ++q) {
      rhs += (w[q] * samples(static_cast<Eigen::Index>(c), q)) * space->cell_basis().row(q).transpose();
    }
    out.local(c) = space->mass_inverse() * rhs;
  }
  return out;
}

DgFunction project(const SpacePtr& space, const ScalarFn& func) {
  return project(space, quadrature_values(space, func));
}

double evaluate(const DgFunction& f, std::size_t cell, const Vec2& local) {
  if (cell >= f.space()->num_cells()) {
    throw std::out_of_range(fmt::format("evaluate: cell {} out of range ({} cells)", cell,
                                        f.space()->num_cells()));
  }
  return DgSpace::basis(local.x(), local.y()).dot(f.local(cell));
}

double inner_l2(const DgFunction& a, const DgFunction& b) {
  require_same_space(a.space(), b.space(), "inner_l2");
  const auto& m = a.space()->mass();
  double sum = 0.0;
  for (std::size_t c = 0; c < a.space()->num_cells(); ++c) {
    sum += a.local(c).dot(m * b.local(c));
  }
  return sum;
}

double inner_l2(const FluxField& a, const FluxField& b) {
  require_same_space(a.space(), b.space(), "inner_l2");
  const auto& m = a.space()->mass();
  double sum = 0.0;
  for (std::size_t c = 0; c < a.space()->num_cells(); ++c) {
    sum += a.component(c, 0).dot(m * b.component(c, 0)) + a.component(c, 1).dot(m * b.component(c, 1));
  }
  return sum;
}

double inner_h1(const DgFunction& a, const DgFunction& b, const FluxField& grad_a,
                const FluxField& grad_b) {
  require_same_space(a.space(), grad_a.space(), "inner_h1");
  require_same_space(b.space(), grad_b.space(), "inner_h1");
  return inner_l2(a, b) + inner_l2(grad_a, grad_b);
}

double inner_boundary(const BoundaryTrace& a, const BoundaryTrace& b) {
  require_same_space(a.space(), b.space(), "inner_boundary");
  const auto& space = *a.space();
  const auto& mesh = space.mesh();
  double sum = 0.0;
  for (std::size_t s = 0; s < mesh.boundary_edges().size(); ++s) {
    const Edge& e = mesh.edge(static_cast<std::size_t>(mesh.boundary_edges()[s]));
    for (int k = 0; k < kEdgePoints; ++k) {
      sum += space.edge_weight(e, k) * a(s, k) * b(s, k);
    }
  }
  return sum;
}

double norm_l2(const DgFunction& a) { return std::sqrt(std::max(0.0, inner_l2(a, a))); }
double norm_boundary(const BoundaryTrace& a) { return std::sqrt(std::max(0.0, inner_boundary(a, a))); }

double l2_error(const DgFunction& f, const ScalarFn& exact) {
  const auto& space = *f.space();
  const auto& w = space.cell_weights();
  double sum = 0.0;
  for (std::size_t c = 0; c < space.num_cells(); ++c) {
    const auto vals = space.cell_basis() * f.local(c);
    for (int q = 0; q < kCellPoints; ++q) {
      const Vec2 p = space.cell_point(c, q);
      const double d = vals(q) - exact(p.x(), p.y());
      sum += w[q] * d * d;
    }
  }
  return std::sqrt(sum);
}

Vec2 boundary_point(const DgSpace& space, std::size_t slot, int k) {
  const auto& mesh = space.mesh();
  const Edge& e = mesh.edge(static_cast<std::size_t>(mesh.boundary_edges().at(slot)));
  return e.point(DgSpace::gauss_nodes()[k]);
}

BoundaryTrace sample_boundary(const SpacePtr& space, const ScalarFn& func) {
  BoundaryTrace out(space);
  for (std::size_t s = 0; s < space->mesh().boundary_edges().size(); ++s) {
    for (int k = 0; k < kEdgePoints; ++k) {
      const Vec2 p = boundary_point(*space, s, k);
      out(s, k) = func(p.x(), p.y());
    }
  }
  return out;
}

BoundaryTrace trace(const DgFunction& f) {
  const auto& space = *f.space();
  const auto& mesh = space.mesh();
  BoundaryTrace out(f.space());
  for (std::size_t s = 0; s < mesh.boundary_edges().size(); ++s) {
    const Edge& e = mesh.edge(static_cast<std::size_t>(mesh.boundary_edges()[s]));
    const auto vals = space.face_basis(e.faces[0]) * f.local(static_cast<std::size_t>(e.cells[0]));
    for (int k = 0; k < kEdgePoints; ++k) out(s, k) = vals(k);
  }
  return out;
}

void write_center_csv(std::ostream& os, const DgFunction& f, const char* value_name) {
  const auto& mesh = f.space()->mesh();
  os << "x,y," << value_name << '\n';
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const Vec2 mid = mesh.cell(c).center();
    os << fmt::format("{:.10g},{:.10g},{:.12g}\n", mid.x(), mid.y(), f.local(c)(0));
  }
}

void write_coeff_csv(std::ostream& os, const DgFunction& f) {
  os << "cell,c0,c1,c2,c3,c4,c5\n";
  for (std::size_t c = 0; c < f.space()->num_cells(); ++c) {
    const auto v = f.local(c);
    os << fmt::format("{},{:.15g},{:.15g},{:.15g},{:.15g},{:.15g},{:.15g}\n", c, v(0), v(1), v(2),
                      v(3), v(4), v(5));
  }
}

}  // namespace eitdg

#include "eitdg/ldg.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <fmt/format.h>

namespace eitdg {

namespace {

using Triplet = Eigen::Triplet<double>;

Eigen::Index scalar_row(std::size_t cell, int i) {
  return static_cast<Eigen::Index>(kLocalDim * cell + static_cast<std::size_t>(i));
}

Eigen::Index flux_row(std::size_t cell, int c, int i) {
  return static_cast<Eigen::Index>(2 * kLocalDim * cell + static_cast<std::size_t>(kLocalDim * c + i));
}

int other_side(int side) { return 1 - side; }

}  // namespace

LdgDiscretization::LdgDiscretization(SpacePtr space, LdgOptions options)
    : space_(std::move(space)),
      options_(options),
      classes_(classify_edges(space_->mesh(), options.upwind)) {
  if (!(options_.alpha_stab_scale > 0.0)) {
    throw std::invalid_argument("LdgDiscretization: alpha_stab_scale must be positive");
  }
  const Mesh& mesh = space_->mesh();
  const auto n = static_cast<Eigen::Index>(space_->dim());
  const auto& w = space_->cell_weights();
  const auto wdiag = Eigen::Map<const Eigen::Matrix<double, kCellPoints, 1>>(w.data()).asDiagonal();
  alpha_stab_ = options_.alpha_stab_scale / mesh.h();

  // Volume part -(u, div w): entry (i, m) = -int dphi_i/dx_c phi_m.
  const LocalMatrix vol_x = -(space_->cell_dx().transpose() * wdiag * space_->cell_basis());
  const LocalMatrix vol_y = -(space_->cell_dy().transpose() * wdiag * space_->cell_basis());

  std::vector<Triplet> g;
  g.reserve(mesh.num_cells() * 2 * kLocalDim * kLocalDim * 4);
  for (std::size_t cell = 0; cell < mesh.num_cells(); ++cell) {
    for (int i = 0; i < kLocalDim; ++i) {
      for (int m = 0; m < kLocalDim; ++m) {
        g.emplace_back(flux_row(cell, 0, i), scalar_row(cell, m), vol_x(i, m));
        g.emplace_back(flux_row(cell, 1, i), scalar_row(cell, m), vol_y(i, m));
      }
    }
  }
  // Interior faces: <u_hat, w . n_K> with u_hat taken from the upwind cell.
  for (int e : mesh.interior_edges()) {
    const Edge& edge = mesh.edge(static_cast<std::size_t>(e));
    for (int side = 0; side < 2; ++side) {
      const auto cell = static_cast<std::size_t>(edge.cells[side]);
      const Face face = edge.faces[side];
      const Vec2 n = Mesh::face_normal(face);
      const int src_side = classes_.side_sign(e, side) > 0 ? side : other_side(side);
      const auto src_cell = static_cast<std::size_t>(edge.cells[src_side]);
      const EdgeBasisTable& test = space_->face_basis(face);
      const EdgeBasisTable& trial = space_->face_basis(edge.faces[src_side]);
      LocalMatrix block = LocalMatrix::Zero();
      for (int k = 0; k < kEdgePoints; ++k) {
        block += space_->edge_weight(edge, k) * test.row(k).transpose() * trial.row(k);
      }
      for (int i = 0; i < kLocalDim; ++i) {
        for (int m = 0; m < kLocalDim; ++m) {
          if (n.x() != 0.0) g.emplace_back(flux_row(cell, 0, i), scalar_row(src_cell, m), n.x() * block(i, m));
          if (n.y() != 0.0) g.emplace_back(flux_row(cell, 1, i), scalar_row(src_cell, m), n.y() * block(i, m));
        }
      }
    }
  }
  gradient_.resize(2 * n, n);
  gradient_.setFromTriplets(g.begin(), g.end());

  std::vector<Triplet> p;
  for (int e : classes_.outflow) {
    const Edge& edge = mesh.edge(static_cast<std::size_t>(e));
    const auto cell = static_cast<std::size_t>(edge.cells[0]);
    const EdgeBasisTable& phi = space_->face_basis(edge.faces[0]);
    LocalMatrix block = LocalMatrix::Zero();
    for (int k = 0; k < kEdgePoints; ++k) {
      block += space_->edge_weight(edge, k) * phi.row(k).transpose() * phi.row(k);
    }
    for (int i = 0; i < kLocalDim; ++i) {
      for (int m = 0; m < kLocalDim; ++m) p.emplace_back(scalar_row(cell, i), scalar_row(cell, m), block(i, m));
    }
  }
  outflow_mass_.resize(n, n);
  outflow_mass_.setFromTriplets(p.begin(), p.end());

  std::vector<Triplet> mt;
  std::vector<Triplet> minv;
  const LocalMatrix& mloc = space_->mass();
  const LocalMatrix& mloc_inv = space_->mass_inverse();
  for (std::size_t cell = 0; cell < mesh.num_cells(); ++cell) {
    for (int i = 0; i < kLocalDim; ++i) {
      for (int m = 0; m < kLocalDim; ++m) {
        mt.emplace_back(scalar_row(cell, i), scalar_row(cell, m), mloc(i, m));
        for (int c = 0; c < 2; ++c) minv.emplace_back(flux_row(cell, c, i), flux_row(cell, c, m), mloc_inv(i, m));
      }
    }
  }
  mass_.resize(n, n);
  mass_.setFromTriplets(mt.begin(), mt.end());
  SparseMatrix flux_mass_inv(2 * n, 2 * n);
  flux_mass_inv.setFromTriplets(minv.begin(), minv.end());
  stiffness_ = SparseMatrix(gradient_.transpose() * (flux_mass_inv * gradient_));
}

std::shared_ptr<const LdgDiscretization> LdgDiscretization::create(SpacePtr space, LdgOptions options) {
  return std::make_shared<const LdgDiscretization>(std::move(space), options);
}

Eigen::VectorXd LdgDiscretization::boundary_lift(const BoundaryTrace& b) const {
  require_same_space(space_, b.space(), "boundary_lift");
  const Mesh& mesh = space_->mesh();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(space_->dim()));
  for (std::size_t s = 0; s < mesh.boundary_edges().size(); ++s) {
    const Edge& edge = mesh.edge(static_cast<std::size_t>(mesh.boundary_edges()[s]));
    const auto cell = static_cast<std::size_t>(edge.cells[0]);
    const EdgeBasisTable& phi = space_->face_basis(edge.faces[0]);
    LocalVector acc = LocalVector::Zero();
    for (int k = 0; k < kEdgePoints; ++k) acc += (space_->edge_weight(edge, k) * b(s, k)) * phi.row(k).transpose();
    out.segment<kLocalDim>(flux_row(cell, 0, 0)) += edge.normal.x() * acc;
    out.segment<kLocalDim>(flux_row(cell, 1, 0)) += edge.normal.y() * acc;
  }
  return out;
}

Eigen::VectorXd LdgDiscretization::penalty_load(const BoundaryTrace& b) const {
  require_same_space(space_, b.space(), "penalty_load");
  const Mesh& mesh = space_->mesh();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space_->dim()));
  for (int e : classes_.outflow) {
    const Edge& edge = mesh.edge(static_cast<std::size_t>(e));
    const auto slot = static_cast<std::size_t>(mesh.boundary_slot(e));
    const auto cell = static_cast<std::size_t>(edge.cells[0]);
    const EdgeBasisTable& phi = space_->face_basis(edge.faces[0]);
    for (int k = 0; k < kEdgePoints; ++k) {
      out.segment<kLocalDim>(scalar_row(cell, 0)) +=
          (alpha_stab_ * space_->edge_weight(edge, k) * b(slot, k)) * phi.row(k).transpose();
    }
  }
  return out;
}

FluxField LdgDiscretization::lifted_gradient(const DgFunction& f, bool zero_trace) const {
  require_same_space(space_, f.space(), "lifted_gradient");
  Eigen::VectorXd load = gradient_ * f.coeffs();
  if (!zero_trace) load += boundary_lift(trace(f));
  FluxField out(space_);
  const LocalMatrix& minv = space_->mass_inverse();
  for (std::size_t cell = 0; cell < space_->num_cells(); ++cell) {
    for (int c = 0; c < 2; ++c) {
      out.component(cell, c) = minv * load.segment<kLocalDim>(flux_row(cell, c, 0));
    }
  }
  return out;
}

BoundaryTrace LdgDiscretization::boundary_flux(const DgFunction& u, const FluxField& q,
                                               const BoundaryTrace* dirichlet) const {
  require_same_space(space_, u.space(), "boundary_flux");
  require_same_space(space_, q.space(), "boundary_flux");
  const Mesh& mesh = space_->mesh();
  BoundaryTrace out(space_);
  for (std::size_t s = 0; s < mesh.boundary_edges().size(); ++s) {
    const int e = mesh.boundary_edges()[s];
    const Edge& edge = mesh.edge(static_cast<std::size_t>(e));
    const auto cell = static_cast<std::size_t>(edge.cells[0]);
    const EdgeBasisTable& phi = space_->face_basis(edge.faces[0]);
    const auto qn = (edge.normal.x() * (phi * q.component(cell, 0)) +
                     edge.normal.y() * (phi * q.component(cell, 1))).eval();
    const bool outflow = classes_.sign[static_cast<std::size_t>(e)] > 0;
    const auto uh = (phi * u.local(cell)).eval();
    for (int k = 0; k < kEdgePoints; ++k) {
      double v = qn(k);
      if (outflow) v -= alpha_stab_ * (uh(k) - (dirichlet ? (*dirichlet)(s, k) : 0.0));
      out(s, k) = v;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

LdgOperator::LdgOperator(DiscretizationPtr disc, const DgFunction& sigma, double reaction)
    : disc_(std::move(disc)), sigma_(sigma), reaction_(reaction) {
  const SpacePtr& space = disc_->space();
  require_same_space(space, sigma.space(), "LdgOperator");
  if (!(reaction >= 0.0)) {
    throw std::invalid_argument(fmt::format("LdgOperator: reaction must be nonnegative (got {})", reaction));
  }
  sigma_qp_ = quadrature_values(sigma_);
  for (Eigen::Index c = 0; c < sigma_qp_.rows(); ++c) {
    for (int q = 0; q < kCellPoints; ++q) {
      const double s = sigma_qp_(c, q);
      if (!(s > 0.0) || !std::isfinite(s)) {
        const Vec2 p = space->cell_point(static_cast<std::size_t>(c), q);
        throw CoefficientRangeError(
            fmt::format("conductivity {} at ({:.6g}, {:.6g}) in cell {} is not positive", s, p.x(), p.y(), c));
      }
    }
  }

  const auto& w = space->cell_weights();
  const auto& phi = space->cell_basis();
  weighted_mass_inv_.resize(space->num_cells());
  std::vector<Eigen::Triplet<double>> minv;
  minv.reserve(space->num_cells() * 2 * kLocalDim * kLocalDim);
  for (std::size_t cell = 0; cell < space->num_cells(); ++cell) {
    Eigen::Matrix<double, kCellPoints, 1> wq;
    for (int q = 0; q < kCellPoints; ++q) wq(q) = w[q] / sigma_qp_(static_cast<Eigen::Index>(cell), q);
    const LocalMatrix m = phi.transpose() * wq.asDiagonal() * phi;
    weighted_mass_inv_[cell] = m.llt().solve(LocalMatrix::Identity());
    for (int i = 0; i < kLocalDim; ++i) {
      for (int j = 0; j < kLocalDim; ++j) {
        for (int c = 0; c < 2; ++c) {
          minv.emplace_back(flux_row(cell, c, i), flux_row(cell, c, j), weighted_mass_inv_[cell](i, j));
        }
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(space->dim());
  SparseMatrix flux_mass_inv(2 * n, 2 * n);
  flux_mass_inv.setFromTriplets(minv.begin(), minv.end());

  const SparseMatrix& g = disc_->gradient();
  reduced_ = SparseMatrix(g.transpose() * (flux_mass_inv * g));
  reduced_ += disc_->alpha_stab() * disc_->outflow_mass();
  if (reaction_ > 0.0) reduced_ += reaction_ * disc_->mass();
  reduced_.makeCompressed();

  factor_.compute(reduced_);
  if (factor_.info() != Eigen::Success) {
    throw SolverError(fmt::format("LDG factorization failed on {}x{} mesh", space->mesh().nx(), space->mesh().ny()));
  }
  const Eigen::VectorXd d = factor_.vectorD().cwiseAbs();
  pivot_ratio_ = d.minCoeff() > 0.0 ? d.maxCoeff() / d.minCoeff() : std::numeric_limits<double>::infinity();
  if (!std::isfinite(pivot_ratio_) || pivot_ratio_ > 1e15) {
    throw SolverError(fmt::format("LDG reduced operator is numerically singular (pivot ratio {:.3e})", pivot_ratio_));
  }
}

Eigen::VectorXd LdgOperator::recover_flux(const Eigen::VectorXd& u, const Eigen::VectorXd& load) const {
  Eigen::VectorXd rhs = disc_->gradient() * u + load;
  Eigen::VectorXd q(rhs.size());
  for (std::size_t cell = 0; cell < weighted_mass_inv_.size(); ++cell) {
    for (int c = 0; c < 2; ++c) {
      const auto r = flux_row(cell, c, 0);
      q.segment<kLocalDim>(r) = weighted_mass_inv_[cell] * rhs.segment<kLocalDim>(r);
    }
  }
  return q;
}

LdgSolution LdgOperator::solve(const LdgData& data) const {
  const SpacePtr& space = disc_->space();
  const auto n = static_cast<Eigen::Index>(space->dim());
  const auto& w = space->cell_weights();
  const auto& phi = space->cell_basis();

  // Load of the first equation: boundary lift plus (sigma^{-1} z, w).
  Eigen::VectorXd flux_load = Eigen::VectorXd::Zero(2 * n);
  if (data.dirichlet) flux_load += disc_->boundary_lift(*data.dirichlet);
  if (data.flux_offset) {
    const auto& z = *data.flux_offset;
    for (std::size_t cell = 0; cell < space->num_cells(); ++cell) {
      const auto row = static_cast<Eigen::Index>(cell);
      LocalVector ax = LocalVector::Zero();
      LocalVector ay = LocalVector::Zero();
      for (int q = 0; q < kCellPoints; ++q) {
        const double scale = w[q] / sigma_qp_(row, q);
        ax += (scale * z.x(row, q)) * phi.row(q).transpose();
        ay += (scale * z.y(row, q)) * phi.row(q).transpose();
      }
      flux_load.segment<kLocalDim>(flux_row(cell, 0, 0)) += ax;
      flux_load.segment<kLocalDim>(flux_row(cell, 1, 0)) += ay;
    }
  }

  // Load of the second equation.
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  if (data.source) {
    require_same_space(space, data.source->space(), "LdgOperator::solve");
    rhs += disc_->mass() * data.source->coeffs();
  }
  if (data.source_samples) {
    for (std::size_t cell = 0; cell < space->num_cells(); ++cell) {
      LocalVector acc = LocalVector::Zero();
      for (int q = 0; q < kCellPoints; ++q) {
        acc += (w[q] * (*data.source_samples)(static_cast<Eigen::Index>(cell), q)) * phi.row(q).transpose();
      }
      rhs.segment<kLocalDim>(scalar_row(cell, 0)) += acc;
    }
  }
  if (data.dirichlet) rhs += disc_->penalty_load(*data.dirichlet);
  if (flux_load.squaredNorm() > 0.0) {
    Eigen::VectorXd tmp(flux_load.size());
    for (std::size_t cell = 0; cell < weighted_mass_inv_.size(); ++cell) {
      for (int c = 0; c < 2; ++c) {
        const auto r = flux_row(cell, c, 0);
        tmp.segment<kLocalDim>(r) = weighted_mass_inv_[cell] * flux_load.segment<kLocalDim>(r);
      }
    }
    rhs -= disc_->gradient().transpose() * tmp;
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  const double rhs_norm = rhs.norm();
  if (rhs_norm > 0.0) {
    u = factor_.solve(rhs);
    double rel = (reduced_ * u - rhs).norm() / rhs_norm;
    for (int sweep = 0; sweep < 2 && rel > 1e-12; ++sweep) {
      u += factor_.solve(rhs - reduced_ * u);
      rel = (reduced_ * u - rhs).norm() / rhs_norm;
    }
    if (!(rel <= 1e-10)) {
      throw SolverError(fmt::format("LDG solve residual {:.3e} above 1e-10 (pivot ratio {:.3e})", rel, pivot_ratio_));
    }
  }

  DgFunction uh(space, u);
  FluxField qh(space, recover_flux(u, flux_load));
  BoundaryTrace flux = disc_->boundary_flux(uh, qh, data.dirichlet);
  return LdgSolution{std::move(uh), std::move(qh), std::move(flux)};
}

// ---------------------------------------------------------------------------

LdgSystem assemble(const SpacePtr& space, const EllipticProblem& problem, const LdgOptions& options) {
  auto disc = LdgDiscretization::create(space, options);
  auto op = std::make_shared<const LdgOperator>(disc, problem.sigma, problem.reaction);
  return LdgSystem{std::move(op), problem.source, problem.dirichlet};
}

LdgSolution solve(const LdgSystem& system) {
  LdgData data;
  data.source = &system.source;
  data.dirichlet = &system.dirichlet;
  return system.op->solve(data);
}

BoundaryTrace boundary_flux(const LdgSystem& system, const DgFunction& u, const FluxField& q) {
  return system.op->discretization()->boundary_flux(u, q, &system.dirichlet);
}

FluxField lifted_gradient(const DgFunction& f, bool zero_trace, const LdgOptions& options) {
  return LdgDiscretization(f.space(), options).lifted_gradient(f, zero_trace);
}

}  // namespace eitdg

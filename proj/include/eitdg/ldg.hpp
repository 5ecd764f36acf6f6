#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "eitdg/dg_space.hpp"

namespace eitdg {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// sigma left the admissible range (non-positive or non-finite somewhere).
class CoefficientRangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization failed or the residual check did not pass.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LdgOptions {
  Vec2 upwind{1.0, 1.0};
  /// Outflow boundary penalty is alpha_stab_scale / h.
  double alpha_stab_scale = 1.0;
};

/// Vector field sampled at cell quadrature points.
struct VectorQuadratureField {
  QuadratureField x;
  QuadratureField y;
};

/// Coefficient-independent part of the minimal-dissipation LDG scheme.
///
/// Fluxes, with beta . n_K = sign(v . n_K) / 2:
///   interior:  u_hat = {u} + beta . [[u]]   (value from the upwind cell)
///              q_hat = {q} - beta [[q]]     (normal flux from the downwind cell)
///   boundary:  u_hat = b
///              q_hat = q_h                             on inflow edges
///              q_hat = q_h - alpha_stab (u_h - b) n    on outflow edges
///
/// In matrix form the first equation reads M_sigma q = G u + lift(b) and the
/// second G^T q + alpha_stab P u + c M u = (r, v) + alpha_stab P b, so the
/// reduced operator G^T M_sigma^{-1} G + alpha_stab P + c M is symmetric.
class LdgDiscretization {
 public:
  LdgDiscretization(SpacePtr space, LdgOptions options = {});
  static std::shared_ptr<const LdgDiscretization> create(SpacePtr space, LdgOptions options = {});

  const SpacePtr& space() const { return space_; }
  const LdgOptions& options() const { return options_; }
  const EdgeClassification& classification() const { return classes_; }
  double alpha_stab() const { return alpha_stab_; }

  /// G: rows (cell, component, test), columns (cell, trial); homogeneous boundary.
  const SparseMatrix& gradient() const { return gradient_; }
  /// P: outflow-boundary mass, without the alpha_stab factor.
  const SparseMatrix& outflow_mass() const { return outflow_mass_; }
  /// Block-diagonal scalar mass matrix.
  const SparseMatrix& mass() const { return mass_; }
  /// Zero-trace stiffness G^T M^{-1} G with unit coefficient.
  const SparseMatrix& stiffness() const { return stiffness_; }

  /// Boundary contribution of Dirichlet data to the first equation: int_e b w.n.
  Eigen::VectorXd boundary_lift(const BoundaryTrace& b) const;
  /// alpha_stab * int_{outflow} b v.
  Eigen::VectorXd penalty_load(const BoundaryTrace& b) const;

  /// Unit-coefficient auxiliary variable for f (discrete gradient including
  /// interface lifting). zero_trace uses b = 0 on the boundary, otherwise b = trace(f).
  FluxField lifted_gradient(const DgFunction& f, bool zero_trace) const;

  /// Normal component of the numerical flux q_hat on boundary quadrature points.
  BoundaryTrace boundary_flux(const DgFunction& u, const FluxField& q,
                              const BoundaryTrace* dirichlet) const;

 private:
  SpacePtr space_;
  LdgOptions options_;
  EdgeClassification classes_;
  double alpha_stab_;
  SparseMatrix gradient_;
  SparseMatrix outflow_mass_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
};

using DiscretizationPtr = std::shared_ptr<const LdgDiscretization>;

/// Right-hand data for one solve. Absent members are zero.
struct LdgData {
  const DgFunction* source = nullptr;               // r
  const QuadratureField* source_samples = nullptr;  // r at quadrature points (added to source)
  const BoundaryTrace* dirichlet = nullptr;         // b
  /// z in q = sigma grad u + z (enters as the weak source -div z).
  const VectorQuadratureField* flux_offset = nullptr;
};

struct LdgSolution {
  DgFunction u;
  FluxField q;
  BoundaryTrace flux;  // q_hat . nu on the boundary
};

/// Factorized reduced operator for a fixed coefficient sigma and reaction c.
/// Immutable after construction; solve() may run concurrently.
class LdgOperator {
 public:
  LdgOperator(DiscretizationPtr disc, const DgFunction& sigma, double reaction = 0.0);

  const DiscretizationPtr& discretization() const { return disc_; }
  const SpacePtr& space() const { return disc_->space(); }
  const DgFunction& sigma() const { return sigma_; }
  double reaction() const { return reaction_; }
  const QuadratureField& sigma_samples() const { return sigma_qp_; }
  const SparseMatrix& reduced_matrix() const { return reduced_; }

  LdgSolution solve(const LdgData& data) const;

  /// Ratio of the extreme pivots of the LDL^T factorization.
  double pivot_ratio() const { return pivot_ratio_; }

 private:
  Eigen::VectorXd recover_flux(const Eigen::VectorXd& u, const Eigen::VectorXd& load) const;

  DiscretizationPtr disc_;
  DgFunction sigma_;
  double reaction_;
  QuadratureField sigma_qp_;
  std::vector<LocalMatrix> weighted_mass_inv_;  // (sigma^{-1} phi_i, phi_j)^{-1} per cell
  SparseMatrix reduced_;
  Eigen::SimplicialLDLT<SparseMatrix> factor_;
  double pivot_ratio_ = 0.0;
};

using OperatorPtr = std::shared_ptr<const LdgOperator>;

/// div(sigma grad u) - c u = -r in the box, u = b on the boundary.
struct EllipticProblem {
  DgFunction sigma;
  double reaction = 0.0;
  DgFunction source;
  BoundaryTrace dirichlet;
};

struct LdgSystem {
  OperatorPtr op;
  DgFunction source;
  BoundaryTrace dirichlet;
};

LdgSystem assemble(const SpacePtr& space, const EllipticProblem& problem, const LdgOptions& options = {});
LdgSolution solve(const LdgSystem& system);
BoundaryTrace boundary_flux(const LdgSystem& system, const DgFunction& u, const FluxField& q);
FluxField lifted_gradient(const DgFunction& f, bool zero_trace, const LdgOptions& options = {});

}  // namespace eitdg

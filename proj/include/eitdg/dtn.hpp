#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "eitdg/ldg.hpp"

namespace eitdg {

/// u solving div(sigma grad u) = 0 with u = f, its flux q = sigma grad u and
/// the boundary current F(sigma, f) = q_hat . nu.
struct ForwardResult {
  DgFunction u;
  FluxField q;
  BoundaryTrace current;
};

class ForwardCache;

/// Mesh-level pieces shared by every linearization point: the LDG
/// discretization and the factorized Sobolev operator -Laplace + Id with zero trace.
/// Must be owned by a shared_ptr (use create()); caches keep their model alive.
class DtnModel : public std::enable_shared_from_this<DtnModel> {
 public:
  explicit DtnModel(SpacePtr space, LdgOptions options = {});
  static std::shared_ptr<const DtnModel> create(SpacePtr space, LdgOptions options = {});

  const SpacePtr& space() const { return disc_->space(); }
  const DiscretizationPtr& discretization() const { return disc_; }
  const OperatorPtr& sobolev() const { return sobolev_; }

  /// H1 inner product matching the adjoint: coefficient form of the Sobolev operator.
  double inner_h1(const DgFunction& a, const DgFunction& b) const;
  /// (Id - Laplace) p as a DG function, i.e. M^{-1} S p.
  DgFunction apply_sobolev(const DgFunction& p) const;

  /// Factorizes the sigma problem once and solves it for every boundary voltage.
  ForwardCache linearize(const DgFunction& sigma, const std::vector<BoundaryTrace>& voltages) const;

  ForwardResult forward(const LdgOperator& op, const BoundaryTrace& voltage) const;

 private:
  DiscretizationPtr disc_;
  OperatorPtr sobolev_;
};

/// Forward solutions for one conductivity; immutable and shareable across threads.
class ForwardCache {
 public:
  ForwardCache(std::shared_ptr<const DtnModel> model, OperatorPtr op, std::vector<BoundaryTrace> voltages,
               std::vector<ForwardResult> results);

  const DtnModel& model() const { return *model_; }
  const std::shared_ptr<const DtnModel>& model_ptr() const { return model_; }
  const LdgOperator& op() const { return *op_; }
  const DgFunction& sigma() const { return op_->sigma(); }
  std::size_t size() const { return results_.size(); }
  const BoundaryTrace& voltage(std::size_t j) const { return voltages_.at(j); }
  const ForwardResult& result(std::size_t j) const { return results_.at(j); }
  const BoundaryTrace& current(std::size_t j) const { return results_.at(j).current; }
  /// grad u_j = q_j / sigma at cell quadrature points.
  const VectorQuadratureField& grad_u(std::size_t j) const { return grad_u_.at(j); }

 private:
  std::shared_ptr<const DtnModel> model_;
  OperatorPtr op_;
  std::vector<BoundaryTrace> voltages_;
  std::vector<ForwardResult> results_;
  std::vector<VectorQuadratureField> grad_u_;
};

/// q / sigma sampled at cell quadrature points.
VectorQuadratureField gradient_samples(const LdgOperator& op, const FluxField& q);

ForwardResult forward_map(const DgFunction& sigma, const BoundaryTrace& voltage, const LdgOptions& options = {});

/// Builds a cache for `sigma` using a fresh model on sigma's space.
ForwardCache make_forward_cache(const DgFunction& sigma, const std::vector<BoundaryTrace>& voltages,
                                const LdgOptions& options = {});

/// DF(sigma, f_j) dsigma = sigma d(du)/dnu, where div(sigma grad du) = -div(dsigma grad u_j), du = 0.
BoundaryTrace df_apply(const ForwardCache& cache, std::size_t j, const DgFunction& dsigma);

/// (DF)^*(sigma, f_j) phi: the Sobolev gradient w with -Laplace w + w = grad u_j . grad u^*,
/// w = 0 on the boundary, where u^* solves the sigma problem with boundary value phi.
DgFunction df_adjoint_apply(const ForwardCache& cache, std::size_t j, const BoundaryTrace& phi);

}  // namespace eitdg

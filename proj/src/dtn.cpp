#include "eitdg/dtn.hpp"

#include <fmt/format.h>

#include "eitdg/parallel.hpp"

namespace eitdg {

namespace {

OperatorPtr make_sobolev(const DiscretizationPtr& disc) {
  DgFunction one = project(disc->space(), [](double, double) { return 1.0; });
  return std::make_shared<const LdgOperator>(disc, one, 1.0);
}

}  // namespace

DtnModel::DtnModel(SpacePtr space, LdgOptions options)
    : disc_(LdgDiscretization::create(std::move(space), options)), sobolev_(make_sobolev(disc_)) {}

std::shared_ptr<const DtnModel> DtnModel::create(SpacePtr space, LdgOptions options) {
  return std::make_shared<const DtnModel>(std::move(space), options);
}

double DtnModel::inner_h1(const DgFunction& a, const DgFunction& b) const {
  require_same_space(space(), a.space(), "inner_h1");
  require_same_space(space(), b.space(), "inner_h1");
  return a.coeffs().dot(sobolev_->reduced_matrix() * b.coeffs());
}

DgFunction DtnModel::apply_sobolev(const DgFunction& p) const {
  require_same_space(space(), p.space(), "apply_sobolev");
  const Eigen::VectorXd load = sobolev_->reduced_matrix() * p.coeffs();
  DgFunction out(space());
  const LocalMatrix& minv = space()->mass_inverse();
  for (std::size_t cell = 0; cell < space()->num_cells(); ++cell) {
    out.local(cell) = minv * load.segment<kLocalDim>(static_cast<Eigen::Index>(kLocalDim * cell));
  }
  return out;
}

ForwardResult DtnModel::forward(const LdgOperator& op, const BoundaryTrace& voltage) const {
  require_same_space(space(), voltage.space(), "forward");
  LdgData data;
  data.dirichlet = &voltage;
  LdgSolution sol = op.solve(data);
  return ForwardResult{std::move(sol.u), std::move(sol.q), std::move(sol.flux)};
}

ForwardCache DtnModel::linearize(const DgFunction& sigma, const std::vector<BoundaryTrace>& voltages) const {
  auto op = std::make_shared<const LdgOperator>(disc_, sigma, 0.0);
  std::vector<ForwardResult> results(voltages.size(), ForwardResult{DgFunction(space()), FluxField(space()),
                                                                     BoundaryTrace(space())});
  parallel_for(voltages.size(), [&](std::size_t j) { results[j] = forward(*op, voltages[j]); });
  return ForwardCache(shared_from_this(), std::move(op), voltages, std::move(results));
}

ForwardCache::ForwardCache(std::shared_ptr<const DtnModel> model, OperatorPtr op,
                           std::vector<BoundaryTrace> voltages, std::vector<ForwardResult> results)
    : model_(std::move(model)), op_(std::move(op)), voltages_(std::move(voltages)), results_(std::move(results)) {
  if (voltages_.size() != results_.size()) throw std::invalid_argument("ForwardCache: size mismatch");
  grad_u_.reserve(results_.size());
  for (const auto& r : results_) grad_u_.push_back(gradient_samples(*op_, r.q));
}

VectorQuadratureField gradient_samples(const LdgOperator& op, const FluxField& q) {
  const SpacePtr& space = op.space();
  require_same_space(space, q.space(), "gradient_samples");
  const auto n = static_cast<Eigen::Index>(space->num_cells());
  VectorQuadratureField out{QuadratureField(n, kCellPoints), QuadratureField(n, kCellPoints)};
  const auto& phi = space->cell_basis();
  for (Eigen::Index cell = 0; cell < n; ++cell) {
    const auto c = static_cast<std::size_t>(cell);
    out.x.row(cell) = (phi * q.component(c, 0)).transpose();
    out.y.row(cell) = (phi * q.component(c, 1)).transpose();
  }
  out.x.array() /= op.sigma_samples().array();
  out.y.array() /= op.sigma_samples().array();
  return out;
}

ForwardResult forward_map(const DgFunction& sigma, const BoundaryTrace& voltage, const LdgOptions& options) {
  auto disc = LdgDiscretization::create(sigma.space(), options);
  LdgOperator op(disc, sigma, 0.0);
  LdgData data;
  data.dirichlet = &voltage;
  LdgSolution sol = op.solve(data);
  return ForwardResult{std::move(sol.u), std::move(sol.q), std::move(sol.flux)};
}

ForwardCache make_forward_cache(const DgFunction& sigma, const std::vector<BoundaryTrace>& voltages,
                                const LdgOptions& options) {
  return DtnModel::create(sigma.space(), options)->linearize(sigma, voltages);
}

BoundaryTrace df_apply(const ForwardCache& cache, std::size_t j, const DgFunction& dsigma) {
  require_same_space(cache.model().space(), dsigma.space(), "df_apply");
  const VectorQuadratureField& g = cache.grad_u(j);
  const QuadratureField ds = quadrature_values(dsigma);
  VectorQuadratureField z{(ds.array() * g.x.array()).matrix(), (ds.array() * g.y.array()).matrix()};
  LdgData data;
  data.flux_offset = &z;
  return cache.op().solve(data).flux;
}

DgFunction df_adjoint_apply(const ForwardCache& cache, std::size_t j, const BoundaryTrace& phi) {
  require_same_space(cache.model().space(), phi.space(), "df_adjoint_apply");
  const ForwardResult adj = cache.model().forward(cache.op(), phi);
  const VectorQuadratureField ga = gradient_samples(cache.op(), adj.q);
  const VectorQuadratureField& g = cache.grad_u(j);
  const QuadratureField s = (g.x.array() * ga.x.array() + g.y.array() * ga.y.array()).matrix();
  LdgData data;
  data.source_samples = &s;
  return cache.model().sobolev()->solve(data).u;
}

}  // namespace eitdg
